//! Optimizers for small blocks: incentive LPs, deterministic table search and
//! single-bidder menu searches.

pub mod eps_dt;
pub mod lp;
pub mod menus;
pub mod simplex;

pub use eps_dt::{eps_dt_search, EpsDtResult};
pub use lp::{build_lp, solve_lp, LpConcept, LpModel, LpSolution};
pub use menus::{bundle_price_search, lottery_menu_search, price_grid, probability_grid, MenuSearch, MenuSearchOptions};
