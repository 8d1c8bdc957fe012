use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Profile;
use crate::typespace::TypeSpace;

use super::{dot, Outcome, SolutionConcept};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableSource {
    Lp,
    EpsDt,
}

/// A mechanism given as an explicit allocation/payment table over a finite
/// type space. Bids are snapped down onto the type space before lookup; with
/// `gridStep` they are first floored to a multiple of the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableMechanism {
    pub source: TableSource,
    pub concept: SolutionConcept,
    pub types: TypeSpace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    /// `alloc[p][i][j]` for profile index `p`.
    pub alloc: Vec<Vec<Vec<f64>>>,
    /// `payments[p][i]`.
    pub payments: Vec<Vec<f64>>,
    /// Expected revenue over the type space the table was solved on.
    pub objective: f64,
    pub regret_bound: f64,
}

/// Floor to a multiple of `step`, tolerant to representation error just below a multiple.
pub fn floor_to_step(v: f64, step: f64) -> f64 {
    (v / step + 1e-9).floor() * step
}

impl TableMechanism {
    pub fn name(&self) -> &'static str {
        match self.source {
            TableSource::Lp => "lp_table",
            TableSource::EpsDt => "eps_dt_table",
        }
    }

    pub fn run(&self, bids: &Profile) -> Result<Outcome> {
        if bids.len() != self.types.n_bidders() {
            return Err(Error::invalid(format!(
                "table mechanism expects {} bidders, got {}",
                self.types.n_bidders(),
                bids.len()
            )));
        }
        let snapped: Profile = match self.grid_step {
            Some(step) => bids.iter().map(|row| row.iter().map(|&b| floor_to_step(b, step)).collect()).collect(),
            None => bids.clone(),
        };
        let p = self.types.snap_profile(&snapped);
        Ok(Outcome {
            alloc: self.alloc[p].clone(),
            payments: self.payments[p].clone(),
            completions: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MenuKind {
    Bundle,
    Lottery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuEntry {
    /// Per-item allocation probabilities (0/1 for bundles).
    pub q: Vec<f64>,
    pub price: f64,
}

/// Single-bidder menu. The buyer takes an entry maximizing `q . b - price`
/// when that is nonnegative; ties go to the higher price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MenuMechanism {
    pub kind: MenuKind,
    pub n_items: usize,
    pub entries: Vec<MenuEntry>,
}

/// Tolerance under which two buyer utilities count as tied.
pub(crate) const TIE: f64 = 1e-12;

/// Whether `(u, price)` beats the incumbent under the seller-favorable tie rule.
pub(crate) fn buyer_prefers(u: f64, price: f64, best_u: f64, best_price: f64) -> bool {
    u > best_u + TIE || (u >= best_u - TIE && price > best_price)
}

impl MenuMechanism {
    pub fn name(&self) -> &'static str {
        match self.kind {
            MenuKind::Bundle => "bundle_menu",
            MenuKind::Lottery => "lottery_menu",
        }
    }

    /// Bundles are deterministic, so the menu is DT; lottery menus are truthful
    /// in expectation over the lottery.
    pub fn concept(&self) -> SolutionConcept {
        match self.kind {
            MenuKind::Bundle => SolutionConcept::Dt,
            MenuKind::Lottery => SolutionConcept::Ic,
        }
    }

    /// The entry the buyer takes, if any.
    pub fn choose(&self, values: &[f64]) -> Option<usize> {
        let (mut best, mut best_u, mut best_price) = (None, 0.0, 0.0);
        for (k, e) in self.entries.iter().enumerate() {
            let u = dot(&e.q, values) - e.price;
            if buyer_prefers(u, e.price, best_u, best_price) {
                best = Some(k);
                best_u = u;
                best_price = e.price;
            }
        }
        best
    }

    pub fn revenue_at(&self, values: &[f64]) -> f64 {
        self.choose(values).map_or(0.0, |k| self.entries[k].price)
    }

    pub fn run(&self, bids: &Profile) -> Result<Outcome> {
        if bids.len() != 1 {
            return Err(Error::invalid(format!("menus sell to a single bidder, got {} bidders", bids.len())));
        }
        let mut out = Outcome::empty(1, self.n_items);
        if let Some(k) = self.choose(&bids[0]) {
            out.alloc[0] = self.entries[k].q.clone();
            out.payments[0] = self.entries[k].price;
        }
        Ok(out)
    }
}
