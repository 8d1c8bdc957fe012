//! Executable mechanisms: allocation and payment rules over bid profiles.
//!
//! Every mechanism is a plain, serializable value. A saved mechanism file can
//! be reloaded and replayed by the audit harness.

mod compose;
pub mod pipeline;
mod rules;
pub mod table;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::ValueDistribution;
use crate::error::{Error, Result};
use crate::instance::Profile;
use crate::rng::{derive_seed, stream_rng, AuctionRng};

pub use compose::{combine, restrict_to_subset, Block};
pub use pipeline::{build_ptas_mechanism, build_with_partition, BuiltMechanism, PipelineOptions};
pub use rules::{grand_bundle, reserve_welfare, second_price_reserve};
pub use table::{MenuEntry, MenuKind, MenuMechanism, TableMechanism};

/// Incentive guarantee a mechanism claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolutionConcept {
    #[serde(rename = "DT")]
    Dt,
    #[serde(rename = "IC")]
    Ic,
    #[serde(rename = "BIC")]
    Bic,
    #[serde(rename = "eps-DT")]
    EpsDt,
    #[serde(rename = "eps-IC")]
    EpsIc,
    #[serde(rename = "eps-BIC")]
    EpsBic,
}

impl SolutionConcept {
    pub fn is_approximate(self) -> bool {
        matches!(self, SolutionConcept::EpsDt | SolutionConcept::EpsIc | SolutionConcept::EpsBic)
    }

    /// Whether the guarantee is averaged over opponents' priors.
    pub fn is_bayesian(self) -> bool {
        matches!(self, SolutionConcept::Bic | SolutionConcept::EpsBic)
    }

    pub fn approximate(self) -> Self {
        match self {
            SolutionConcept::Dt | SolutionConcept::EpsDt => SolutionConcept::EpsDt,
            SolutionConcept::Ic | SolutionConcept::EpsIc => SolutionConcept::EpsIc,
            SolutionConcept::Bic | SolutionConcept::EpsBic => SolutionConcept::EpsBic,
        }
    }

    fn rank(self) -> u8 {
        match self {
            SolutionConcept::Dt | SolutionConcept::EpsDt => 0,
            SolutionConcept::Ic | SolutionConcept::EpsIc => 1,
            SolutionConcept::Bic | SolutionConcept::EpsBic => 2,
        }
    }

    /// The strongest concept implied by both.
    pub fn weakest(self, other: Self) -> Self {
        let base = if self.rank() >= other.rank() { self } else { other };
        if self.is_approximate() || other.is_approximate() {
            base.approximate()
        } else {
            base
        }
    }
}

impl fmt::Display for SolutionConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolutionConcept::Dt => "DT",
            SolutionConcept::Ic => "IC",
            SolutionConcept::Bic => "BIC",
            SolutionConcept::EpsDt => "eps-DT",
            SolutionConcept::EpsIc => "eps-IC",
            SolutionConcept::EpsBic => "eps-BIC",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// `alloc[i][j]`, the probability bidder `i` receives item `j`.
    pub alloc: Vec<Vec<f64>>,
    pub payments: Vec<f64>,
    /// Value profiles sampled internally by subset-restricted blocks, in block order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub completions: Vec<Profile>,
}

impl Outcome {
    pub fn empty(bidders: usize, items: usize) -> Self {
        Outcome {
            alloc: vec![vec![0.0; items]; bidders],
            payments: vec![0.0; bidders],
            completions: Vec::new(),
        }
    }

    pub fn revenue(&self) -> f64 {
        self.payments.iter().sum()
    }

    /// `v_i . x_i - p_i` for a truthful valuation `values`.
    pub fn utility(&self, values: &Profile, bidder: usize) -> f64 {
        dot(&values[bidder], &self.alloc[bidder]) - self.payments[bidder]
    }

    /// `sum_i v_i . x_i`.
    pub fn welfare(&self, values: &Profile) -> f64 {
        values.iter().zip(&self.alloc).map(|(v, x)| dot(v, x)).sum()
    }

    pub fn is_feasible(&self) -> bool {
        let n = self.alloc.first().map_or(0, Vec::len);
        (0..n).all(|j| self.alloc.iter().map(|row| row[j]).sum::<f64>() <= 1.0 + 1e-9)
            && self.alloc.iter().flatten().all(|x| (-1e-9..=1.0 + 1e-9).contains(x))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Mechanism {
    /// Single bidder: all items at `reserve` when the reported total reaches it.
    GrandBundle { reserve: f64 },
    /// Welfare-maximizing allocation when reported welfare reaches `sHat`,
    /// with threshold payments.
    ReserveWelfare {
        #[serde(rename = "sHat")]
        s_hat: f64,
    },
    /// Independent second-price auctions with per-item reserves.
    SecondPriceReserve { reserves: Vec<f64> },
    /// Disjoint item blocks, each sold by its own mechanism; `ignored` items are never sold.
    Combined {
        #[serde(rename = "nItems")]
        n_items: usize,
        blocks: Vec<Block>,
        ignored: Vec<usize>,
    },
    /// `inner` runs over all `nItems` items; bids arrive only for `subset`
    /// and the remaining values are drawn from `priors`.
    Restricted {
        #[serde(rename = "nItems")]
        n_items: usize,
        subset: Vec<usize>,
        priors: Vec<Vec<ValueDistribution>>,
        seed: u64,
        inner: Box<Mechanism>,
    },
    Table(TableMechanism),
    Menu(MenuMechanism),
    /// Per-item first price, no reserve. Not truthful; kept for audit checks.
    FirstPrice,
    /// Per-item second price that also charges every bidder `fee`. Not IR;
    /// kept for audit checks.
    Overcharge { fee: f64 },
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::GrandBundle { .. } => "grand_bundle",
            Mechanism::ReserveWelfare { .. } => "reserve_welfare",
            Mechanism::SecondPriceReserve { .. } => "second_price_reserve",
            Mechanism::Combined { .. } => "combined",
            Mechanism::Restricted { .. } => "restricted",
            Mechanism::Table(t) => t.name(),
            Mechanism::Menu(m) => m.name(),
            Mechanism::FirstPrice => "first_price",
            Mechanism::Overcharge { .. } => "overcharge",
        }
    }

    /// Claimed guarantee. The two deliberately broken rules claim DT as well,
    /// so that the audit has something to catch.
    pub fn concept(&self) -> SolutionConcept {
        match self {
            Mechanism::Combined { blocks, .. } => blocks
                .iter()
                .map(|b| b.mechanism.concept())
                .fold(SolutionConcept::Dt, SolutionConcept::weakest),
            Mechanism::Restricted { inner, .. } => inner.concept(),
            Mechanism::Table(t) => t.concept,
            Mechanism::Menu(m) => m.concept(),
            _ => SolutionConcept::Dt,
        }
    }

    pub fn claims_ir(&self) -> bool {
        match self {
            Mechanism::Combined { blocks, .. } => blocks.iter().all(|b| b.mechanism.claims_ir()),
            Mechanism::Restricted { inner, .. } => inner.claims_ir(),
            _ => true,
        }
    }

    /// Largest incentive violation the claimed concept tolerates.
    pub fn regret_tolerance(&self) -> f64 {
        match self {
            Mechanism::Combined { blocks, .. } => blocks.iter().map(|b| b.mechanism.regret_tolerance()).sum(),
            Mechanism::Restricted { inner, .. } => inner.regret_tolerance(),
            Mechanism::Table(t) => t.regret_bound,
            Mechanism::Menu(_) => 1e-9,
            _ => 1e-9,
        }
    }

    /// Whether `run` consumes randomness.
    pub fn is_randomized(&self) -> bool {
        match self {
            Mechanism::Restricted { .. } => true,
            Mechanism::Combined { blocks, .. } => blocks.iter().any(|b| b.mechanism.is_randomized()),
            _ => false,
        }
    }

    /// Seed recorded by randomized components (0 for deterministic rules).
    pub fn seed(&self) -> u64 {
        match self {
            Mechanism::Restricted { seed, .. } => *seed,
            Mechanism::Combined { blocks, .. } => {
                blocks.iter().fold(0, |acc, b| derive_seed(acc, b.mechanism.seed()))
            }
            _ => 0,
        }
    }

    /// Randomness for the `call`-th invocation, derived from the recorded seed.
    pub fn rng_for_call(&self, call: u64) -> AuctionRng {
        stream_rng(self.seed(), call)
    }

    /// Number of items the rule expects in each bid row, if fixed.
    pub fn n_items(&self) -> Option<usize> {
        match self {
            Mechanism::SecondPriceReserve { reserves } => Some(reserves.len()),
            Mechanism::Combined { n_items, .. } => Some(*n_items),
            Mechanism::Restricted { subset, .. } => Some(subset.len()),
            Mechanism::Table(t) => Some(t.types.n_items()),
            Mechanism::Menu(m) => Some(m.n_items),
            _ => None,
        }
    }

    /// Run on a bid profile. `rng` feeds randomized components only.
    pub fn run(&self, bids: &Profile, rng: &mut AuctionRng) -> Result<Outcome> {
        validate_bids(bids, self.n_items())?;
        match self {
            Mechanism::GrandBundle { reserve } => rules::run_grand_bundle(*reserve, bids),
            Mechanism::ReserveWelfare { s_hat } => Ok(rules::run_reserve_welfare(*s_hat, bids)),
            Mechanism::SecondPriceReserve { reserves } => Ok(rules::run_second_price(reserves, bids, 0.0)),
            Mechanism::Combined { n_items, blocks, .. } => compose::run_combined(*n_items, blocks, bids, rng),
            Mechanism::Restricted {
                n_items,
                subset,
                priors,
                inner,
                ..
            } => compose::run_restricted(*n_items, subset, priors, inner, bids, rng),
            Mechanism::Table(t) => t.run(bids),
            Mechanism::Menu(m) => m.run(bids),
            Mechanism::FirstPrice => Ok(rules::run_first_price(bids)),
            Mechanism::Overcharge { fee } => {
                let n = bids[0].len();
                Ok(rules::run_second_price(&vec![0.0; n], bids, *fee))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn validate_bids(bids: &Profile, items: Option<usize>) -> Result<()> {
    if bids.is_empty() {
        return Err(Error::invalid("bid profile has no bidders"));
    }
    let n = bids[0].len();
    if let Some(expected) = items {
        if n != expected {
            return Err(Error::invalid(format!("bid profile has {n} items, mechanism expects {expected}")));
        }
    }
    for (i, row) in bids.iter().enumerate() {
        if row.len() != n {
            return Err(Error::invalid(format!("bid row {i} has {} items, expected {n}", row.len())));
        }
        if let Some(b) = row.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::invalid(format!("bidder {i} submitted bid {b}")));
        }
    }
    Ok(())
}

/// A deterministic run, for rules that never draw randomness.
pub fn run_once(mechanism: &Mechanism, bids: &Profile) -> Result<Outcome> {
    mechanism.run(bids, &mut mechanism.rng_for_call(0))
}
