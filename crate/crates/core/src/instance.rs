//! Auction instances: an `m x n` grid of independent marginals.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{MaxOf, ValueDistribution};
use crate::error::{Error, Result};

/// One item's marginals: shared by every bidder (population mode) or one per
/// bidder. In JSON a column is either a distribution fragment or an array of
/// fragments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ItemColumn {
    Shared(ValueDistribution),
    PerBidder(Vec<ValueDistribution>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionInstance {
    pub bidders: usize,
    #[serde(default)]
    pub population: bool,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    pub items: Vec<ItemColumn>,
}

#[derive(Deserialize)]
struct RawInstance {
    bidders: usize,
    #[serde(default)]
    population: bool,
    epsilon: f64,
    delta: f64,
    #[serde(default)]
    seed: u64,
    items: Vec<serde_json::Value>,
}

/// Valuation or bid matrix, `rows[i][j]` is bidder `i`'s number for item `j`.
pub type Profile = Vec<Vec<f64>>;

impl AuctionInstance {
    /// Instance where every bidder shares each item's marginal.
    pub fn population(bidders: usize, items: Vec<ValueDistribution>, epsilon: f64, delta: f64) -> Result<Self> {
        let inst = AuctionInstance {
            bidders,
            population: true,
            epsilon,
            delta,
            seed: 0,
            items: items.into_iter().map(ItemColumn::Shared).collect(),
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Instance from a per-item list of per-bidder marginals.
    pub fn general(columns: Vec<Vec<ValueDistribution>>, epsilon: f64, delta: f64) -> Result<Self> {
        let bidders = columns.first().map_or(0, Vec::len);
        let inst = AuctionInstance {
            bidders,
            population: false,
            epsilon,
            delta,
            seed: 0,
            items: columns.into_iter().map(ItemColumn::PerBidder).collect(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Parse and validate an instance document. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text)?;
        let mut items = Vec::with_capacity(raw.items.len());
        for (j, value) in raw.items.into_iter().enumerate() {
            let col = match value {
                serde_json::Value::Array(entries) => ItemColumn::PerBidder(
                    entries
                        .into_iter()
                        .enumerate()
                        .map(|(i, e)| {
                            serde_json::from_value(e).map_err(|err| Error::Malformed(format!("items[{j}][{i}]: {err}")))
                        })
                        .collect::<Result<_>>()?,
                ),
                other => ItemColumn::Shared(
                    serde_json::from_value(other).map_err(|err| Error::Malformed(format!("items[{j}]: {err}")))?,
                ),
            };
            items.push(col);
        }
        let inst = AuctionInstance {
            bidders: raw.bidders,
            population: raw.population,
            epsilon: raw.epsilon,
            delta: raw.delta,
            seed: raw.seed,
            items,
        };
        inst.validate().map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::Malformed(msg),
            other => other,
        })?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bidders == 0 {
            return Err(Error::invalid("bidders: must be at least 1"));
        }
        if self.items.is_empty() {
            return Err(Error::invalid("items: at least one item is required"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::invalid(format!("epsilon: must lie in (0, 1/4), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 0.125) {
            return Err(Error::invalid(format!("delta: must lie in (0, 1/8), got {}", self.delta)));
        }
        for (j, col) in self.items.iter().enumerate() {
            match col {
                ItemColumn::Shared(d) => d.validate().map_err(|e| Error::invalid(format!("items[{j}]: {e}")))?,
                ItemColumn::PerBidder(ds) => {
                    if self.population {
                        return Err(Error::invalid(format!(
                            "items[{j}]: population instances take one shared distribution per item"
                        )));
                    }
                    if ds.len() != self.bidders {
                        return Err(Error::invalid(format!(
                            "items[{j}]: expected {} bidder entries, got {}",
                            self.bidders,
                            ds.len()
                        )));
                    }
                    for (i, d) in ds.iter().enumerate() {
                        d.validate().map_err(|e| Error::invalid(format!("items[{j}][{i}]: {e}")))?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn dist(&self, bidder: usize, item: usize) -> &ValueDistribution {
        match &self.items[item] {
            ItemColumn::Shared(d) => d,
            ItemColumn::PerBidder(ds) => &ds[bidder],
        }
    }

    /// Marginals of every bidder for `item`.
    pub fn column(&self, item: usize) -> Vec<ValueDistribution> {
        (0..self.bidders).map(|i| self.dist(i, item).clone()).collect()
    }

    /// Law of `X_j = max_i v_ij`.
    pub fn item_max(&self, item: usize) -> MaxOf {
        match &self.items[item] {
            ItemColumn::Shared(d) => MaxOf::iid(d, self.bidders as u64).expect("bidders >= 1"),
            ItemColumn::PerBidder(ds) => MaxOf::new(ds).expect("non-empty column"),
        }
    }

    pub fn all_discrete(&self) -> bool {
        (0..self.n_items()).all(|j| (0..self.bidders).all(|i| self.dist(i, j).is_discrete()))
    }

    /// Every bidder's marginals as an `m x n` grid.
    pub fn priors(&self) -> Vec<Vec<ValueDistribution>> {
        (0..self.bidders)
            .map(|i| (0..self.n_items()).map(|j| self.dist(i, j).clone()).collect())
            .collect()
    }

    /// The same bidders restricted to the listed items, in the listed order.
    pub fn restrict_items(&self, items: &[usize]) -> AuctionInstance {
        AuctionInstance {
            bidders: self.bidders,
            population: self.population,
            epsilon: self.epsilon,
            delta: self.delta,
            seed: self.seed,
            items: items.iter().map(|&j| self.items[j].clone()).collect(),
        }
    }

    pub fn sample_profile<R: Rng + ?Sized>(&self, rng: &mut R) -> Profile {
        (0..self.bidders)
            .map(|i| (0..self.n_items()).map(|j| self.dist(i, j).sample(rng)).collect())
            .collect()
    }

    /// Resample bidder `i`'s row in place.
    pub fn resample_bidder<R: Rng + ?Sized>(&self, profile: &mut Profile, bidder: usize, rng: &mut R) {
        for j in 0..self.n_items() {
            profile[bidder][j] = self.dist(bidder, j).sample(rng);
        }
    }
}

/// Optimal social welfare `sum_j max_i v_ij` of a valuation profile.
pub fn optimal_welfare(profile: &Profile) -> f64 {
    let n = profile.first().map_or(0, Vec::len);
    (0..n)
        .map(|j| profile.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum()
}
