use serde::{Deserialize, Serialize};

use crate::dist::ValueDistribution;
use crate::error::{Error, Result};
use crate::instance::Profile;
use crate::rng::AuctionRng;

use super::{Mechanism, Outcome};

/// A mechanism selling the listed items, seeing only their bid columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub items: Vec<usize>,
    pub mechanism: Mechanism,
}

impl Block {
    pub fn new(items: Vec<usize>, mechanism: Mechanism) -> Self {
        Block { items, mechanism }
    }
}

/// Sell disjoint blocks independently. Blocks and `ignored` must cover
/// `0..n_items` exactly once.
pub fn combine(blocks: Vec<Block>, ignored: Vec<usize>, n_items: usize) -> Result<Mechanism> {
    let mut seen = vec![false; n_items];
    let all = blocks.iter().flat_map(|b| b.items.iter()).chain(ignored.iter());
    for &j in all {
        if j >= n_items {
            return Err(Error::invalid(format!("item {j} out of range for {n_items} items")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::invalid(format!("item {j} appears in more than one block")));
        }
    }
    if let Some(j) = seen.iter().position(|s| !s) {
        return Err(Error::invalid(format!("item {j} is in no block and not ignored")));
    }
    for (k, b) in blocks.iter().enumerate() {
        if let Some(expected) = b.mechanism.n_items() {
            if expected != b.items.len() {
                return Err(Error::invalid(format!(
                    "block {k} lists {} items but its mechanism expects {expected}",
                    b.items.len()
                )));
            }
        }
    }
    Ok(Mechanism::Combined {
        n_items,
        blocks,
        ignored,
    })
}

/// Sell only `subset` with a mechanism designed for all `n_items` items: the
/// missing values are drawn from `priors` (an `m x n` grid) on every run, and
/// each bidder is rebated the sampled value of the out-of-subset items it
/// would have received.
pub fn restrict_to_subset(
    inner: Mechanism,
    n_items: usize,
    subset: Vec<usize>,
    priors: Vec<Vec<ValueDistribution>>,
    seed: u64,
) -> Result<Mechanism> {
    if subset.windows(2).any(|w| w[0] >= w[1]) || subset.iter().any(|&j| j >= n_items) {
        return Err(Error::invalid("subset must be strictly ascending item indices within range"));
    }
    if priors.iter().any(|row| row.len() != n_items) {
        return Err(Error::invalid(format!("priors must list {n_items} items per bidder")));
    }
    if let Some(expected) = inner.n_items() {
        if expected != n_items {
            return Err(Error::invalid(format!(
                "inner mechanism sells {expected} items, restriction declared {n_items}"
            )));
        }
    }
    Ok(Mechanism::Restricted {
        n_items,
        subset,
        priors,
        seed,
        inner: Box::new(inner),
    })
}

fn project(bids: &Profile, items: &[usize]) -> Profile {
    bids.iter().map(|row| items.iter().map(|&j| row[j]).collect()).collect()
}

pub(super) fn run_combined(n_items: usize, blocks: &[Block], bids: &Profile, rng: &mut AuctionRng) -> Result<Outcome> {
    let mut out = Outcome::empty(bids.len(), n_items);
    for block in blocks {
        let sub = block.mechanism.run(&project(bids, &block.items), rng)?;
        for (i, row) in sub.alloc.iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                out.alloc[i][block.items[k]] = x;
            }
            out.payments[i] += sub.payments[i];
        }
        out.completions.extend(sub.completions);
    }
    Ok(out)
}

pub(super) fn run_restricted(
    n_items: usize,
    subset: &[usize],
    priors: &[Vec<ValueDistribution>],
    inner: &Mechanism,
    bids: &Profile,
    rng: &mut AuctionRng,
) -> Result<Outcome> {
    let m = bids.len();
    if priors.len() != m {
        return Err(Error::invalid(format!("restriction has priors for {} bidders, got {m}", priors.len())));
    }
    let mut in_subset = vec![None; n_items];
    for (k, &j) in subset.iter().enumerate() {
        in_subset[j] = Some(k);
    }
    let completed: Profile = (0..m)
        .map(|i| {
            (0..n_items)
                .map(|j| match in_subset[j] {
                    Some(k) => bids[i][k],
                    None => priors[i][j].sample(rng),
                })
                .collect()
        })
        .collect();
    let full = inner.run(&completed, rng)?;
    let mut out = Outcome::empty(m, subset.len());
    for i in 0..m {
        for (k, &j) in subset.iter().enumerate() {
            out.alloc[i][k] = full.alloc[i][j];
        }
        let rebate: f64 = (0..n_items)
            .filter(|&j| in_subset[j].is_none())
            .map(|j| completed[i][j] * full.alloc[i][j])
            .sum();
        out.payments[i] = full.payments[i] - rebate;
    }
    out.completions.push(completed);
    out.completions.extend(full.completions);
    Ok(out)
}
