//! Truthfulness regret: the best gain any bidder gets from a grid of
//! misreports.
//!
//! A grid search cannot certify truthfulness. A zero result only means no
//! profitable deviation was found over the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AuctionInstance, Profile};
use crate::mechanism::{Mechanism, SolutionConcept};
use crate::rng::{derive_seed, stream_rng};

/// Ex-post audits of larger auctions check this many bidders per profile,
/// drawn afresh for every profile.
pub const MAX_DEVIATORS: usize = 16;

/// Misreports tried for each bidder, built around the truthful report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeviationGrid {
    /// Multiplicative perturbations of single coordinates.
    pub factors: Vec<f64>,
    /// Also report zero, per coordinate and for the whole vector.
    pub zero: bool,
    /// Per-item absolute levels substituted into single coordinates.
    pub levels: Vec<Vec<f64>>,
    /// Also apply every factor to the whole vector at once.
    pub joint: bool,
}

impl DeviationGrid {
    /// `1.05^k` for `0 < |k| <= 4` plus 0.95, zero reports, the support atoms
    /// of discrete items as levels, and joint scaling.
    pub fn standard(instance: &AuctionInstance) -> Self {
        let mut factors = vec![0.95];
        for k in 1..=4 {
            factors.push(1.05f64.powi(k));
            factors.push(1.05f64.powi(-k));
        }
        factors.sort_by(f64::total_cmp);
        let levels = (0..instance.n_items())
            .map(|j| {
                let mut lv: Vec<f64> = (0..instance.bidders)
                    .filter_map(|i| instance.dist(i, j).atoms())
                    .flatten()
                    .map(|(v, _)| v)
                    .collect();
                lv.sort_by(f64::total_cmp);
                lv.dedup();
                lv
            })
            .collect();
        DeviationGrid {
            factors,
            zero: true,
            levels,
            joint: true,
        }
    }

    pub fn describe(&self) -> String {
        let levels: usize = self.levels.iter().map(Vec::len).sum();
        format!(
            "per-coordinate factors {:?}{}{}, {levels} per-item levels",
            self.factors.iter().map(|f| (f * 1e4).round() / 1e4).collect::<Vec<_>>(),
            if self.zero { ", zero" } else { "" },
            if self.joint { ", joint scaling" } else { "" },
        )
    }

    /// Misreports of `truth`, excluding `truth` itself.
    pub fn deviations(&self, truth: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let mut push = |b: Vec<f64>| {
            if b.as_slice() != truth && b.iter().all(|x| x.is_finite() && *x >= 0.0) {
                out.push(b);
            }
        };
        for j in 0..truth.len() {
            let with = |x: f64| {
                let mut b = truth.to_vec();
                b[j] = x;
                b
            };
            for &f in &self.factors {
                push(with(truth[j] * f));
            }
            if self.zero {
                push(with(0.0));
            }
            if let Some(levels) = self.levels.get(j) {
                for &l in levels {
                    push(with(l));
                }
            }
        }
        if self.joint {
            for &f in &self.factors {
                push(truth.iter().map(|x| x * f).collect());
            }
            if self.zero {
                push(vec![0.0; truth.len()]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegretCheck {
    pub concept: SolutionConcept,
    /// Largest utility gain from a misreport, floored at 0.
    pub max_observed: f64,
    /// Largest gain the mechanism's claim tolerates.
    pub tolerance: f64,
    pub deviation_grid_spec: String,
    pub verdict: String,
}

impl RegretCheck {
    pub fn within_tolerance(&self) -> bool {
        self.max_observed <= self.tolerance
    }
}

/// Options for the interim (BIC) audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicAuditOptions {
    /// Opponent draws per (bidder, type) pair when exact enumeration is too big.
    pub opponent_draws: usize,
    /// Types per bidder drawn when the type space is not enumerated.
    pub type_draws: usize,
    /// Largest type/opponent space enumerated exactly.
    pub exact_cap: usize,
}

impl Default for BicAuditOptions {
    fn default() -> Self {
        BicAuditOptions {
            opponent_draws: 1000,
            type_draws: 200,
            exact_cap: 4096,
        }
    }
}

/// Utility of `bidder` with true values `values` when `bids` are reported,
/// under the `call`-th draw of the mechanism's randomness.
fn utility(mech: &Mechanism, bids: &Profile, values: &[f64], bidder: usize, call: u64) -> Result<f64> {
    let o = mech.run(bids, &mut mech.rng_for_call(call))?;
    Ok(crate::mechanism::dot(values, &o.alloc[bidder]) - o.payments[bidder])
}

/// Ex-post regret over `samples` profiles: the largest gain of a single
/// bidder deviating while everyone else reports truthfully. Used for DT and
/// IC claims; randomized mechanisms share their random draw between the
/// truthful and deviating runs.
const DEVIATOR_STREAM: u64 = 0xde71;

pub fn ex_post_regret(
    mech: &Mechanism,
    instance: &AuctionInstance,
    grid: &DeviationGrid,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let gains: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let values = instance.sample_profile(&mut stream_rng(seed, 2 * r));
            let n = values.len();
            let mut deviators: Vec<usize> = if n <= MAX_DEVIATORS {
                (0..n).collect()
            } else {
                let mut rng = stream_rng(derive_seed(seed, DEVIATOR_STREAM), r);
                rand::seq::index::sample(&mut rng, n, MAX_DEVIATORS).into_vec()
            };
            deviators.sort_unstable();
            let mut best = f64::NEG_INFINITY;
            let mut bids = values.clone();
            for i in deviators {
                let truth = utility(mech, &values, &values[i], i, r)?;
                for dev in grid.deviations(&values[i]) {
                    bids[i] = dev;
                    best = best.max(utility(mech, &bids, &values[i], i, r)? - truth);
                }
                bids[i] = values[i].clone();
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(gains.into_iter().fold(0.0, f64::max))
}

/// Weighted draws of one bidder's value vector, exact when small.
fn bidder_types(instance: &AuctionInstance, bidder: usize, draws: usize, cap: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
    let n = instance.n_items();
    let atoms: Option<Vec<Vec<(f64, f64)>>> = (0..n).map(|j| instance.dist(bidder, j).atoms()).collect();
    if let Some(atoms) = atoms {
        let count: f64 = atoms.iter().map(|a| a.len() as f64).product();
        if count <= cap as f64 {
            let mut out = vec![(Vec::new(), 1.0)];
            for col in &atoms {
                out = out
                    .into_iter()
                    .flat_map(|(v, w)| {
                        col.iter().map(move |&(x, p)| {
                            let mut v = v.clone();
                            v.push(x);
                            (v, w * p)
                        })
                    })
                    .collect();
            }
            return out.into_iter().filter(|(_, w)| *w > 0.0).collect();
        }
    }
    let mut rng = stream_rng(seed, bidder as u64);
    (0..draws)
        .map(|_| {
            let v = (0..n).map(|j| instance.dist(bidder, j).sample(&mut rng)).collect();
            (v, 1.0 / draws as f64)
        })
        .collect()
}

/// Weighted opponent profiles for `bidder` (its own row left empty).
fn opponent_profiles(instance: &AuctionInstance, bidder: usize, opts: &BicAuditOptions, seed: u64) -> Vec<(Profile, f64)> {
    let per: Vec<Vec<(Vec<f64>, f64)>> = (0..instance.bidders)
        .map(|k| {
            if k == bidder {
                vec![(Vec::new(), 1.0)]
            } else {
                bidder_types(instance, k, 0, opts.exact_cap, seed)
            }
        })
        .collect();
    let exact = per.iter().all(|t| !t.is_empty())
        && per.iter().map(|t| t.len() as f64).product::<f64>() <= opts.exact_cap as f64;
    if exact {
        let mut out: Vec<(Profile, f64)> = vec![(Vec::new(), 1.0)];
        for types in &per {
            out = out
                .into_iter()
                .flat_map(|(p, w)| {
                    types.iter().map(move |(v, q)| {
                        let mut p = p.clone();
                        p.push(v.clone());
                        (p, w * q)
                    })
                })
                .collect();
        }
        return out;
    }
    let mut rng = stream_rng(derive_seed(seed, 0x6f7070), bidder as u64);
    (0..opts.opponent_draws)
        .map(|_| {
            let mut p = instance.sample_profile(&mut rng);
            p[bidder].clear();
            (p, 1.0 / opts.opponent_draws as f64)
        })
        .collect()
}

/// Interim regret: the largest gain in expected utility over opponents'
/// priors from a misreport, over (bidder, type) pairs. Opponent draws are
/// shared across the deviations of a pair.
pub fn interim_regret(
    mech: &Mechanism,
    instance: &AuctionInstance,
    grid: &DeviationGrid,
    opts: &BicAuditOptions,
    seed: u64,
) -> Result<f64> {
    let mut pairs = Vec::new();
    for i in 0..instance.bidders {
        for (v, _) in bidder_types(instance, i, opts.type_draws, opts.exact_cap, derive_seed(seed, 0x74797065)) {
            pairs.push((i, v));
        }
    }
    let opponents: Vec<Vec<(Profile, f64)>> =
        (0..instance.bidders).map(|i| opponent_profiles(instance, i, opts, seed)).collect();
    let own_types: Vec<Vec<Vec<f64>>> = (0..instance.bidders)
        .map(|i| match bidder_types(instance, i, 0, opts.exact_cap, seed) {
            t if t.len() <= 64 => t.into_iter().map(|(v, _)| v).collect(),
            _ => Vec::new(),
        })
        .collect();
    let gains: Vec<f64> = pairs
        .par_iter()
        .map(|(i, v)| -> Result<f64> {
            let i = *i;
            let expected = |report: &[f64]| -> Result<f64> {
                let mut total = 0.0;
                for (call, (opp, w)) in opponents[i].iter().enumerate() {
                    let mut bids = opp.clone();
                    bids[i] = report.to_vec();
                    total += w * utility(mech, &bids, v, i, call as u64)?;
                }
                Ok(total)
            };
            let truth = expected(v)?;
            let mut devs = grid.deviations(v);
            devs.extend(own_types[i].iter().filter(|t| *t != v).cloned());
            let mut best = f64::NEG_INFINITY;
            for dev in devs {
                best = best.max(expected(&dev)? - truth);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(gains.into_iter().fold(0.0, f64::max))
}

/// Regret against `concept`: ex post for DT and IC, interim for BIC.
pub fn estimate_regret(
    mech: &Mechanism,
    instance: &AuctionInstance,
    concept: SolutionConcept,
    grid: &DeviationGrid,
    samples: usize,
    seed: u64,
) -> Result<RegretCheck> {
    estimate_regret_with(mech, instance, concept, grid, samples, seed, &BicAuditOptions::default())
}

pub fn estimate_regret_with(
    mech: &Mechanism,
    instance: &AuctionInstance,
    concept: SolutionConcept,
    grid: &DeviationGrid,
    samples: usize,
    seed: u64,
    bic: &BicAuditOptions,
) -> Result<RegretCheck> {
    if samples == 0 {
        return Err(Error::invalid("regret audit needs at least one sample"));
    }
    let max_observed = if concept.is_bayesian() {
        interim_regret(mech, instance, grid, bic, seed)?
    } else {
        ex_post_regret(mech, instance, grid, samples, seed)?
    };
    let tolerance = mech.regret_tolerance();
    let verdict = if max_observed <= tolerance {
        "no violation found over the deviation grid".to_string()
    } else {
        format!("profitable deviation of {max_observed:.3e} found")
    };
    Ok(RegretCheck {
        concept,
        max_observed,
        tolerance,
        deviation_grid_spec: if !concept.is_bayesian() && instance.bidders > MAX_DEVIATORS {
            format!("{}; {MAX_DEVIATORS} random deviating bidders per profile", grid.describe())
        } else {
            grid.describe()
        },
        verdict,
    })
}
