//! Best deterministic mechanism over values floored to multiples of `eps`.
//!
//! Every deterministic allocation table over the coarsened type space is
//! enumerated. For a fixed table the DT and IR constraints on one bidder's
//! payments (with opponents fixed) are difference constraints, so the
//! revenue-maximal payments are shortest-path distances; a negative cycle
//! means the table admits no truthful payments.

use crate::dist::ValueDistribution;
use crate::error::{Error, Result};
use crate::instance::{AuctionInstance, ItemColumn};
use crate::mechanism::table::{floor_to_step, TableSource};
use crate::mechanism::{dot, SolutionConcept, TableMechanism};
use crate::typespace::TypeSpace;

pub const DEFAULT_TABLE_CAP: f64 = 2e6;

#[derive(Debug, Clone, PartialEq)]
pub struct EpsDtResult {
    pub mechanism: TableMechanism,
    pub revenue: f64,
    pub tables_searched: u64,
}

/// Floor every atom to a multiple of `eps`.
pub fn floor_coarsen(dist: &ValueDistribution, eps: f64) -> Result<ValueDistribution> {
    let atoms = dist
        .atoms()
        .ok_or_else(|| Error::invalid("eps-DT search needs discrete marginals"))?;
    ValueDistribution::from_atoms(atoms.into_iter().map(|(v, p)| (floor_to_step(v, eps), p)))
}

fn floor_instance(instance: &AuctionInstance, eps: f64) -> Result<AuctionInstance> {
    let mut out = instance.clone();
    for col in &mut out.items {
        match col {
            ItemColumn::Shared(d) => *d = floor_coarsen(d, eps)?,
            ItemColumn::PerBidder(ds) => {
                for d in ds.iter_mut() {
                    *d = floor_coarsen(d, eps)?;
                }
            }
        }
    }
    Ok(out)
}

/// Revenue-maximal DT + IR payments for `table` (winner per profile and item,
/// `m` meaning unsold), or `None` if no such payments exist.
fn best_payments(ts: &TypeSpace, table: &[usize], probs: &[f64]) -> Option<(Vec<Vec<f64>>, f64)> {
    let (m, n) = (ts.n_bidders(), ts.n_items());
    let profiles = ts.profile_count();
    let mut payments = vec![vec![0.0; m]; profiles];
    let x = |p: usize, i: usize| -> Vec<f64> {
        (0..n).map(|j| if table[p * n + j] == i { 1.0 } else { 0.0 }).collect()
    };
    for i in 0..m {
        let bt = &ts.bidders[i];
        let k = bt.count();
        let values: Vec<Vec<f64>> = (0..k).map(|t| bt.values(t)).collect();
        // profiles with bidder i at type 0 enumerate the opponents' types
        for p0 in (0..profiles).filter(|&p| ts.profile_types(p)[i] == 0) {
            let ps: Vec<usize> = (0..k).map(|t| ts.with_type(p0, i, t)).collect();
            let xs: Vec<Vec<f64>> = ps.iter().map(|&p| x(p, i)).collect();
            // node k is the zero-payment source
            let mut dist = vec![f64::INFINITY; k + 1];
            dist[k] = 0.0;
            let weight = |from: usize, to: usize| -> f64 {
                if from == k {
                    dot(&values[to], &xs[to])
                } else {
                    dot(&values[to], &xs[to]) - dot(&values[to], &xs[from])
                }
            };
            for round in 0..=k + 1 {
                let mut changed = false;
                for from in 0..=k {
                    if !dist[from].is_finite() {
                        continue;
                    }
                    for to in 0..k {
                        if to == from {
                            continue;
                        }
                        let d = dist[from] + weight(from, to);
                        if d < dist[to] - 1e-12 {
                            dist[to] = d;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
                if round == k + 1 {
                    return None;
                }
            }
            for (t, &p) in ps.iter().enumerate() {
                payments[p][i] = dist[t];
            }
        }
    }
    let revenue = (0..profiles).map(|p| probs[p] * payments[p].iter().sum::<f64>()).sum();
    Some((payments, revenue))
}

/// Search over deterministic tables on the `eps`-floored type space.
pub fn eps_dt_search(instance: &AuctionInstance, eps: f64, table_cap: f64) -> Result<EpsDtResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let coarse = floor_instance(instance, eps)?;
    let ts = TypeSpace::from_instance(&coarse)?;
    let (m, n) = (ts.n_bidders(), ts.n_items());
    let cells = ts.profile_count_f64() * n as f64;
    let tables = ((m + 1) as f64).powf(cells);
    if tables > table_cap {
        return Err(Error::too_large("deterministic allocation tables", tables, table_cap));
    }
    let profiles = ts.profile_count();
    let probs: Vec<f64> = (0..profiles).map(|p| ts.profile_prob(p)).collect();
    let cells = profiles * n;

    let mut table = vec![m; cells];
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    let mut searched = 0u64;
    loop {
        searched += 1;
        if let Some((pay, rev)) = best_payments(&ts, &table, &probs) {
            if best.as_ref().is_none_or(|b| rev > b.2 + 1e-12) {
                best = Some((table.clone(), pay, rev));
            }
        }
        // odometer over winners, `m` (unsold) first
        let mut pos = 0;
        loop {
            if pos == cells {
                let (table, payments, revenue) = best.expect("the empty table is always feasible");
                let alloc = (0..profiles)
                    .map(|p| {
                        (0..m)
                            .map(|i| (0..n).map(|j| if table[p * n + j] == i { 1.0 } else { 0.0 }).collect())
                            .collect()
                    })
                    .collect();
                let mechanism = TableMechanism {
                    source: TableSource::EpsDt,
                    concept: SolutionConcept::EpsDt,
                    types: ts,
                    grid_step: Some(eps),
                    alloc,
                    payments,
                    objective: revenue,
                    regret_bound: eps * n as f64 + 1e-9,
                };
                return Ok(EpsDtResult {
                    mechanism,
                    revenue,
                    tables_searched: searched,
                });
            }
            table[pos] = if table[pos] == m { 0 } else { table[pos] + 1 };
            if table[pos] != m {
                break;
            }
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{run_once, Mechanism};
    use approx::assert_abs_diff_eq;

    fn coin() -> ValueDistribution {
        ValueDistribution::discrete(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn single_coin_bidder_gets_a_posted_price() {
        let inst = AuctionInstance::population(1, vec![coin()], 0.1, 0.05).unwrap();
        let r = eps_dt_search(&inst, 0.5, DEFAULT_TABLE_CAP).unwrap();
        assert_abs_diff_eq!(r.revenue, 1.0, epsilon = 1e-12);
        assert_eq!(r.tables_searched, 4);
    }

    #[test]
    fn point_mass_is_fully_extracted() {
        let inst = AuctionInstance::population(2, vec![ValueDistribution::point(3.0).unwrap()], 0.1, 0.05).unwrap();
        let r = eps_dt_search(&inst, 0.5, DEFAULT_TABLE_CAP).unwrap();
        assert_abs_diff_eq!(r.revenue, 3.0, epsilon = 1e-12);
        let o = run_once(&Mechanism::Table(r.mechanism), &vec![vec![0.2], vec![7.0]]).unwrap();
        assert_eq!(o.revenue(), 3.0);
    }

    #[test]
    fn bids_are_floored_before_lookup() {
        let d = ValueDistribution::discrete(vec![1.2, 1.7], vec![0.5, 0.5]).unwrap();
        let floored = floor_coarsen(&d, 0.5).unwrap();
        assert_eq!(floored, ValueDistribution::discrete(vec![1.0, 1.5], vec![0.5, 0.5]).unwrap());
    }

    #[test]
    fn two_bidders_match_the_best_deterministic_auction() {
        // 2 coin bidders: second price with reserve 2 earns 1.5, which is also the
        // optimal revenue of any mechanism here.
        let inst = AuctionInstance::population(2, vec![coin()], 0.1, 0.05).unwrap();
        let r = eps_dt_search(&inst, 0.5, DEFAULT_TABLE_CAP).unwrap();
        assert_abs_diff_eq!(r.revenue, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = AuctionInstance::population(2, vec![coin(); 3], 0.1, 0.05).unwrap();
        assert!(matches!(eps_dt_search(&inst, 0.5, 1e3), Err(Error::TooLarge { .. })));
    }
}
