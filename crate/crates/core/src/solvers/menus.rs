//! Single-bidder menu searches over discretized prices and lotteries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::AuctionInstance;
use crate::mechanism::table::{buyer_prefers, TIE};
use crate::mechanism::{dot, MenuEntry, MenuKind, MenuMechanism};
use crate::rng::stream_rng;
use crate::tail::{anchor_mass, truncation_bounds};

/// Default bound on the work of a menu search, in buyer evaluations.
pub const DEFAULT_WORK_CAP: f64 = 2e9;

/// Prices `hi (1 + eps^2)^{-k}` for `k = 0, 1, ...` down to the first point
/// at or below `lo`: the powers of `(1 + eps^2)` anchored at `hi`, with both
/// ends of `[lo, hi]` covered.
pub fn price_grid(lo: f64, hi: f64, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::invalid(format!("price range needs 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    let ratio = 1.0 + eps * eps;
    let steps = ((hi / lo).ln() / ratio.ln() - 1e-9).ceil().max(0.0) as i32;
    Ok((0..=steps).map(|k| hi / ratio.powi(k)).collect())
}

/// Lottery probabilities: 0, the powers `eps^2 (1 + eps^2)^k <= 1` scaled by
/// `1 - eps`, and 1 so that plain bundles stay available.
pub fn probability_grid(eps: f64) -> Vec<f64> {
    let ratio = 1.0 + eps * eps;
    let mut grid = vec![0.0];
    let mut q = eps * eps;
    while q <= 1.0 + 1e-12 {
        grid.push((1.0 - eps) * q);
        q *= ratio;
    }
    grid.push(1.0);
    grid
}

/// Weighted value vectors the searches evaluate buyers on.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub exact: bool,
}

impl EvalSet {
    /// Exact joint support when the bidder is discrete with at most
    /// `exact_cap` joint types, otherwise `samples` Monte Carlo draws.
    pub fn for_single_bidder(instance: &AuctionInstance, samples: usize, seed: u64, exact_cap: usize) -> Result<Self> {
        if instance.bidders != 1 {
            return Err(Error::invalid(format!(
                "menu searches need a single bidder, got {}",
                instance.bidders
            )));
        }
        let n = instance.n_items();
        let atoms: Option<Vec<Vec<(f64, f64)>>> = (0..n).map(|j| instance.dist(0, j).atoms()).collect();
        if let Some(atoms) = atoms {
            let count: f64 = atoms.iter().map(|a| a.len() as f64).product();
            if count <= exact_cap as f64 {
                let mut points = vec![Vec::new()];
                let mut weights = vec![1.0];
                for col in &atoms {
                    let mut np = Vec::with_capacity(points.len() * col.len());
                    let mut nw = Vec::with_capacity(points.len() * col.len());
                    for (pt, w) in points.iter().zip(&weights) {
                        for &(v, p) in col {
                            let mut q = pt.clone();
                            q.push(v);
                            np.push(q);
                            nw.push(w * p);
                        }
                    }
                    points = np;
                    weights = nw;
                }
                return Ok(EvalSet {
                    points,
                    weights,
                    exact: true,
                });
            }
        }
        if samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        let mut rng = stream_rng(seed, 0);
        let points: Vec<Vec<f64>> = (0..samples).map(|_| instance.sample_profile(&mut rng).remove(0)).collect();
        Ok(EvalSet {
            weights: vec![1.0 / samples as f64; samples],
            points,
            exact: false,
        })
    }

    fn len(&self) -> usize {
        self.points.len()
    }
}

/// Price grid for an offer whose value to the buyer is `vals[k]` on eval
/// point `k`: anchored on the tail of that value, with the top clamped to the
/// largest value seen. `None` when the value is almost surely zero.
fn offer_grid(vals: &[f64], weights: &[f64], eps: f64) -> Result<Option<Vec<f64>>> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let theta = anchor_mass();
    let mut mass = 0.0;
    let mut q = 0.0;
    let mut k = 0;
    while k < order.len() {
        let v = vals[order[k]];
        while k < order.len() && vals[order[k]] == v {
            mass += weights[order[k]];
            k += 1;
        }
        if mass >= theta - 1e-12 {
            q = v;
            break;
        }
    }
    if q <= 0.0 {
        return Ok(None);
    }
    let top = vals.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = truncation_bounds(2.0 * q, eps);
    let hi = hi.min(top);
    Ok(Some(price_grid(lo.min(hi), hi, eps)?))
}

/// Largest grid point `<= t` on a descending grid.
fn snap_down(grid: &[f64], t: f64) -> Option<f64> {
    grid.iter().copied().find(|&g| g <= t + TIE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MenuSearch {
    pub menu: MenuMechanism,
    /// Expected revenue on the evaluation set.
    pub revenue: f64,
    pub exact_evaluation: bool,
    pub menus_searched: f64,
}

pub struct MenuSearchOptions {
    pub samples: usize,
    pub seed: u64,
    pub exact_cap: usize,
    pub work_cap: f64,
}

impl Default for MenuSearchOptions {
    fn default() -> Self {
        MenuSearchOptions {
            samples: 2000,
            seed: 0,
            exact_cap: 4096,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

/// Best bundle pricing with every price on its bundle's grid.
///
/// Non-grand bundles are enumerated over grid points plus "not offered". For
/// each such assignment the grand bundle price is optimized exactly over its
/// grid: revenue only changes where some buyer switches to the grand bundle,
/// so the grid points just below those switch points are the only candidates.
pub fn bundle_price_search(instance: &AuctionInstance, eps: f64, opts: &MenuSearchOptions) -> Result<MenuSearch> {
    let eval = EvalSet::for_single_bidder(instance, opts.samples, opts.seed, opts.exact_cap)?;
    bundle_price_search_on(&eval, instance.n_items(), eps, opts.work_cap)
}

pub fn bundle_price_search_on(eval: &EvalSet, n: usize, eps: f64, work_cap: f64) -> Result<MenuSearch> {
    if n == 0 || n > 16 {
        return Err(Error::invalid(format!("bundle search supports 1 to 16 items, got {n}")));
    }
    let full = (1usize << n) - 1;
    let bundle_value = |mask: usize, pt: &[f64]| -> f64 { (0..n).filter(|j| mask >> j & 1 == 1).map(|j| pt[j]).sum() };
    let mut grids: Vec<Option<Vec<f64>>> = Vec::with_capacity(full);
    for mask in 1..=full {
        let vals: Vec<f64> = eval.points.iter().map(|pt| bundle_value(mask, pt)).collect();
        grids.push(offer_grid(&vals, &eval.weights, eps)?);
    }
    let others: Vec<usize> = (1..full).collect();
    let choices: Vec<usize> = others.iter().map(|&m| grids[m - 1].as_ref().map_or(1, |g| g.len() + 1)).collect();
    let combos: f64 = choices.iter().map(|&c| c as f64).product();
    let grand_grid = grids[full - 1].clone().unwrap_or_default();
    let work = combos * eval.len() as f64 * (eval.len().min(grand_grid.len()) + 1) as f64;
    if work > work_cap {
        return Err(Error::too_large("bundle search buyer evaluations", work, work_cap));
    }
    let values: Vec<Vec<f64>> = (1..=full)
        .map(|mask| eval.points.iter().map(|pt| bundle_value(mask, pt)).collect())
        .collect();
    let grand_vals = &values[full - 1];

    // index-ordered parallel search over the first non-grand bundle's choice
    let first = choices.first().copied().unwrap_or(1);
    let rest: f64 = choices.iter().skip(1).map(|&c| c as f64).product();
    let best = (0..first)
        .into_par_iter()
        .map(|c0| {
            let mut best: Option<(f64, Vec<Option<f64>>)> = None;
            let mut digits = vec![0usize; others.len()];
            if !digits.is_empty() {
                digits[0] = c0;
            }
            for _ in 0..rest as u64 {
                let prices: Vec<Option<f64>> = others
                    .iter()
                    .zip(&digits)
                    .map(|(&mask, &d)| if d == 0 { None } else { grids[mask - 1].as_ref().map(|g| g[d - 1]) })
                    .collect();
                // best non-grand option per eval point: (utility, price)
                let base: Vec<(f64, f64)> = (0..eval.len())
                    .map(|k| {
                        let (mut bu, mut bp) = (0.0, 0.0);
                        for (idx, &mask) in others.iter().enumerate() {
                            if let Some(p) = prices[idx] {
                                let u = values[mask - 1][k] - p;
                                if buyer_prefers(u, p, bu, bp) {
                                    bu = u;
                                    bp = p;
                                }
                            }
                        }
                        (bu, bp)
                    })
                    .collect();
                let revenue_with = |t: Option<f64>| -> f64 {
                    (0..eval.len())
                        .map(|k| {
                            let (bu, bp) = base[k];
                            let paid = match t {
                                Some(t) if buyer_prefers(grand_vals[k] - t, t, bu, bp) => t,
                                _ => bp,
                            };
                            eval.weights[k] * paid
                        })
                        .sum()
                };
                let mut candidates: Vec<f64> = (0..eval.len())
                    .filter_map(|k| snap_down(&grand_grid, grand_vals[k] - base[k].0))
                    .collect();
                candidates.sort_by(|a, b| b.total_cmp(a));
                candidates.dedup();
                let mut local = (revenue_with(None), None);
                for t in candidates {
                    let r = revenue_with(Some(t));
                    if r > local.0 + TIE {
                        local = (r, Some(t));
                    }
                }
                let mut menu_prices = prices.clone();
                menu_prices.push(local.1);
                if best.as_ref().is_none_or(|b| local.0 > b.0 + TIE) {
                    best = Some((local.0, menu_prices));
                }
                // advance the odometer over digits 1..
                for pos in 1..digits.len() {
                    digits[pos] += 1;
                    if digits[pos] < choices[pos] {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
            best.expect("at least one assignment")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(f64, Vec<Option<f64>>)>, |acc, cand| match acc {
            Some(a) if cand.0 <= a.0 + TIE => Some(a),
            _ => Some(cand),
        })
        .expect("at least one assignment");

    let mut masks = others.clone();
    masks.push(full);
    let entries = masks
        .iter()
        .zip(&best.1)
        .filter_map(|(&mask, p)| {
            p.map(|price| MenuEntry {
                q: (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { 0.0 }).collect(),
                price,
            })
        })
        .collect();
    Ok(MenuSearch {
        menu: MenuMechanism {
            kind: MenuKind::Bundle,
            n_items: n,
            entries,
        },
        revenue: best.0,
        exact_evaluation: eval.exact,
        menus_searched: combos,
    })
}

fn n_choose_k(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Best menu of at most `menu_cap` lottery/price pairs, "best within cap":
/// lotteries use the probability grid, prices the per-lottery price grid, and
/// lotteries worth at most `eps` of the expected total value are dropped.
pub fn lottery_menu_search(
    instance: &AuctionInstance,
    eps: f64,
    menu_cap: usize,
    opts: &MenuSearchOptions,
) -> Result<MenuSearch> {
    let eval = EvalSet::for_single_bidder(instance, opts.samples, opts.seed, opts.exact_cap)?;
    lottery_menu_search_on(&eval, instance.n_items(), eps, menu_cap, opts.work_cap)
}

pub fn lottery_menu_search_on(
    eval: &EvalSet,
    n: usize,
    eps: f64,
    menu_cap: usize,
    work_cap: f64,
) -> Result<MenuSearch> {
    if menu_cap == 0 {
        return Err(Error::invalid("menu cap must be at least 1"));
    }
    let probs = probability_grid(eps);
    let lotteries_total = (probs.len() as f64).powi(n as i32);
    if lotteries_total > work_cap {
        return Err(Error::too_large("lotteries", lotteries_total, work_cap));
    }
    let total_value: f64 = eval
        .points
        .iter()
        .zip(&eval.weights)
        .map(|(pt, w)| w * pt.iter().sum::<f64>())
        .sum();
    // (q, values of q on eval points, price)
    let mut pairs: Vec<(Vec<f64>, usize, f64)> = Vec::new();
    let mut lottery_values: Vec<Vec<f64>> = Vec::new();
    let mut digits = vec![0usize; n];
    loop {
        // advance first so the all-zero lottery is skipped
        let mut pos = 0;
        while pos < n {
            digits[pos] += 1;
            if digits[pos] < probs.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
        let q: Vec<f64> = digits.iter().map(|&d| probs[d]).collect();
        let vals: Vec<f64> = eval.points.iter().map(|pt| dot(&q, pt)).collect();
        let worth: f64 = vals.iter().zip(&eval.weights).map(|(v, w)| v * w).sum();
        if worth <= eps * total_value {
            continue;
        }
        if let Some(grid) = offer_grid(&vals, &eval.weights, eps)? {
            let idx = lottery_values.len();
            lottery_values.push(vals);
            for p in grid {
                pairs.push((q.clone(), idx, p));
            }
        }
    }
    let cap = menu_cap.min(pairs.len());
    let menus: f64 = (1..=cap).map(|k| n_choose_k(pairs.len(), k)).sum();
    let work = menus * eval.len() as f64 * cap as f64;
    if work > work_cap {
        return Err(Error::too_large("lottery menu buyer evaluations", work, work_cap));
    }
    let revenue_of = |menu: &[usize]| -> f64 {
        (0..eval.len())
            .map(|k| {
                let (mut bu, mut bp) = (0.0, 0.0);
                for &e in menu {
                    let (_, li, p) = &pairs[e];
                    let u = lottery_values[*li][k] - p;
                    if buyer_prefers(u, *p, bu, bp) {
                        bu = u;
                        bp = *p;
                    }
                }
                eval.weights[k] * bp
            })
            .sum()
    };
    // enumerate subsets in lexicographic order, parallel over the first element
    let best = (0..pairs.len())
        .into_par_iter()
        .map(|first| {
            let mut best: (f64, Vec<usize>) = (revenue_of(&[first]), vec![first]);
            let mut stack = vec![first];
            fn extend(
                stack: &mut Vec<usize>,
                len: usize,
                cap: usize,
                best: &mut (f64, Vec<usize>),
                revenue_of: &dyn Fn(&[usize]) -> f64,
            ) {
                if stack.len() == cap {
                    return;
                }
                let start = stack.last().unwrap() + 1;
                for next in start..len {
                    stack.push(next);
                    let r = revenue_of(stack);
                    if r > best.0 + TIE {
                        *best = (r, stack.clone());
                    }
                    extend(stack, len, cap, best, revenue_of);
                    stack.pop();
                }
            }
            extend(&mut stack, pairs.len(), cap, &mut best, &revenue_of);
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(f64, Vec<usize>)>, |acc, cand| match acc {
            Some(a) if cand.0 <= a.0 + TIE => Some(a),
            _ => Some(cand),
        });
    let (revenue, chosen) = best.unwrap_or((0.0, Vec::new()));
    let entries = chosen
        .iter()
        .map(|&e| MenuEntry {
            q: pairs[e].0.clone(),
            price: pairs[e].2,
        })
        .collect();
    Ok(MenuSearch {
        menu: MenuMechanism {
            kind: MenuKind::Lottery,
            n_items: n,
            entries,
        },
        revenue,
        exact_evaluation: eval.exact,
        menus_searched: menus,
    })
}
