//! Extreme-value anchoring of `max_i X_i`, truncation intervals, and the
//! single-reserve threshold for many i.i.d. bidders.

use serde::{Deserialize, Serialize};

use crate::dist::{MaxOf, ValueDistribution};
use crate::error::{Error, Result};

/// `1 - e^{-1/2}`: the anchoring point `beta` satisfies `P[max >= beta/2] >= ANCHOR_MASS`.
pub fn anchor_mass() -> f64 {
    1.0 - (-0.5f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TailProfile {
    pub beta: f64,
    pub trunc_lo: f64,
    pub trunc_hi: f64,
    pub ratio: f64,
    pub epsilon: f64,
}

impl TailProfile {
    pub fn of(max: &MaxOf, eps: f64) -> Result<Self> {
        let beta = anchoring_point_of(max)?;
        let (trunc_lo, trunc_hi) = truncation_interval(beta, eps)?;
        Ok(TailProfile {
            beta,
            trunc_lo,
            trunc_hi,
            ratio: trunc_hi / trunc_lo,
            epsilon: eps,
        })
    }
}

/// Anchoring point of `max_i X_i` over independent marginals.
pub fn anchoring_point(dists: &[ValueDistribution]) -> Result<f64> {
    anchoring_point_of(&MaxOf::new(dists)?)
}

/// `beta = 2q`, where `q` is the largest `t` with `P[max >= t] >= 1 - e^{-1/2}`.
///
/// Discrete maxima are scanned atom by atom. Otherwise the supported families
/// all have closed-form CDFs, so `q` is found by bisection on the exact
/// survival function and snapped onto any atom it lands next to.
pub fn anchoring_point_of(max: &MaxOf) -> Result<f64> {
    if max.parts().iter().all(|(d, _)| d.expectation() <= 0.0) {
        return Err(Error::DegenerateInstance("every distribution is identically zero".into()));
    }
    let theta = anchor_mass();
    let q = if max.is_discrete() {
        max.atom_values()
            .into_iter()
            .rev()
            .find(|&t| max.survival(t) >= theta - 1e-12)
            .unwrap_or(0.0)
    } else {
        let upper = max.upper();
        let mut hi = if upper.is_finite() { upper } else { 1.0 };
        if upper.is_finite() && max.survival(hi) >= theta {
            hi
        } else {
            while max.survival(hi) >= theta {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if max.survival(mid) >= theta {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            max.atom_values()
                .into_iter()
                .find(|&a| (a - lo).abs() <= 1e-9 * lo.max(1.0) && max.survival(a) >= theta)
                .unwrap_or(lo)
        }
    };
    if q <= 0.0 {
        return Err(Error::DegenerateInstance(
            "the max puts less than 1 - e^{-1/2} mass on positive values".into(),
        ));
    }
    Ok(2.0 * q)
}

/// `(4 / eps) ln(1 / eps)`, the ratio `hi / lo` of every truncation interval.
pub fn interval_ratio(eps: f64) -> f64 {
    4.0 / eps * (1.0 / eps).ln()
}

/// `[eps * beta / 2, 2 beta ln(1/eps)]`.
pub fn truncation_interval(beta: f64, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::invalid(format!("truncation eps must lie in (0, 1/4), got {eps}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("anchoring point must be positive, got {beta}")));
    }
    Ok(truncation_bounds(beta, eps))
}

pub(crate) fn truncation_bounds(beta: f64, eps: f64) -> (f64, f64) {
    (eps * beta / 2.0, 2.0 * beta * (1.0 / eps).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidReserve {
    pub reserve: f64,
    /// `P[max of m draws >= reserve] * reserve`.
    pub guarantee: f64,
}

/// `r * P[max of m i.i.d. draws >= r]`.
pub fn reserve_objective(dist: &ValueDistribution, m: u64, r: f64) -> f64 {
    r * (1.0 - dist.cdf_below(r).powf(m as f64))
}

/// Reserve candidates scanned by [`iid_reserve`]: the full support for
/// discrete laws, otherwise a `(1 + eps)`-geometric grid over the truncation
/// interval of the max (top point snapped outward).
pub fn iid_reserve_candidates(dist: &ValueDistribution, m: u64, eps: f64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::invalid("iid_reserve needs at least one bidder"));
    }
    if let Some(atoms) = dist.atoms() {
        return Ok(atoms.into_iter().map(|a| a.0).collect());
    }
    let profile = TailProfile::of(&MaxOf::iid(dist, m)?, eps)?;
    let mut grid = Vec::new();
    let mut r = profile.trunc_lo;
    loop {
        grid.push(r);
        if r >= profile.trunc_hi {
            break;
        }
        r *= 1.0 + eps;
    }
    Ok(grid)
}

/// Best single reserve for `m` i.i.d. bidders; ties go to the smaller reserve.
pub fn iid_reserve(dist: &ValueDistribution, m: u64, eps: f64) -> Result<IidReserve> {
    let mut best = IidReserve {
        reserve: 0.0,
        guarantee: 0.0,
    };
    for r in iid_reserve_candidates(dist, m, eps)? {
        let g = reserve_objective(dist, m, r);
        if g > best.guarantee {
            best = IidReserve { reserve: r, guarantee: g };
        }
    }
    Ok(best)
}
