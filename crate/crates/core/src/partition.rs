//! The three-way item split: a small high-expectation group `R`, a group `S`
//! whose total is concentrated, and a negligible group `T`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::MaxOf;
use crate::error::{Error, Result};
use crate::instance::AuctionInstance;
use crate::rng::stream_rng;
use crate::tail::{anchoring_point_of, interval_ratio, truncation_interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    #[serde(rename = "R")]
    pub r: Vec<usize>,
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    #[serde(rename = "T")]
    pub t: Vec<usize>,
    #[serde(rename = "ellStar")]
    pub ell_star: i64,
    #[serde(rename = "sHat")]
    pub s_hat: f64,
    pub c: f64,
    /// Bucket index `l` to the items whose expectation lies in `(s/2^l, s/2^{l-1}]`.
    pub buckets: BTreeMap<i64, Vec<usize>>,
}

impl Partition {
    /// `(16 c^2 / eps^3) ln(2 / delta)`.
    pub fn r_size_bound(c: f64, eps: f64, delta: f64) -> f64 {
        16.0 * c * c / eps.powi(3) * (2.0 / delta).ln()
    }

    /// Minimum size of a bucket `l > l*` that goes to `S`.
    pub fn s_size_cut(c: f64, eps: f64, delta: f64, ell: i64, ell_star: i64) -> f64 {
        2.0 * c * c / (eps * eps) * ((2.0 / delta).ln() + (ell - ell_star) as f64)
    }

    pub fn n_items(&self) -> usize {
        self.r.len() + self.s.len() + self.t.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeRatio {
    pub c: f64,
    /// Per item `[alpha_j, beta_j]`: the truncation interval of `X_j` clipped
    /// to the support of `X_j`.
    pub ranges: Vec<(f64, f64)>,
}

/// Per-item truncated ranges. Items whose max is identically zero get `(0, 0)`.
pub fn range_ratio(maxes: &[MaxOf], eps: f64) -> Result<RangeRatio> {
    if maxes.is_empty() {
        return Err(Error::invalid("range_ratio needs at least one item"));
    }
    let mut ranges = Vec::with_capacity(maxes.len());
    for max in maxes {
        match anchoring_point_of(max) {
            Ok(beta) => {
                let (lo, hi) = truncation_interval(beta, eps)?;
                let lo = lo.max(max.lower()).min(max.upper());
                let hi = hi.min(max.upper()).max(lo);
                ranges.push((lo, hi));
            }
            Err(Error::DegenerateInstance(_)) => ranges.push((0.0, 0.0)),
            Err(e) => return Err(e),
        }
    }
    Ok(RangeRatio {
        c: interval_ratio(eps),
        ranges,
    })
}

/// `l* = ceil(log2((16 c^2 / eps^3) ln(2 / delta)))`.
pub fn ell_star(c: f64, eps: f64, delta: f64) -> i64 {
    Partition::r_size_bound(c, eps, delta).log2().ceil() as i64
}

/// Bucket `l >= 1` with `e in (s / 2^l, s / 2^{l-1}]`, for `0 < e <= s`.
fn bucket_of(e: f64, s: f64) -> i64 {
    let mut ell = (s / e).log2().floor() as i64 + 1;
    while ell > 1 && e > s / 2f64.powi(ell as i32 - 1) {
        ell -= 1;
    }
    while e <= s / 2f64.powi(ell as i32) {
        ell += 1;
    }
    ell
}

pub fn partition_items(expected: &[f64], c: f64, eps: f64, delta: f64) -> Result<Partition> {
    partition_items_with(expected, c, eps, delta, None)
}

/// [`partition_items`] with an optional override of `l*`. Overriding moves
/// the `R`/`S` boundary only; the negligible rule is unchanged.
pub fn partition_items_with(
    expected: &[f64],
    c: f64,
    eps: f64,
    delta: f64,
    ell_star_override: Option<i64>,
) -> Result<Partition> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/4), got {eps}")));
    }
    if !(delta > 0.0 && delta < 0.125) {
        return Err(Error::invalid(format!("delta must lie in (0, 1/8), got {delta}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("range ratio must be positive, got {c}")));
    }
    if let Some(j) = expected.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::invalid(format!("expected max of item {j} is {}", expected[j])));
    }
    let s: f64 = expected.iter().sum();
    if s <= 0.0 {
        return Err(Error::DegenerateInstance("every item has zero expected max".into()));
    }
    let n = expected.len() as f64;
    let negligible = eps * s / (2.0 * n);
    let ell_star = ell_star_override.unwrap_or_else(|| ell_star(c, eps, delta));

    let mut t = Vec::new();
    let mut buckets: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (j, &e) in expected.iter().enumerate() {
        if e <= negligible {
            t.push(j);
        } else {
            buckets.entry(bucket_of(e, s)).or_default().push(j);
        }
    }

    let (mut r, mut s_items) = (Vec::new(), Vec::new());
    for (&ell, items) in &buckets {
        if ell <= ell_star {
            r.extend_from_slice(items);
        } else if items.len() as f64 >= Partition::s_size_cut(c, eps, delta, ell, ell_star) {
            s_items.extend_from_slice(items);
        } else {
            t.extend_from_slice(items);
        }
    }
    r.sort_unstable();
    s_items.sort_unstable();
    t.sort_unstable();
    Ok(Partition {
        r,
        s: s_items,
        t,
        ell_star,
        s_hat: s,
        c,
        buckets,
    })
}

/// `E[max_i v_ij]` per item: exact for discrete columns, otherwise a Monte
/// Carlo mean over `samples` draws (stream `j` of `seed`).
pub fn item_expectations(instance: &AuctionInstance, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    Ok((0..instance.n_items())
        .into_par_iter()
        .map(|j| {
            let max = instance.item_max(j);
            max.exact_expectation().unwrap_or_else(|| {
                let mut rng = stream_rng(seed, j as u64);
                monte_carlo_mean(&max, samples, &mut rng)
            })
        })
        .collect())
}

fn monte_carlo_mean<R: Rng>(max: &MaxOf, samples: usize, rng: &mut R) -> f64 {
    (0..samples).map(|_| max.sample(rng)).sum::<f64>() / samples as f64
}

/// Estimate of `s = sum_j E[max_i v_ij]`.
pub fn estimate_s(instance: &AuctionInstance, samples: usize, seed: u64) -> Result<f64> {
    Ok(item_expectations(instance, samples, seed)?.iter().sum())
}

/// Partition an instance end to end: per-item expectations, truncated ranges,
/// then the bucket construction.
pub fn partition_instance(
    instance: &AuctionInstance,
    samples: usize,
    seed: u64,
    ell_star_override: Option<i64>,
) -> Result<Partition> {
    let expected = item_expectations(instance, samples, seed)?;
    let maxes: Vec<MaxOf> = (0..instance.n_items()).map(|j| instance.item_max(j)).collect();
    let rr = range_ratio(&maxes, instance.epsilon)?;
    partition_items_with(&expected, rr.c, instance.epsilon, instance.delta, ell_star_override)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ValueDistribution;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn coin() -> ValueDistribution {
        ValueDistribution::discrete(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn range_ratio_examples() {
        let points: Vec<MaxOf> = [1.0, 4.0]
            .iter()
            .map(|&v| MaxOf::new(&[ValueDistribution::point(v).unwrap()]).unwrap())
            .collect();
        let rr = range_ratio(&points, 0.1).unwrap();
        assert_eq!(rr.ranges, vec![(1.0, 1.0), (4.0, 4.0)]);
        assert_abs_diff_eq!(rr.c, interval_ratio(0.1));

        assert_abs_diff_eq!(interval_ratio(1.0 / E), 4.0 * E, epsilon = 1e-12);
        assert_abs_diff_eq!(interval_ratio(1.0 / E), 10.873, epsilon = 1e-3);
        assert_abs_diff_eq!(interval_ratio(0.1), 40.0 * 10f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(interval_ratio(0.1), 92.10, epsilon = 1e-2);
    }

    #[test]
    fn single_item_lands_in_r() {
        let p = partition_items(&[1.0], 1.0, 0.1, 0.05).unwrap();
        assert_eq!((p.r, p.s, p.t), (vec![0], vec![], vec![]));
        assert!(p.ell_star >= 1);
    }

    #[test]
    fn negligible_items_go_to_t() {
        // n = 3, s = 10.001: the threshold eps s / 2n is about 0.333
        let p = partition_items(&[5.0, 5.0, 0.001], 1.0, 0.2, 0.1).unwrap();
        assert_eq!(p.t, vec![2]);
        assert_eq!(p.r, vec![0, 1]);
    }

    #[test]
    fn zero_items_go_to_t_and_all_zero_is_degenerate() {
        let p = partition_items(&[1.0, 0.0], 1.0, 0.1, 0.05).unwrap();
        assert_eq!(p.t, vec![1]);
        assert!(matches!(
            partition_items(&[0.0, 0.0], 1.0, 0.1, 0.05),
            Err(Error::DegenerateInstance(_))
        ));
    }

    #[test]
    fn many_identical_items_land_in_s() {
        let (c, eps, delta) = (1.0, 0.24, 0.12);
        let ls = ell_star(c, eps, delta);
        // 16/0.24^3 * ln(2/0.12) = 3256.6 -> l* = 12
        assert_eq!(ls, 12);
        let n = 1usize << (ls + 10);
        let p = partition_items(&vec![1.0; n], c, eps, delta).unwrap();
        assert_eq!(p.buckets.keys().copied().collect::<Vec<_>>(), vec![ls + 11]);
        assert!(n as f64 >= Partition::s_size_cut(c, eps, delta, ls + 11, ls));
        assert_eq!(p.s.len(), n);
    }

    #[test]
    fn bucket_boundaries_are_half_open() {
        assert_eq!(bucket_of(1.0, 1.0), 1);
        assert_eq!(bucket_of(0.5, 1.0), 2);
        assert_eq!(bucket_of(0.500001, 1.0), 1);
        assert_eq!(bucket_of(0.25, 1.0), 3);
        assert_eq!(bucket_of(0.3, 1.0), 2);
    }

    #[test]
    fn estimate_s_examples() {
        let inst = AuctionInstance::population(2, vec![coin()], 0.1, 0.05).unwrap();
        assert_abs_diff_eq!(estimate_s(&inst, 10, 0).unwrap(), 1.75, epsilon = 1e-12);

        let pts = AuctionInstance::population(3, vec![ValueDistribution::point(2.0).unwrap(); 4], 0.1, 0.05).unwrap();
        assert_eq!(estimate_s(&pts, 1, 0).unwrap(), 8.0);

        // 2 bidders, uniform[0,1]: E[max] = 2/3, sd of max = sqrt(1/18)
        let u = AuctionInstance::population(2, vec![ValueDistribution::uniform(0.0, 1.0).unwrap()], 0.1, 0.05).unwrap();
        let est = estimate_s(&u, 100_000, 7).unwrap();
        let sigma = (1.0f64 / 18.0).sqrt() / (100_000f64).sqrt();
        assert!((est - 2.0 / 3.0).abs() <= 3.0 * sigma, "{est}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn partition_invariants(
            expected in prop::collection::vec(0.0f64..10.0, 1..60),
            c in 1.0f64..5.0,
            eps in 0.01f64..0.249,
            delta in 0.001f64..0.124,
        ) {
            prop_assume!(expected.iter().sum::<f64>() > 0.0);
            let p = partition_items(&expected, c, eps, delta).unwrap();
            let mut all: Vec<usize> = p.r.iter().chain(&p.s).chain(&p.t).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..expected.len()).collect::<Vec<_>>());
            prop_assert!(p.r.len() as f64 <= Partition::r_size_bound(c, eps, delta));
            let s: f64 = expected.iter().sum();
            let t_mass: f64 = p.t.iter().map(|&j| expected[j]).sum();
            prop_assert!(t_mass <= eps * s + 1e-9);
        }

        #[test]
        fn partition_is_permutation_equivariant(
            expected in prop::collection::vec(0.0f64..10.0, 2..30),
            seed in any::<u64>(),
        ) {
            prop_assume!(expected.iter().sum::<f64>() > 0.0);
            let n = expected.len();
            let mut perm: Vec<usize> = (0..n).collect();
            // deterministic shuffle keyed by the seed
            let mut x = seed | 1;
            for k in (1..n).rev() {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                perm.swap(k, (x % (k as u64 + 1)) as usize);
            }
            let permuted: Vec<f64> = perm.iter().map(|&j| expected[j]).collect();
            let a = partition_items(&expected, 2.0, 0.1, 0.05).unwrap();
            let b = partition_items(&permuted, 2.0, 0.1, 0.05).unwrap();
            let map = |v: &[usize]| { let mut m: Vec<usize> = v.iter().map(|&k| perm[k]).collect(); m.sort_unstable(); m };
            prop_assert_eq!(map(&b.r), a.r.clone());
            prop_assert_eq!(map(&b.s), a.s.clone());
            prop_assert_eq!(map(&b.t), a.t.clone());
        }
    }
}
