//! Independent value marginals: sampling, exact CDFs, hazard-rate checks,
//! exact max-distributions and geometric value coarsening.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities of a discrete marginal must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Relative slack used when snapping values onto geometric grids.
const GRID_SNAP: f64 = 1e-9;

/// A bidder's value for one item.
///
/// Values are validated on construction and on deserialization; the JSON form
/// is one of
/// `{"type":"discrete","support":[..],"probs":[..]}`, `{"type":"uniform","lo":x,"hi":y}`,
/// `{"type":"exponential","rate":r}` or `{"type":"point","value":v}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Fragment", into = "Fragment")]
pub enum ValueDistribution {
    Discrete { support: Vec<f64>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Point { value: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Fragment {
    Discrete { support: Vec<f64>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Point { value: f64 },
}

impl TryFrom<Fragment> for ValueDistribution {
    type Error = Error;

    fn try_from(f: Fragment) -> Result<Self> {
        let d = match f {
            Fragment::Discrete { support, probs } => ValueDistribution::Discrete { support, probs },
            Fragment::Uniform { lo, hi } => ValueDistribution::Uniform { lo, hi },
            Fragment::Exponential { rate } => ValueDistribution::Exponential { rate },
            Fragment::Point { value } => ValueDistribution::Point { value },
        };
        d.validate()?;
        Ok(d)
    }
}

impl From<ValueDistribution> for Fragment {
    fn from(d: ValueDistribution) -> Self {
        match d {
            ValueDistribution::Discrete { support, probs } => Fragment::Discrete { support, probs },
            ValueDistribution::Uniform { lo, hi } => Fragment::Uniform { lo, hi },
            ValueDistribution::Exponential { rate } => Fragment::Exponential { rate },
            ValueDistribution::Point { value } => Fragment::Point { value },
        }
    }
}

/// Verdict of [`ValueDistribution::check_mhr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MhrVerdict {
    pub is_mhr: bool,
    /// Index of the first support point whose hazard is below its predecessor's.
    pub witness: Option<usize>,
}

fn nonneg_finite(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl ValueDistribution {
    pub fn discrete(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let d = ValueDistribution::Discrete { support, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = ValueDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let d = ValueDistribution::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn point(value: f64) -> Result<Self> {
        let d = ValueDistribution::Point { value };
        d.validate()?;
        Ok(d)
    }

    /// Build a discrete distribution from unordered, possibly repeated atoms.
    /// Atoms with non-positive mass are dropped; a single surviving atom
    /// becomes a point mass.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|&(_, p)| p > 0.0).collect();
        if atoms.is_empty() {
            return Err(Error::invalid("distribution has no positive-mass atoms"));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match support.last() {
                Some(&last) if last == v => *probs.last_mut().unwrap() += p,
                _ => {
                    support.push(v);
                    probs.push(p);
                }
            }
        }
        if support.len() == 1 {
            return ValueDistribution::point(support[0]);
        }
        ValueDistribution::discrete(support, probs)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ValueDistribution::Discrete { support, probs } => {
                if support.is_empty() {
                    return Err(Error::invalid("discrete support is empty"));
                }
                if support.len() != probs.len() {
                    return Err(Error::invalid(format!(
                        "discrete support has {} values but probs has {}",
                        support.len(),
                        probs.len()
                    )));
                }
                if !support.iter().all(|&v| nonneg_finite(v)) {
                    return Err(Error::invalid("discrete support values must be finite and >= 0"));
                }
                if support.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("discrete support must be strictly ascending"));
                }
                if !probs.iter().all(|&p| p.is_finite() && p > 0.0) {
                    return Err(Error::invalid("discrete probs must be > 0"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::invalid(format!("discrete probs sum to {total}, expected 1")));
                }
            }
            ValueDistribution::Uniform { lo, hi } => {
                if !nonneg_finite(*lo) || !nonneg_finite(*hi) || hi <= lo {
                    return Err(Error::invalid(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]")));
                }
            }
            ValueDistribution::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::invalid(format!("exponential rate must be > 0, got {rate}")));
                }
            }
            ValueDistribution::Point { value } => {
                if !nonneg_finite(*value) {
                    return Err(Error::invalid(format!("point value must be finite and >= 0, got {value}")));
                }
            }
        }
        Ok(())
    }

    /// Exact mean.
    pub fn expectation(&self) -> f64 {
        match self {
            ValueDistribution::Discrete { support, probs } => support.iter().zip(probs).map(|(v, p)| v * p).sum(),
            ValueDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            ValueDistribution::Exponential { rate } => 1.0 / rate,
            ValueDistribution::Point { value } => *value,
        }
    }

    /// `E[X * 1{lo <= X <= hi}]` in closed form.
    pub fn truncated_expectation(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        match self {
            ValueDistribution::Discrete { support, probs } => support
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v >= lo && **v <= hi)
                .map(|(v, p)| v * p)
                .sum(),
            ValueDistribution::Point { value } => {
                if *value >= lo && *value <= hi {
                    *value
                } else {
                    0.0
                }
            }
            ValueDistribution::Uniform { lo: a, hi: b } => {
                let l = lo.max(*a);
                let h = hi.min(*b);
                if h <= l {
                    0.0
                } else {
                    (h * h - l * l) / (2.0 * (b - a))
                }
            }
            ValueDistribution::Exponential { rate } => {
                let l = lo.max(0.0);
                let antiderivative = |x: f64| {
                    if x.is_infinite() {
                        0.0
                    } else {
                        -(x + 1.0 / rate) * (-rate * x).exp()
                    }
                };
                antiderivative(hi) - antiderivative(l)
            }
        }
    }

    /// `P[X <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ValueDistribution::Discrete { support, probs } => {
                support.iter().zip(probs).take_while(|(v, _)| **v <= x).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
            ValueDistribution::Point { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf_below(x),
        }
    }

    /// `P[X < x]`.
    pub fn cdf_below(&self, x: f64) -> f64 {
        match self {
            ValueDistribution::Discrete { support, probs } => {
                support.iter().zip(probs).take_while(|(v, _)| **v < x).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
            ValueDistribution::Point { value } => {
                if x > *value {
                    1.0
                } else {
                    0.0
                }
            }
            ValueDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ValueDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * x).exp()
                }
            }
        }
    }

    /// `P[X >= t]`.
    pub fn survival(&self, t: f64) -> f64 {
        1.0 - self.cdf_below(t)
    }

    /// Atoms `(value, mass)` for discrete and point distributions.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            ValueDistribution::Discrete { support, probs } => {
                Some(support.iter().copied().zip(probs.iter().copied()).collect())
            }
            ValueDistribution::Point { value } => Some(vec![(*value, 1.0)]),
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ValueDistribution::Discrete { .. } | ValueDistribution::Point { .. })
    }

    /// Smallest and largest values in the support (`hi` may be infinite).
    pub fn support_range(&self) -> (f64, f64) {
        match self {
            ValueDistribution::Discrete { support, .. } => (support[0], *support.last().unwrap()),
            ValueDistribution::Uniform { lo, hi } => (*lo, *hi),
            ValueDistribution::Exponential { .. } => (0.0, f64::INFINITY),
            ValueDistribution::Point { value } => (*value, *value),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ValueDistribution::Discrete { support, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in support.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *support.last().unwrap()
            }
            ValueDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ValueDistribution::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            ValueDistribution::Point { value } => *value,
        }
    }

    /// Smallest `x` with `P[X <= x] >= u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            ValueDistribution::Discrete { support, probs } => {
                let mut acc = 0.0;
                for (v, p) in support.iter().zip(probs) {
                    acc += p;
                    if u <= acc {
                        return *v;
                    }
                }
                *support.last().unwrap()
            }
            ValueDistribution::Uniform { lo, hi } => lo + (hi - lo) * u,
            ValueDistribution::Exponential { rate } => -(1.0 - u).ln() / rate,
            ValueDistribution::Point { value } => *value,
        }
    }

    /// One draw of the sum of `count` independent copies.
    ///
    /// Discrete laws use multinomial counts and exponentials a Gamma draw, so
    /// the cost does not grow with `count`; uniforms are summed directly.
    pub fn sample_iid_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> f64 {
        if count == 0 {
            return 0.0;
        }
        match self {
            ValueDistribution::Point { value } => value * count as f64,
            ValueDistribution::Discrete { support, probs } => {
                let mut remaining = count;
                let mut mass_left = 1.0;
                let mut total = 0.0;
                for (k, (v, p)) in support.iter().zip(probs).enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let drawn = if k + 1 == support.len() || mass_left <= *p {
                        remaining
                    } else {
                        let q = (p / mass_left).clamp(0.0, 1.0);
                        Binomial::new(remaining, q).map(|b| b.sample(rng)).unwrap_or(remaining)
                    };
                    total += v * drawn as f64;
                    remaining -= drawn;
                    mass_left -= p;
                }
                total
            }
            ValueDistribution::Exponential { rate } => {
                let g = Gamma::new(count as f64, 1.0 / rate).expect("valid gamma parameters");
                g.sample(rng)
            }
            ValueDistribution::Uniform { .. } => (0..count).map(|_| self.sample(rng)).sum(),
        }
    }

    /// Monotone-hazard-rate check.
    ///
    /// Uniform, exponential and point laws are MHR in closed form. Discrete laws
    /// use the discrete hazard `h(v_i) = p_i / sum_{j >= i} p_j`, which must be
    /// non-decreasing along the support.
    pub fn check_mhr(&self) -> MhrVerdict {
        match self {
            ValueDistribution::Discrete { probs, .. } => {
                let mut tail: f64 = probs.iter().sum();
                let mut prev = f64::NEG_INFINITY;
                for (i, p) in probs.iter().enumerate() {
                    let h = if tail > 0.0 { (p / tail).min(1.0) } else { 1.0 };
                    if h < prev - 1e-12 {
                        return MhrVerdict {
                            is_mhr: false,
                            witness: Some(i),
                        };
                    }
                    prev = h;
                    tail -= p;
                }
                MhrVerdict {
                    is_mhr: true,
                    witness: None,
                }
            }
            _ => MhrVerdict {
                is_mhr: true,
                witness: None,
            },
        }
    }

    /// Bounded-ratio alternative to MHR: the support lies in an interval
    /// `[a, b]` with `a > 0` and `b <= ratio * a`.
    pub fn has_bounded_ratio(&self, ratio: f64) -> bool {
        let (a, b) = self.support_range();
        a > 0.0 && b.is_finite() && b <= ratio * a
    }
}

/// The law of `max` over independent draws, where each part may be repeated
/// (`multiplicity` i.i.d. copies).
#[derive(Debug, Clone, PartialEq)]
pub struct MaxOf {
    parts: Vec<(ValueDistribution, u64)>,
}

impl MaxOf {
    pub fn new(dists: &[ValueDistribution]) -> Result<Self> {
        if dists.is_empty() {
            return Err(Error::invalid("max of an empty list of distributions"));
        }
        Ok(MaxOf {
            parts: dists.iter().map(|d| (d.clone(), 1)).collect(),
        })
    }

    /// Max of `m` i.i.d. copies of `dist`.
    pub fn iid(dist: &ValueDistribution, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("max over zero draws"));
        }
        Ok(MaxOf {
            parts: vec![(dist.clone(), m)],
        })
    }

    pub fn parts(&self) -> &[(ValueDistribution, u64)] {
        &self.parts
    }

    pub fn is_discrete(&self) -> bool {
        self.parts.iter().all(|(d, _)| d.is_discrete())
    }

    /// `P[max < x]`.
    pub fn cdf_below(&self, x: f64) -> f64 {
        self.parts.iter().map(|(d, k)| d.cdf_below(x).powf(*k as f64)).product()
    }

    /// `P[max <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.parts.iter().map(|(d, k)| d.cdf(x).powf(*k as f64)).product()
    }

    /// `P[max >= t]`.
    pub fn survival(&self, t: f64) -> f64 {
        1.0 - self.cdf_below(t)
    }

    /// Sorted union of all atoms of the discrete parts.
    pub fn atom_values(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self
            .parts
            .iter()
            .filter_map(|(d, _)| d.atoms())
            .flatten()
            .map(|(v, _)| v)
            .collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }

    /// Largest value in the support of the max.
    pub fn upper(&self) -> f64 {
        self.parts.iter().map(|(d, _)| d.support_range().1).fold(0.0, f64::max)
    }

    /// Exact law of the max when every part is discrete, via the product of
    /// CDFs over the merged support.
    pub fn exact(&self) -> Option<ValueDistribution> {
        if !self.is_discrete() {
            return None;
        }
        let mut prev = 0.0;
        let atoms: Vec<(f64, f64)> = self
            .atom_values()
            .into_iter()
            .map(|v| {
                let f = self.cdf(v);
                let p = (f - prev).max(0.0);
                prev = f;
                (v, p)
            })
            .collect();
        ValueDistribution::from_atoms(atoms).ok()
    }

    /// Smallest value in the support of the max.
    pub fn lower(&self) -> f64 {
        self.parts.iter().map(|(d, _)| d.support_range().0).fold(0.0, f64::max)
    }

    /// `E[max]` when every part is discrete.
    pub fn exact_expectation(&self) -> Option<f64> {
        self.exact().map(|d| d.expectation())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut best = 0.0_f64;
        for (d, k) in &self.parts {
            if *k > 16 {
                // max of k i.i.d. draws has CDF F^k
                let u: f64 = rng.random();
                best = best.max(d.quantile(u.powf(1.0 / *k as f64)));
            } else {
                for _ in 0..*k {
                    best = best.max(d.sample(rng));
                }
            }
        }
        best
    }
}

/// Result of [`max_distribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum MaxDistribution {
    /// Exact discrete law of the max.
    Exact(ValueDistribution),
    /// At least one continuous part: draw every coordinate and take the max.
    Sampler(MaxOf),
}

impl MaxDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MaxDistribution::Exact(d) => d.sample(rng),
            MaxDistribution::Sampler(m) => m.sample(rng),
        }
    }
}

/// Law of `max_i X_i` for independent `X_i`.
pub fn max_distribution(dists: &[ValueDistribution]) -> Result<MaxDistribution> {
    if dists.len() == 1 {
        return Ok(MaxDistribution::Exact(dists[0].clone()));
    }
    let max = MaxOf::new(dists)?;
    Ok(match max.exact() {
        Some(d) => MaxDistribution::Exact(d),
        None => MaxDistribution::Sampler(max),
    })
}

/// Geometric grid `{ratio^k}` used by [`coarsen`]; `k` ranges over the powers
/// whose cells cover `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
struct PowerGrid {
    ratio: f64,
    k_lo: i32,
    k_hi: i32,
}

impl PowerGrid {
    fn covering(ratio: f64, lo: f64, hi: f64) -> Self {
        PowerGrid {
            ratio,
            k_lo: floor_power(ratio, lo),
            k_hi: floor_power(ratio, hi),
        }
    }

    fn point(&self, k: i32) -> f64 {
        self.ratio.powi(k)
    }

    /// Largest grid point `<= v` (after clamping into the covered range).
    fn round_down(&self, v: f64) -> f64 {
        self.point(floor_power(self.ratio, v).clamp(self.k_lo, self.k_hi))
    }
}

/// Largest `k` with `ratio^k <= v`, tolerant to rounding at exact powers.
fn floor_power(ratio: f64, v: f64) -> i32 {
    let mut k = (v.ln() / ratio.ln() + GRID_SNAP).floor() as i32;
    while ratio.powi(k + 1) <= v * (1.0 + GRID_SNAP) {
        k += 1;
    }
    while ratio.powi(k) > v * (1.0 + GRID_SNAP) {
        k -= 1;
    }
    k
}

/// Round values onto powers of `(1 + eps)`.
///
/// Mass below `lo` maps to 0, mass above `hi` is clamped to `hi`, and every
/// surviving value `v` maps to the largest grid power `v' <= v`, so that
/// `v' <= v <= v' (1 + eps)`. The grid's bottom power is snapped down to cover
/// `lo`. Continuous inputs are coarsened through their exact CDF.
pub fn coarsen(dist: &ValueDistribution, eps: f64, lo: f64, hi: f64) -> Result<ValueDistribution> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("coarsening eps must lie in (0, 1), got {eps}")));
    }
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::invalid(format!("coarsening interval needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let grid = PowerGrid::covering(1.0 + eps, lo, hi);
    let image = |v: f64| if v < lo { 0.0 } else { grid.round_down(v.min(hi)) };

    if let Some(atoms) = dist.atoms() {
        return ValueDistribution::from_atoms(atoms.into_iter().map(|(v, p)| (image(v), p)));
    }

    let mut atoms = vec![(0.0, dist.cdf_below(lo))];
    for k in grid.k_lo..=grid.k_hi {
        let start = grid.point(k).max(lo);
        let mass = if k == grid.k_hi {
            dist.survival(start)
        } else {
            dist.cdf_below(grid.point(k + 1)) - dist.cdf_below(start)
        };
        atoms.push((grid.point(k), mass.max(0.0)));
    }
    ValueDistribution::from_atoms(atoms)
}
