//! Monte Carlo audits of mechanisms: revenue and welfare, individual
//! rationality, truthfulness regret and concentration.
//!
//! Replicate `r` draws its valuation profile from stream `2r` of the audit
//! seed and its mechanism randomness from the mechanism's own call stream
//! `r`. Replicates run in parallel and are reduced in index order, so a
//! report depends only on its inputs and not on the thread count.

mod regret;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{optimal_welfare, AuctionInstance};
use crate::mechanism::{Mechanism, SolutionConcept};
use crate::rng::stream_rng;

pub use regret::{
    estimate_regret, estimate_regret_with, ex_post_regret, interim_regret, BicAuditOptions, DeviationGrid, RegretCheck,
};
pub use report::{AuditReport, AuditRow, Concentration, IrCheck};

/// Fewest samples `estimate` accepts.
pub const MIN_SAMPLES: usize = 100;
/// Fewest samples a concentration check accepts.
pub const MIN_CONCENTRATION_SAMPLES: usize = 1000;
/// Truthful utilities above `-IR_TOL` count as individually rational.
pub const IR_TOL: f64 = 1e-9;

/// Per-replicate outcome of a truthful run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicate {
    pub revenue: f64,
    /// Optimal welfare `sum_j max_i v_ij` of the drawn profile.
    pub welfare: f64,
    /// Smallest truthful utility over bidders.
    pub min_utility: f64,
}

/// Run `mech` on `samples` truthful profiles.
pub fn replicates(mech: &Mechanism, instance: &AuctionInstance, samples: usize, seed: u64) -> Result<Vec<Replicate>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let values = instance.sample_profile(&mut stream_rng(seed, 2 * r));
            let o = mech.run(&values, &mut mech.rng_for_call(r))?;
            let min_utility = (0..values.len())
                .map(|i| o.utility(&values, i))
                .fold(f64::INFINITY, f64::min);
            Ok(Replicate {
                revenue: o.revenue(),
                welfare: optimal_welfare(&values),
                min_utility,
            })
        })
        .collect()
}

/// Mean and standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Revenue and welfare fields of an audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Estimate {
    pub revenue_mean: f64,
    pub revenue_std_err: f64,
    pub revenue_ci95: [f64; 2],
    pub welfare_mean: f64,
    pub revenue_to_welfare: f64,
    pub samples: usize,
    pub seed: u64,
}

fn summarize(reps: &[Replicate], seed: u64) -> Estimate {
    let revenue: Vec<f64> = reps.iter().map(|r| r.revenue).collect();
    let welfare: Vec<f64> = reps.iter().map(|r| r.welfare).collect();
    let (revenue_mean, se) = mean_and_stderr(&revenue);
    let (welfare_mean, _) = mean_and_stderr(&welfare);
    Estimate {
        revenue_mean,
        revenue_std_err: se,
        revenue_ci95: [revenue_mean - 1.96 * se, revenue_mean + 1.96 * se],
        welfare_mean,
        revenue_to_welfare: if welfare_mean > 0.0 { revenue_mean / welfare_mean } else { 0.0 },
        samples: reps.len(),
        seed,
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!("audits need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    Ok(())
}

/// Revenue and welfare under truthful bidding.
pub fn estimate(mech: &Mechanism, instance: &AuctionInstance, samples: usize, seed: u64) -> Result<Estimate> {
    check_samples(samples)?;
    Ok(summarize(&replicates(mech, instance, samples, seed)?, seed))
}

fn tally_ir(reps: &[Replicate]) -> IrCheck {
    let mut check = IrCheck::default();
    for (k, r) in reps.iter().enumerate() {
        if r.min_utility < -IR_TOL {
            check.violations += 1;
            if check.worst_sample.is_none() || r.min_utility < check.worst_margin {
                check.worst_margin = r.min_utility;
                check.worst_sample = Some(k);
            }
        }
    }
    check
}

/// Count sampled outcomes where some bidder's truthful utility is negative.
pub fn check_ir(mech: &Mechanism, instance: &AuctionInstance, samples: usize, seed: u64) -> Result<IrCheck> {
    check_samples(samples)?;
    Ok(tally_ir(&replicates(mech, instance, samples, seed)?))
}

fn band_fraction(samples: &[f64], eps: f64) -> f64 {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let inside = samples
        .iter()
        .filter(|&&x| x == mean || (x - mean).abs() < eps * mean)
        .count();
    inside as f64 / samples.len() as f64
}

/// Whether the samples lie in `(1 - eps, 1 + eps)` times their mean with
/// probability at least `1 - delta - slack`.
pub fn check_concentration_with_slack(samples: &[f64], eps: f64, delta: f64, slack: f64) -> Result<Concentration> {
    if samples.len() < MIN_CONCENTRATION_SAMPLES {
        return Err(Error::invalid(format!(
            "concentration checks need at least {MIN_CONCENTRATION_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(eps > 0.0 && (0.0..1.0).contains(&delta)) {
        return Err(Error::invalid(format!("need eps > 0 and delta in [0, 1), got {eps}, {delta}")));
    }
    let fraction = band_fraction(samples, eps);
    Ok(Concentration {
        eps,
        delta,
        passed: fraction >= 1.0 - delta - slack,
        empirical_fraction: fraction,
    })
}

/// Concentration check with the default 0.02 slack for sampling noise.
pub fn check_concentration(samples: &[f64], eps: f64, delta: f64) -> Result<Concentration> {
    check_concentration_with_slack(samples, eps, delta, 0.02)
}

/// Smallest `eps` for which at least a `1 - delta` fraction of the samples
/// sits strictly inside the band.
pub fn concentration_epsilon(samples: &[f64], delta: f64) -> Result<f64> {
    if samples.is_empty() || !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid("need samples and delta in [0, 1)"));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    if mean <= 0.0 {
        return Err(Error::DegenerateInstance("samples have nonpositive mean".into()));
    }
    let mut dev: Vec<f64> = samples.iter().map(|x| (x - mean).abs() / mean).collect();
    dev.sort_by(f64::total_cmp);
    let need = ((1.0 - delta) * samples.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    let d = dev[need - 1];
    Ok(if d == 0.0 { f64::MIN_POSITIVE } else { d.next_up() })
}

/// Settings for a full audit.
#[derive(Debug, Clone)]
pub struct AuditConfig {
    pub samples: usize,
    pub seed: u64,
    /// Concept to audit against; defaults to the mechanism's claim.
    pub concept: Option<SolutionConcept>,
    pub grid: Option<DeviationGrid>,
    /// Profiles used for ex-post regret; defaults to `samples`.
    pub regret_samples: Option<usize>,
    pub bic: BicAuditOptions,
    pub concentration_slack: f64,
}

impl AuditConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        AuditConfig {
            samples,
            seed,
            concept: None,
            grid: None,
            regret_samples: None,
            bic: BicAuditOptions::default(),
            concentration_slack: 0.02,
        }
    }
}

/// Full audit: estimates, IR, regret and welfare concentration at the
/// instance's `(epsilon, delta)`.
pub fn audit(mech: &Mechanism, instance: &AuctionInstance, cfg: &AuditConfig) -> Result<AuditReport> {
    check_samples(cfg.samples)?;
    let reps = replicates(mech, instance, cfg.samples, cfg.seed)?;
    let est = summarize(&reps, cfg.seed);
    let ir = tally_ir(&reps);
    let grid = cfg.grid.clone().unwrap_or_else(|| DeviationGrid::standard(instance));
    let concept = cfg.concept.unwrap_or_else(|| mech.concept());
    let regret = estimate_regret_with(
        mech,
        instance,
        concept,
        &grid,
        cfg.regret_samples.unwrap_or(cfg.samples),
        cfg.seed,
        &cfg.bic,
    )?;
    let welfare: Vec<f64> = reps.iter().map(|r| r.welfare).collect();
    let concentration = if welfare.len() >= MIN_CONCENTRATION_SAMPLES && est.welfare_mean > 0.0 {
        Some(check_concentration_with_slack(
            &welfare,
            instance.epsilon,
            instance.delta,
            cfg.concentration_slack,
        )?)
    } else {
        None
    };
    let alarm = (mech.claims_ir() && ir.violations > 0) || !regret.within_tolerance();
    Ok(AuditReport {
        mechanism: mech.name().to_string(),
        revenue_mean: est.revenue_mean,
        revenue_std_err: est.revenue_std_err,
        revenue_ci95: est.revenue_ci95,
        welfare_mean: est.welfare_mean,
        revenue_to_welfare: est.revenue_to_welfare,
        ir_violations: ir,
        regret,
        concentration,
        samples: cfg.samples,
        seed: cfg.seed,
        alarm,
    })
}
