//! End-to-end construction: dispatch, partition, per-block solvers, combine.

use serde::{Deserialize, Serialize};

use crate::dist::{coarsen, MaxOf, ValueDistribution};
use crate::error::{Error, Result};
use crate::instance::{AuctionInstance, ItemColumn};
use crate::partition::{item_expectations, partition_items_with, range_ratio, Partition};
use crate::rng::derive_seed;
use crate::solvers::eps_dt::{eps_dt_search, DEFAULT_TABLE_CAP};
use crate::solvers::lp::{build_lp, solve_lp_capped, LpConcept, DEFAULT_VARIABLE_CAP};
use crate::solvers::menus::{bundle_price_search, MenuSearchOptions};
use crate::solvers::simplex::DEFAULT_TABLEAU_CAP;
use crate::tail::{iid_reserve, TailProfile};

use super::{combine, reserve_welfare, second_price_reserve, Block, Mechanism, SolutionConcept};

/// Largest default dispatch threshold; beyond it the formula is clamped.
pub const DISPATCH_THRESHOLD_CAP: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Target concept for the high-variance block: DT, IC or BIC.
    pub concept: SolutionConcept,
    /// Monte Carlo samples for expectations of continuous items and for menu evaluation.
    pub samples: usize,
    pub seed: u64,
    /// Bidder count at which population instances switch to per-item reserves.
    pub dispatch_threshold: Option<f64>,
    pub ell_star_override: Option<i64>,
    pub lp_variable_cap: usize,
    pub tableau_cap: f64,
    pub table_cap: f64,
    pub menu_work_cap: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            concept: SolutionConcept::Bic,
            samples: 20_000,
            seed: 0,
            dispatch_threshold: None,
            ell_star_override: None,
            lp_variable_cap: DEFAULT_VARIABLE_CAP,
            tableau_cap: DEFAULT_TABLEAU_CAP,
            table_cap: DEFAULT_TABLE_CAP,
            menu_work_cap: crate::solvers::menus::DEFAULT_WORK_CAP,
        }
    }
}

/// A built mechanism with the metadata needed to replay and audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BuiltMechanism {
    pub name: String,
    pub concept: SolutionConcept,
    pub claims_ir: bool,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Partition>,
    /// Solver objective of the high-variance block, or the reserve guarantee
    /// after dispatch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub mechanism: Mechanism,
}

impl BuiltMechanism {
    fn wrap(instance: &AuctionInstance, mechanism: Mechanism) -> Self {
        BuiltMechanism {
            name: mechanism.name().to_string(),
            concept: mechanism.concept(),
            claims_ir: mechanism.claims_ir(),
            seed: instance.seed,
            epsilon: instance.epsilon,
            delta: instance.delta,
            partition: None,
            objective: None,
            s_hat: None,
            notes: Vec::new(),
            mechanism,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `min((12/eps)^(12/eps), 1e6)`, logging when the cap applies.
pub fn default_dispatch_threshold(eps: f64) -> f64 {
    let exact = (12.0 / eps).powf(12.0 / eps);
    if exact > DISPATCH_THRESHOLD_CAP {
        log::warn!("dispatch threshold (12/eps)^(12/eps) = {exact:.3e} clamped to {DISPATCH_THRESHOLD_CAP:e}");
        DISPATCH_THRESHOLD_CAP
    } else {
        exact
    }
}

/// Build the full mechanism for `instance`.
pub fn build_ptas_mechanism(instance: &AuctionInstance, opts: &PipelineOptions) -> Result<BuiltMechanism> {
    instance.validate()?;
    let threshold = opts
        .dispatch_threshold
        .unwrap_or_else(|| default_dispatch_threshold(instance.epsilon));
    if instance.population && instance.bidders as f64 >= threshold {
        return dispatch_reserves(instance, threshold);
    }
    let expected = item_expectations(instance, opts.samples, opts.seed)?;
    let maxes: Vec<MaxOf> = (0..instance.n_items()).map(|j| instance.item_max(j)).collect();
    let rr = range_ratio(&maxes, instance.epsilon)?;
    let partition = partition_items_with(&expected, rr.c, instance.epsilon, instance.delta, opts.ell_star_override)?;
    assemble(instance, partition, &expected, opts)
}

/// Build with a caller-supplied partition instead of the bucket construction.
pub fn build_with_partition(
    instance: &AuctionInstance,
    partition: Partition,
    opts: &PipelineOptions,
) -> Result<BuiltMechanism> {
    instance.validate()?;
    let n = instance.n_items();
    let mut seen = vec![false; n];
    for &j in partition.r.iter().chain(&partition.s).chain(&partition.t) {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::invalid(format!("partition lists item {j} twice or out of range")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::invalid("partition does not cover every item"));
    }
    let expected = item_expectations(instance, opts.samples, opts.seed)?;
    assemble(instance, partition, &expected, opts)
}

fn dispatch_reserves(instance: &AuctionInstance, threshold: f64) -> Result<BuiltMechanism> {
    let m = instance.bidders as u64;
    let mut reserves = Vec::with_capacity(instance.n_items());
    let mut guarantee = 0.0;
    for j in 0..instance.n_items() {
        let r = iid_reserve(instance.dist(0, j), m, instance.epsilon)?;
        reserves.push(r.reserve);
        guarantee += r.guarantee;
    }
    let mut built = BuiltMechanism::wrap(instance, second_price_reserve(reserves)?);
    built.objective = Some(guarantee);
    built
        .notes
        .push(format!("population of {} bidders reaches dispatch threshold {threshold:.6e}", instance.bidders));
    Ok(built)
}

fn assemble(
    instance: &AuctionInstance,
    partition: Partition,
    expected: &[f64],
    opts: &PipelineOptions,
) -> Result<BuiltMechanism> {
    let mut blocks = Vec::new();
    let mut notes = Vec::new();
    let mut objective = None;
    if !partition.r.is_empty() {
        let sub = instance.restrict_items(&partition.r);
        let (mech, obj, note) = solve_block(&sub, opts)?;
        objective = Some(obj);
        notes.push(note);
        blocks.push(Block::new(partition.r.clone(), mech));
    }
    let mut s_hat = None;
    if !partition.s.is_empty() {
        let s: f64 = partition.s.iter().map(|&j| expected[j]).sum();
        let hat = (1.0 - instance.epsilon) * s;
        s_hat = Some(hat);
        blocks.push(Block::new(partition.s.clone(), reserve_welfare(hat)?));
    }
    if !partition.t.is_empty() {
        notes.push(format!("{} negligible items left unsold", partition.t.len()));
    }
    let mechanism = combine(blocks, partition.t.clone(), instance.n_items())?;
    let mut built = BuiltMechanism::wrap(instance, mechanism);
    built.partition = Some(partition);
    built.objective = objective;
    built.s_hat = s_hat;
    built.notes = notes;
    Ok(built)
}

/// Round every continuous marginal onto the `(1 + eps)` grid over its item's
/// truncation interval. Returns the discrete instance and the interval tops.
pub fn coarsen_instance(instance: &AuctionInstance) -> Result<(AuctionInstance, Vec<f64>)> {
    let eps = instance.epsilon;
    let mut out = instance.clone();
    let mut tops = Vec::with_capacity(instance.n_items());
    for (j, col) in out.items.iter_mut().enumerate() {
        let profile = TailProfile::of(&instance.item_max(j), eps)?;
        tops.push(profile.trunc_hi);
        let round = |d: &ValueDistribution| -> Result<ValueDistribution> {
            if d.is_discrete() {
                Ok(d.clone())
            } else {
                coarsen(d, eps, profile.trunc_lo, profile.trunc_hi)
            }
        };
        match col {
            ItemColumn::Shared(d) => *d = round(d)?,
            ItemColumn::PerBidder(ds) => {
                for d in ds.iter_mut() {
                    *d = round(d)?;
                }
            }
        }
    }
    Ok((out, tops))
}

/// Solve the high-variance block. Returns the mechanism, its solver
/// objective and a short description.
fn solve_block(sub: &AuctionInstance, opts: &PipelineOptions) -> Result<(Mechanism, f64, String)> {
    let eps = sub.epsilon;
    match opts.concept {
        SolutionConcept::Ic | SolutionConcept::Bic => {
            let (discrete, tops) = coarsen_instance(sub)?;
            let approximate = !sub.all_discrete();
            let lp_concept = if opts.concept == SolutionConcept::Ic {
                LpConcept::Ic
            } else {
                LpConcept::Bic
            };
            let model = build_lp(&discrete, lp_concept, opts.lp_variable_cap)?;
            let sol = solve_lp_capped(&model, opts.tableau_cap)?;
            let mut table = sol.into_mechanism(&model);
            if approximate {
                table.concept = table.concept.approximate();
                table.regret_bound = eps * tops.iter().sum::<f64>() + 1e-6;
            }
            let note = format!(
                "{} LP over {} profiles, objective {:.6}",
                opts.concept,
                model.types.profile_count(),
                sol.objective
            );
            Ok((Mechanism::Table(table), sol.objective, note))
        }
        SolutionConcept::Dt if sub.bidders == 1 => {
            let menu_opts = MenuSearchOptions {
                samples: opts.samples,
                seed: derive_seed(opts.seed, 0x6d656e75),
                work_cap: opts.menu_work_cap,
                ..Default::default()
            };
            let found = bundle_price_search(sub, eps, &menu_opts)?;
            let note = format!(
                "bundle pricing over {:.0} menus, revenue {:.6}",
                found.menus_searched, found.revenue
            );
            Ok((Mechanism::Menu(found.menu), found.revenue, note))
        }
        SolutionConcept::Dt => {
            let (discrete, _) = coarsen_instance(sub)?;
            let found = eps_dt_search(&discrete, eps, opts.table_cap)?;
            let note = format!(
                "deterministic table search over {} tables, revenue {:.6}",
                found.tables_searched, found.revenue
            );
            Ok((Mechanism::Table(found.mechanism), found.revenue, note))
        }
        other => Err(Error::invalid(format!("pipeline targets DT, IC or BIC, not {other}"))),
    }
}
