//! Command-line front end.
//!
//! Exit codes: 0 success, 1 solver failure, 2 malformed input or bad
//! arguments, 3 degenerate instance, 4 a size cap was exceeded, 5 an audit
//! found a violated IR or incentive claim.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{audit, AuditConfig, AuditReport};
use crate::instance::AuctionInstance;
use crate::mechanism::{build_ptas_mechanism, BuiltMechanism, Mechanism, PipelineOptions, SolutionConcept};
use crate::partition::{partition_instance, Partition};
use crate::solvers::lp::{build_lp, LpConcept, DEFAULT_VARIABLE_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_TOO_LARGE: i32 = 4;
pub const EXIT_ALARM: i32 = 5;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "AUCTIONFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "auctionforge", version, about = "Build and audit simple near-optimal multi-item auctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the items into high-variance, concentrated and negligible groups.
    Partition(CommonArgs),
    /// Build the full mechanism and write its replayable metadata.
    Build(CommonArgs),
    /// Replay a saved mechanism on sampled profiles and report.
    Audit {
        #[command(flatten)]
        common: CommonArgs,
        /// Mechanism file written by `build` (or a bare mechanism).
        #[arg(long)]
        mechanism: PathBuf,
    },
    /// Write the incentive LP of a discrete instance in text form.
    LpExport(CommonArgs),
    /// Build and audit at several epsilons.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConceptArg {
    Dt,
    Ic,
    Bic,
}

impl From<ConceptArg> for SolutionConcept {
    fn from(c: ConceptArg) -> Self {
        match c {
            ConceptArg::Dt => SolutionConcept::Dt,
            ConceptArg::Ic => SolutionConcept::Ic,
            ConceptArg::Bic => SolutionConcept::Bic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Overrides the instance's epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Overrides the instance's delta.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Overrides the instance's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "bic")]
    pub concept: ConceptArg,
    #[arg(long)]
    pub dispatch_threshold: Option<u64>,
    /// Output file; data goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

/// Resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub command: String,
    pub instance_path: PathBuf,
    pub epsilon: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub solution_concept: SolutionConcept,
    pub dispatch_threshold_override: Option<u64>,
    pub output_path: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

impl RunConfig {
    /// Load the instance and apply the flag overrides.
    pub fn resolve(command: &str, args: &CommonArgs) -> Result<(Self, AuctionInstance)> {
        let mut inst = AuctionInstance::load(&args.instance)?;
        if let Some(e) = args.epsilon {
            inst.epsilon = e;
        }
        if let Some(d) = args.delta {
            inst.delta = d;
        }
        if let Some(s) = args.seed {
            inst.seed = s;
        }
        inst.validate()?;
        if args.samples < crate::harness::MIN_SAMPLES {
            return Err(Error::invalid(format!(
                "--samples must be at least {}, got {}",
                crate::harness::MIN_SAMPLES,
                args.samples
            )));
        }
        let cfg = RunConfig {
            command: command.to_string(),
            instance_path: args.instance.clone(),
            epsilon: inst.epsilon,
            delta: inst.delta,
            samples: args.samples,
            seed: inst.seed,
            solution_concept: args.concept.into(),
            dispatch_threshold_override: args.dispatch_threshold,
            output_path: args.out.clone(),
            format: args.format,
        };
        Ok((cfg, inst))
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            concept: self.solution_concept,
            samples: self.samples,
            seed: self.seed,
            dispatch_threshold: self.dispatch_threshold_override.map(|t| t as f64),
            ..Default::default()
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Malformed(_) | Error::Io(_) => EXIT_INPUT,
        Error::DegenerateInstance(_) => EXIT_DEGENERATE,
        Error::TooLarge { .. } => EXIT_TOO_LARGE,
        Error::Solver(_) => EXIT_SOLVER,
    }
}

fn emit(out: Option<&Path>, data: &str) -> Result<()> {
    match out {
        Some(path) => Ok(fs::write(path, data)?),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

/// Print a summary line, on stderr when stdout carries the data.
fn summary(cfg: &RunConfig, line: &str) {
    if cfg.output_path.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

pub fn cmd_partition(args: &CommonArgs) -> Result<Partition> {
    let (cfg, inst) = RunConfig::resolve("partition", args)?;
    let p = partition_instance(&inst, cfg.samples, cfg.seed, None)?;
    emit(cfg.output_path.as_deref(), &with_newline(serde_json::to_string_pretty(&p)?))?;
    summary(
        &cfg,
        &format!(
            "|R| = {} (bound {:.3e}), |S| = {}, |T| = {}, ellStar = {}, c = {:.4}",
            p.r.len(),
            Partition::r_size_bound(p.c, cfg.epsilon, cfg.delta),
            p.s.len(),
            p.t.len(),
            p.ell_star,
            p.c
        ),
    );
    Ok(p)
}

pub fn cmd_build(args: &CommonArgs) -> Result<BuiltMechanism> {
    let (cfg, inst) = RunConfig::resolve("build", args)?;
    let built = build_ptas_mechanism(&inst, &cfg.pipeline_options())?;
    emit(cfg.output_path.as_deref(), &with_newline(built.to_json()?))?;
    let objective = built.objective.map_or("none".to_string(), |o| format!("{o:.6}"));
    summary(
        &cfg,
        &format!("built {} ({}), block objective {objective}", built.name, built.concept),
    );
    Ok(built)
}

/// Load a mechanism file: build metadata or a bare mechanism.
pub fn load_mechanism(path: &Path) -> Result<Mechanism> {
    let text = fs::read_to_string(path)?;
    match BuiltMechanism::from_json(&text) {
        Ok(b) => Ok(b.mechanism),
        Err(_) => Mechanism::from_json(&text),
    }
}

fn render_reports(reports: &[AuditReport], format: Format, single: bool) -> Result<String> {
    match format {
        Format::Csv => AuditReport::to_csv(reports),
        Format::Json if single => Ok(with_newline(reports[0].to_json()?)),
        Format::Json => Ok(with_newline(serde_json::to_string_pretty(reports)?)),
    }
}

pub fn cmd_audit(args: &CommonArgs, mechanism: &Path) -> Result<AuditReport> {
    let (cfg, inst) = RunConfig::resolve("audit", args)?;
    let mech = load_mechanism(mechanism)?;
    let report = audit(&mech, &inst, &AuditConfig::new(cfg.samples, cfg.seed))?;
    emit(
        cfg.output_path.as_deref(),
        &render_reports(std::slice::from_ref(&report), cfg.format, true)?,
    )?;
    summary(
        &cfg,
        &format!(
            "{}: revenue {:.6} +/- {:.6}, IR violations {}, regret {:.3e} ({}){}",
            report.mechanism,
            report.revenue_mean,
            1.96 * report.revenue_std_err,
            report.ir_violations.violations,
            report.regret.max_observed,
            report.regret.concept,
            if report.alarm { ", ALARM" } else { "" }
        ),
    );
    Ok(report)
}

pub fn cmd_lp_export(args: &CommonArgs) -> Result<String> {
    let (cfg, inst) = RunConfig::resolve("lp-export", args)?;
    let concept = match args.concept {
        ConceptArg::Ic => LpConcept::Ic,
        ConceptArg::Bic => LpConcept::Bic,
        ConceptArg::Dt => return Err(Error::invalid("lp-export supports --concept ic or bic")),
    };
    let model = build_lp(&inst, concept, DEFAULT_VARIABLE_CAP)?;
    let text = model.export();
    emit(cfg.output_path.as_deref(), &text)?;
    summary(&cfg, &format!("{} variables, {} rows", model.n_vars(), model.rows.len()));
    Ok(text)
}

pub fn cmd_sweep(args: &CommonArgs, epsilons: &[f64]) -> Result<Vec<AuditReport>> {
    let (cfg, inst) = RunConfig::resolve("sweep", args)?;
    let mut reports = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut at = inst.clone();
        at.epsilon = eps;
        at.validate()?;
        let built = build_ptas_mechanism(&at, &cfg.pipeline_options())?;
        let report = audit(&built.mechanism, &at, &AuditConfig::new(cfg.samples, cfg.seed))?;
        summary(
            &cfg,
            &format!("eps {eps}: {} revenue {:.6}", built.name, report.revenue_mean),
        );
        reports.push(report);
    }
    emit(cfg.output_path.as_deref(), &render_reports(&reports, cfg.format, false)?)?;
    Ok(reports)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::invalid(format!("{THREADS_ENV} must be positive")));
        }
        // a second call in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Partition(a) => cmd_partition(a).map(|_| EXIT_OK),
        Command::Build(a) => cmd_build(a).map(|_| EXIT_OK),
        Command::Audit { common, mechanism } => {
            cmd_audit(common, mechanism).map(|r| if r.alarm { EXIT_ALARM } else { EXIT_OK })
        }
        Command::LpExport(a) => cmd_lp_export(a).map(|_| EXIT_OK),
        Command::Sweep { common, epsilons } => {
            cmd_sweep(common, epsilons).map(|rs| if rs.iter().any(|r| r.alarm) { EXIT_ALARM } else { EXIT_OK })
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "auctionforge",
            "sweep",
            "--instance",
            "x.json",
            "--epsilons",
            "0.05,0.1",
            "--concept",
            "dt",
            "--format",
            "csv",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep { common, epsilons } => {
                assert_eq!(epsilons, vec![0.05, 0.1]);
                assert_eq!(common.concept, ConceptArg::Dt);
                assert_eq!(common.format, Format::Csv);
                assert_eq!(common.samples, 10_000);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Cli::try_parse_from(["auctionforge", "audit", "--instance", "x.json"]).is_err());
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Malformed("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::DegenerateInstance("x".into())), EXIT_DEGENERATE);
        assert_eq!(exit_code(&Error::too_large("x", 2.0, 1.0)), EXIT_TOO_LARGE);
    }
}
