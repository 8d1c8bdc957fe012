use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::RegretCheck;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IrCheck {
    pub violations: usize,
    /// Most negative truthful utility among violating samples (0 if none).
    pub worst_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_sample: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Concentration {
    pub eps: f64,
    pub delta: f64,
    pub passed: bool,
    pub empirical_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub mechanism: String,
    pub revenue_mean: f64,
    pub revenue_std_err: f64,
    #[serde(rename = "revenueCI95")]
    pub revenue_ci95: [f64; 2],
    /// Mean optimal welfare `E[sum_j max_i v_ij]`.
    pub welfare_mean: f64,
    pub revenue_to_welfare: f64,
    pub ir_violations: IrCheck,
    pub regret: RegretCheck,
    /// Welfare concentration; absent below the minimum sample count.
    pub concentration: Option<Concentration>,
    pub samples: usize,
    pub seed: u64,
    /// Set when a claimed IR or incentive guarantee failed the audit.
    pub alarm: bool,
}

/// Flat form of a report for CSV output. Column order is fixed by field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditRow {
    pub mechanism: String,
    pub samples: usize,
    pub seed: u64,
    pub revenue_mean: f64,
    pub revenue_std_err: f64,
    pub revenue_ci95_lo: f64,
    pub revenue_ci95_hi: f64,
    pub welfare_mean: f64,
    pub revenue_to_welfare: f64,
    pub ir_violations: usize,
    pub ir_worst_margin: f64,
    pub regret_concept: String,
    pub regret_max_observed: f64,
    pub regret_tolerance: f64,
    pub concentration_eps: Option<f64>,
    pub concentration_delta: Option<f64>,
    pub concentration_passed: Option<bool>,
    pub concentration_fraction: Option<f64>,
    pub alarm: bool,
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn row(&self) -> AuditRow {
        let c = self.concentration;
        AuditRow {
            mechanism: self.mechanism.clone(),
            samples: self.samples,
            seed: self.seed,
            revenue_mean: self.revenue_mean,
            revenue_std_err: self.revenue_std_err,
            revenue_ci95_lo: self.revenue_ci95[0],
            revenue_ci95_hi: self.revenue_ci95[1],
            welfare_mean: self.welfare_mean,
            revenue_to_welfare: self.revenue_to_welfare,
            ir_violations: self.ir_violations.violations,
            ir_worst_margin: self.ir_violations.worst_margin,
            regret_concept: self.regret.concept.to_string(),
            regret_max_observed: self.regret.max_observed,
            regret_tolerance: self.regret.tolerance,
            concentration_eps: c.map(|c| c.eps),
            concentration_delta: c.map(|c| c.delta),
            concentration_passed: c.map(|c| c.passed),
            concentration_fraction: c.map(|c| c.empirical_fraction),
            alarm: self.alarm,
        }
    }

    /// Header plus one row per report.
    pub fn to_csv(reports: &[AuditReport]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in reports {
            w.serialize(r.row()).map_err(|e| Error::Malformed(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Malformed(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
