//! Exact revenue-maximizing LPs over a finite type space.
//!
//! Variables are `x(v)_ij` (probability bidder `i` gets item `j` at profile
//! `v`) and `p(v)_i` (payment, free). Rows are supply, per-profile IR, and
//! either ex-post IC or interim BIC constraints.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::AuctionInstance;
use crate::mechanism::{SolutionConcept, TableMechanism};
use crate::mechanism::table::TableSource;
use crate::typespace::TypeSpace;

use super::simplex::{self, Sense, SparseRow};

pub const DEFAULT_VARIABLE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpConcept {
    #[serde(rename = "IC")]
    Ic,
    #[serde(rename = "BIC")]
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Supply,
    Ir,
    Ic,
    Bic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub kind: RowKind,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub concept: LpConcept,
    pub types: TypeSpace,
    pub var_names: Vec<String>,
    /// Payment variables are free; allocation variables are nonnegative.
    pub free: Vec<bool>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<LpRow>,
}

impl LpModel {
    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn count(&self, kind: RowKind) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    fn layout(&self) -> (usize, usize) {
        (self.types.n_bidders(), self.types.n_items())
    }

    pub fn x_index(&self, profile: usize, bidder: usize, item: usize) -> usize {
        let (m, n) = self.layout();
        profile * (m * n + m) + bidder * n + item
    }

    pub fn p_index(&self, profile: usize, bidder: usize) -> usize {
        let (m, n) = self.layout();
        profile * (m * n + m) + m * n + bidder
    }

    /// Plain-text export, one row per line, for cross-checking against
    /// external solvers. The output depends only on the model.
    pub fn export(&self) -> String {
        let mut s = String::new();
        let concept = match self.concept {
            LpConcept::Ic => "IC",
            LpConcept::Bic => "BIC",
        };
        let _ = writeln!(s, "\\ auctionforge revenue LP");
        let _ = writeln!(
            s,
            "\\ concept {concept}, {} profiles, {} bidders, {} items, {} variables, {} rows",
            self.types.profile_count(),
            self.types.n_bidders(),
            self.types.n_items(),
            self.n_vars(),
            self.rows.len()
        );
        let _ = writeln!(s, "maximize");
        let _ = writeln!(s, " obj:{}", self.expr(&self.objective));
        let _ = writeln!(s, "subject to");
        for row in &self.rows {
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {}:{} {op} {}", row.name, self.expr(&row.coeffs), row.rhs);
        }
        let _ = writeln!(s, "bounds");
        for (k, name) in self.var_names.iter().enumerate() {
            if self.free[k] {
                let _ = writeln!(s, " {name} free");
            } else {
                let _ = writeln!(s, " 0 <= {name} <= 1");
            }
        }
        let _ = writeln!(s, "end");
        s
    }

    fn expr(&self, coeffs: &[(usize, f64)]) -> String {
        let mut s = String::new();
        for &(k, c) in coeffs {
            let sign = if c < 0.0 { '-' } else { '+' };
            let _ = write!(s, " {sign}{} {}", c.abs(), self.var_names[k]);
        }
        s
    }
}

/// Build the LP for an all-discrete instance. Fails with `TooLarge` when the
/// variable count exceeds `variable_cap`.
pub fn build_lp(instance: &AuctionInstance, concept: LpConcept, variable_cap: usize) -> Result<LpModel> {
    let types = TypeSpace::from_instance(instance)?;
    let (m, n) = (types.n_bidders(), types.n_items());
    let vars = types.profile_count_f64() * (m * n + m) as f64;
    if vars > variable_cap as f64 {
        return Err(Error::too_large("LP variables", vars, variable_cap as f64));
    }
    let profiles = types.profile_count();
    let mut model = LpModel {
        concept,
        types,
        var_names: Vec::with_capacity(vars as usize),
        free: Vec::with_capacity(vars as usize),
        objective: Vec::new(),
        rows: Vec::new(),
    };
    for p in 0..profiles {
        for i in 0..m {
            for j in 0..n {
                model.var_names.push(format!("x_v{p}_b{i}_i{j}"));
                model.free.push(false);
            }
        }
        for i in 0..m {
            model.var_names.push(format!("p_v{p}_b{i}"));
            model.free.push(true);
        }
    }
    let ts = model.types.clone();
    let values: Vec<_> = (0..profiles).map(|p| ts.profile_values(p)).collect();
    let probs: Vec<f64> = (0..profiles).map(|p| ts.profile_prob(p)).collect();

    for p in 0..profiles {
        for i in 0..m {
            model.objective.push((model.p_index(p, i), probs[p]));
        }
    }
    for p in 0..profiles {
        for j in 0..n {
            model.rows.push(LpRow {
                name: format!("supply_v{p}_i{j}"),
                kind: RowKind::Supply,
                coeffs: (0..m).map(|i| (model.x_index(p, i, j), 1.0)).collect(),
                sense: Sense::Le,
                rhs: 1.0,
            });
        }
    }
    // utility of bidder i with values `v` when the outcome is that of profile q
    let utility = |model: &LpModel, q: usize, i: usize, v: &[f64], sign: f64, out: &mut Vec<(usize, f64)>| {
        for (j, &vj) in v.iter().enumerate() {
            out.push((model.x_index(q, i, j), sign * vj));
        }
        out.push((model.p_index(q, i), -sign));
    };
    for p in 0..profiles {
        for i in 0..m {
            let mut coeffs = Vec::new();
            utility(&model, p, i, &values[p][i], 1.0, &mut coeffs);
            model.rows.push(LpRow {
                name: format!("ir_v{p}_b{i}"),
                kind: RowKind::Ir,
                coeffs,
                sense: Sense::Ge,
                rhs: 0.0,
            });
        }
    }
    match concept {
        LpConcept::Ic => {
            for p in 0..profiles {
                let own = ts.profile_types(p);
                for i in 0..m {
                    for t in 0..ts.bidders[i].count() {
                        if t == own[i] {
                            continue;
                        }
                        let q = ts.with_type(p, i, t);
                        let mut coeffs = Vec::new();
                        utility(&model, p, i, &values[p][i], 1.0, &mut coeffs);
                        utility(&model, q, i, &values[p][i], -1.0, &mut coeffs);
                        model.rows.push(LpRow {
                            name: format!("ic_v{p}_b{i}_t{t}"),
                            kind: RowKind::Ic,
                            coeffs,
                            sense: Sense::Ge,
                            rhs: 0.0,
                        });
                    }
                }
            }
        }
        LpConcept::Bic => {
            for i in 0..m {
                let bt = &ts.bidders[i];
                // profiles grouped by bidder i's type
                let mut by_type: Vec<Vec<usize>> = vec![Vec::new(); bt.count()];
                for p in 0..profiles {
                    by_type[ts.profile_types(p)[i]].push(p);
                }
                for t in 0..bt.count() {
                    let vt = bt.values(t);
                    let pt = bt.prob(t);
                    for t2 in 0..bt.count() {
                        if t2 == t {
                            continue;
                        }
                        let mut coeffs = Vec::new();
                        for &p in &by_type[t] {
                            let w = probs[p] / pt;
                            let q = ts.with_type(p, i, t2);
                            let mut local = Vec::new();
                            utility(&model, p, i, &vt, 1.0, &mut local);
                            utility(&model, q, i, &vt, -1.0, &mut local);
                            coeffs.extend(local.into_iter().map(|(k, c)| (k, c * w)));
                        }
                        model.rows.push(LpRow {
                            name: format!("bic_b{i}_t{t}_t{t2}"),
                            kind: RowKind::Bic,
                            coeffs,
                            sense: Sense::Ge,
                            rhs: 0.0,
                        });
                    }
                }
            }
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

impl LpSolution {
    /// The optimal table as an executable mechanism.
    pub fn into_mechanism(&self, model: &LpModel) -> TableMechanism {
        let (m, n) = (model.types.n_bidders(), model.types.n_items());
        let profiles = model.types.profile_count();
        let alloc = (0..profiles)
            .map(|p| {
                (0..m)
                    .map(|i| (0..n).map(|j| self.values[model.x_index(p, i, j)].clamp(0.0, 1.0)).collect())
                    .collect()
            })
            .collect();
        let payments = (0..profiles)
            .map(|p| (0..m).map(|i| self.values[model.p_index(p, i)]).collect())
            .collect();
        TableMechanism {
            source: TableSource::Lp,
            concept: match model.concept {
                LpConcept::Ic => SolutionConcept::Ic,
                LpConcept::Bic => SolutionConcept::Bic,
            },
            types: model.types.clone(),
            grid_step: None,
            alloc,
            payments,
            objective: self.objective,
            regret_bound: 1e-6,
        }
    }
}

/// Feasibility tolerance for the post-solve row check.
pub const FEASIBILITY_TOL: f64 = 1e-7;

pub fn solve_lp(model: &LpModel) -> Result<LpSolution> {
    solve_lp_capped(model, simplex::DEFAULT_TABLEAU_CAP)
}

pub fn solve_lp_capped(model: &LpModel, tableau_cap: f64) -> Result<LpSolution> {
    let rows: Vec<SparseRow> = model
        .rows
        .iter()
        .map(|r| SparseRow {
            coeffs: r.coeffs.clone(),
            sense: r.sense,
            rhs: r.rhs,
        })
        .collect();
    let mut c = vec![0.0; model.n_vars()];
    for &(k, v) in &model.objective {
        c[k] += v;
    }
    let values = simplex::maximize(&c, &rows, &model.free, tableau_cap)?;
    for (row, sparse) in model.rows.iter().zip(&rows) {
        let lhs: f64 = sparse.coeffs.iter().map(|&(k, a)| a * values[k]).sum();
        let ok = match row.sense {
            Sense::Le => lhs <= row.rhs + FEASIBILITY_TOL,
            Sense::Ge => lhs >= row.rhs - FEASIBILITY_TOL,
            Sense::Eq => (lhs - row.rhs).abs() <= FEASIBILITY_TOL,
        };
        if !ok {
            return Err(Error::Solver(format!("row {} violated after solve: lhs {lhs}", row.name)));
        }
    }
    if let Some(k) = (0..values.len()).find(|&k| !model.free[k] && values[k] < -FEASIBILITY_TOL) {
        return Err(Error::Solver(format!("variable {} negative after solve", model.var_names[k])));
    }
    let objective = c.iter().zip(&values).map(|(a, b)| a * b).sum();
    Ok(LpSolution { objective, values })
}
