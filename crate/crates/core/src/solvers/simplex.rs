//! Dense two-phase tableau simplex for the small LPs built in this crate.
//!
//! Dantzig pricing with a switch to Bland's rule after a run of degenerate
//! pivots, which the heavily degenerate incentive LPs need to avoid cycling.

use crate::error::{Error, Result};

/// Upper bound on `rows * columns` of the tableau.
pub const DEFAULT_TABLEAU_CAP: f64 = 4e7;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

struct Tableau {
    rows: usize,
    width: usize, // columns + rhs
    a: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    blocked: Vec<bool>,
    /// Initial constraint block, kept for refactoring.
    orig: Vec<f64>,
    /// Unreduced objective of the current phase.
    cost: Vec<f64>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.a[r * w + c];
        for k in 0..w {
            self.a[r * w + k] *= inv;
        }
        self.a[r * w + c] = 1.0;
        let pivot_row: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&k| pivot_row[k] != 0.0).collect();
        for rr in 0..self.rows {
            if rr == r {
                continue;
            }
            let f = self.a[rr * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[rr * w..(rr + 1) * w];
            for &k in &nz {
                row[k] -= f * pivot_row[k];
            }
            row[c] = 0.0;
        }
        let f = self.obj[c];
        if f != 0.0 {
            for &k in &nz {
                self.obj[k] -= f * pivot_row[k];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Maximize with the current objective row (entering columns have
    /// negative reduced cost).
    fn optimize(&mut self) -> Result<()> {
        let cols = self.width - 1;
        let max_iter = 50 * (self.rows + cols) + 1000;
        let mut degenerate = 0;
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..cols).find(|&k| !self.blocked[k] && self.obj[k] < -COST_TOL)
            } else {
                let mut best = None;
                let mut best_val = -COST_TOL;
                for k in 0..cols {
                    if !self.blocked[k] && self.obj[k] < best_val {
                        best_val = self.obj[k];
                        best = Some(k);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lv)) => {
                            let tie = ratio <= lv + 1e-12;
                            let wins = if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.at(lr, c)
                            };
                            ratio < lv - 1e-12 || (tie && wins)
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Solver("LP is unbounded".into()));
            };
            if ratio.abs() <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
        Err(Error::Solver(format!("simplex did not converge in {max_iter} iterations")))
    }

    /// Rebuild the tableau for the current basis from the original rows,
    /// clearing accumulated rounding. Returns false (tableau untouched) if
    /// the basis is numerically singular.
    fn refactor(&mut self) -> bool {
        let w = self.width;
        let mut fresh = Tableau {
            rows: self.rows,
            width: w,
            a: self.orig.clone(),
            obj: vec![0.0; w],
            basis: vec![usize::MAX; self.rows],
            blocked: Vec::new(),
            orig: Vec::new(),
            cost: Vec::new(),
        };
        let mut assigned = vec![false; self.rows];
        for &col in &self.basis {
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let v = fresh.at(r, col).abs();
                if !assigned[r] && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((r, v));
                }
            }
            match best {
                Some((r, v)) if v > PIVOT_TOL => {
                    fresh.pivot(r, col);
                    assigned[r] = true;
                }
                _ => return false,
            }
        }
        self.a = fresh.a;
        self.basis = fresh.basis;
        self.reset_objective();
        true
    }

    /// Objective row = `cost` reduced against the current basis.
    fn reset_objective(&mut self) {
        let w = self.width;
        self.obj = self.cost.clone();
        for r in 0..self.rows {
            let f = self.obj[self.basis[r]];
            if f != 0.0 {
                for k in 0..w {
                    self.obj[k] -= f * self.a[r * w + k];
                }
            }
        }
    }

    /// Optimize, then refactor and resume until the fresh tableau is optimal.
    fn solve(&mut self) -> Result<()> {
        for _ in 0..4 {
            self.optimize()?;
            if !self.refactor() {
                return Ok(());
            }
            let cols = self.width - 1;
            let optimal = (0..cols).all(|k| self.blocked[k] || self.obj[k] >= -COST_TOL);
            let feasible = (0..self.rows).all(|r| self.rhs(r) >= -1e-9);
            if optimal && feasible {
                return Ok(());
            }
            for r in 0..self.rows {
                let w = self.width;
                if self.a[r * w + w - 1] < 0.0 {
                    self.a[r * w + w - 1] = 0.0;
                }
            }
        }
        Ok(())
    }
}

/// Maximize `c . x` subject to `rows`, with `x_k >= 0` unless `free[k]`.
/// Returns the optimal `x`.
pub fn maximize(c: &[f64], rows: &[SparseRow], free: &[bool], tableau_cap: f64) -> Result<Vec<f64>> {
    let n = c.len();
    // column map: each original variable gets a + column, free ones also a - column
    let mut plus = Vec::with_capacity(n);
    let mut minus = vec![None; n];
    let mut ncols = 0;
    for k in 0..n {
        plus.push(ncols);
        ncols += 1;
        if free[k] {
            minus[k] = Some(ncols);
            ncols += 1;
        }
    }
    // normalize rows to rhs >= 0, turning `>= 0` rows into `<= 0`
    let mut norm: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::with_capacity(rows.len());
    for row in rows {
        let mut coeffs = row.coeffs.clone();
        let (mut sense, mut rhs) = (row.sense, row.rhs);
        let flip = rhs < 0.0 || (rhs == 0.0 && sense == Sense::Ge);
        if flip {
            for e in &mut coeffs {
                e.1 = -e.1;
            }
            rhs = -rhs;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        norm.push((coeffs, sense, rhs));
    }
    let slack_cols: usize = norm.iter().filter(|r| r.1 != Sense::Eq).count();
    let art_rows: Vec<usize> = (0..norm.len()).filter(|&r| norm[r].1 != Sense::Le).collect();
    let total_cols = ncols + slack_cols + art_rows.len();
    let m = norm.len();
    let cells = m as f64 * (total_cols + 1) as f64;
    if cells > tableau_cap {
        return Err(Error::too_large("simplex tableau entries", cells, tableau_cap));
    }
    let width = total_cols + 1;
    let mut t = Tableau {
        rows: m,
        width,
        a: vec![0.0; m * width],
        obj: vec![0.0; width],
        basis: vec![0; m],
        blocked: vec![false; total_cols],
        orig: Vec::new(),
        cost: vec![0.0; width],
    };
    let mut slack = ncols;
    let mut art = ncols + slack_cols;
    let mut art_cols = Vec::new();
    for (r, (coeffs, sense, rhs)) in norm.iter().enumerate() {
        for &(k, v) in coeffs {
            t.a[r * width + plus[k]] += v;
            if let Some(mk) = minus[k] {
                t.a[r * width + mk] -= v;
            }
        }
        t.a[r * width + width - 1] = *rhs;
        match sense {
            Sense::Le => {
                t.a[r * width + slack] = 1.0;
                t.basis[r] = slack;
                slack += 1;
            }
            Sense::Ge => {
                t.a[r * width + slack] = -1.0;
                slack += 1;
                t.a[r * width + art] = 1.0;
                t.basis[r] = art;
                art_cols.push(art);
                art += 1;
            }
            Sense::Eq => {
                t.a[r * width + art] = 1.0;
                t.basis[r] = art;
                art_cols.push(art);
                art += 1;
            }
        }
    }

    t.orig = t.a.clone();

    if !art_cols.is_empty() {
        // phase 1: maximize -sum(artificials)
        for &ac in &art_cols {
            t.cost[ac] = 1.0;
        }
        t.reset_objective();
        t.solve()?;
        if t.obj[width - 1] < -1e-7 {
            return Err(Error::Solver("LP is infeasible".into()));
        }
        let is_art = |k: usize| k >= ncols + slack_cols;
        for r in 0..m {
            if is_art(t.basis[r]) {
                let k = (0..ncols + slack_cols).max_by(|&x, &y| t.at(r, x).abs().total_cmp(&t.at(r, y).abs()));
                if let Some(k) = k.filter(|&k| t.at(r, k).abs() > PIVOT_TOL) {
                    t.pivot(r, k);
                }
            }
        }
        for &ac in &art_cols {
            t.blocked[ac] = true;
        }
    }

    // phase 2
    t.cost = vec![0.0; width];
    for k in 0..n {
        t.cost[plus[k]] = -c[k];
        if let Some(mk) = minus[k] {
            t.cost[mk] = c[k];
        }
    }
    t.reset_objective();
    t.solve()?;

    let mut y = vec![0.0; total_cols];
    for r in 0..m {
        y[t.basis[r]] = t.rhs(r);
    }
    Ok((0..n)
        .map(|k| y[plus[k]] - minus[k].map_or(0.0, |mk| y[mk]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn row(coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> SparseRow {
        SparseRow {
            coeffs: coeffs.to_vec(),
            sense,
            rhs,
        }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let rows = [
            row(&[(0, 1.0)], Sense::Le, 4.0),
            row(&[(1, 2.0)], Sense::Le, 12.0),
            row(&[(0, 3.0), (1, 2.0)], Sense::Le, 18.0),
        ];
        let x = maximize(&[3.0, 5.0], &rows, &[false, false], DEFAULT_TABLEAU_CAP).unwrap();
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 6.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_and_ge_rows_use_phase_one() {
        // max -x - y, x + y = 3, x >= 1 -> objective -3
        let rows = [row(&[(0, 1.0), (1, 1.0)], Sense::Eq, 3.0), row(&[(0, 1.0)], Sense::Ge, 1.0)];
        let x = maximize(&[-1.0, -1.0], &rows, &[false, false], DEFAULT_TABLEAU_CAP).unwrap();
        assert_abs_diff_eq!(x[0] + x[1], 3.0, epsilon = 1e-9);
        assert!(x[0] >= 1.0 - 1e-9);
    }

    #[test]
    fn free_variables_go_negative() {
        // max -z, z >= -2 (z free) -> z = -2
        let rows = [row(&[(0, 1.0)], Sense::Ge, -2.0)];
        let x = maximize(&[-1.0], &rows, &[true], DEFAULT_TABLEAU_CAP).unwrap();
        assert_abs_diff_eq!(x[0], -2.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let rows = [row(&[(0, 1.0)], Sense::Le, 1.0), row(&[(0, 1.0)], Sense::Ge, 2.0)];
        assert!(matches!(maximize(&[1.0], &rows, &[false], 1e6), Err(Error::Solver(_))));
        let rows = [row(&[(0, 1.0)], Sense::Ge, 0.0)];
        assert!(matches!(maximize(&[1.0], &rows, &[false], 1e6), Err(Error::Solver(_))));
    }

    #[test]
    fn tableau_cap_is_enforced() {
        let rows = [row(&[(0, 1.0)], Sense::Le, 1.0)];
        assert!(matches!(maximize(&[1.0], &rows, &[false], 2.0), Err(Error::TooLarge { .. })));
    }
}
