//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Problems here have at most a few hundred columns, so the tableau is kept
//! dense and no factorization updates are attempted. Constraint rows are
//! equilibrated to unit max-norm before solving; residuals are always checked
//! against the caller's unscaled data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Constraint residual allowed on an optimal point, and the phase-one
    /// optimum above which a problem is declared infeasible.
    pub feasibility_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            pivot_tol: 1e-11,
            optimality_tol: 1e-11,
            max_iterations: 200_000,
        }
    }
}

/// `min c'x` subject to `A x = b`, `G x ≤ h`, and per-variable lower bound
/// `0` (default) or `−∞` (see [`LinearProgram::set_free`]).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
    free: Vec<bool>,
}

impl LinearProgram {
    /// `num_vars` nonnegative variables, zero objective, no constraints.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            eq: Vec::new(),
            le: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Panics if `c` has the wrong length.
    pub fn set_objective(&mut self, c: Vec<f64>) -> &mut Self {
        assert_eq!(c.len(), self.num_vars(), "objective length");
        self.objective = c;
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.free[var] = true;
        self
    }

    /// Panics if `row` has the wrong length.
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.num_vars(), "constraint length");
        self.eq.push((row, rhs));
        self
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.num_vars(), "constraint length");
        self.le.push((row, rhs));
        self
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        let neg = row.into_iter().map(|a| -a).collect();
        self.add_le(neg, -rhs)
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Largest violation of any constraint or nonnegativity bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, rhs) in &self.eq {
            worst = worst.max((crate::linalg::dot(row, x) - rhs).abs());
        }
        for (row, rhs) in &self.le {
            worst = worst.max(crate::linalg::dot(row, x) - rhs);
        }
        for (j, &xj) in x.iter().enumerate() {
            if !self.free[j] {
                worst = worst.max(-xj);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Meaningful only when `status` is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Sum of artificial variables at the end of phase one (scaled rows).
    pub phase_one: f64,
}

impl LpOutcome {
    fn failed(status: LpStatus, n: usize, phase_one: f64) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            phase_one,
        }
    }
}

/// Tableau over the original (equilibrated) rows `a x = b`. After every pivot
/// it is rebuilt from `a`, `b` and the phase objective `c` through the basis
/// inverse, so rounding never accumulates across iterations.
struct Tableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,
}

enum Step {
    Optimal,
    Unbounded,
    Numerical,
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(mut m: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        if m[p][k].abs() < 1e-13 {
            return None;
        }
        m.swap(k, p);
        inv.swap(k, p);
        let d = 1.0 / m[k][k];
        m[k].iter_mut().for_each(|v| *v *= d);
        inv[k].iter_mut().for_each(|v| *v *= d);
        for i in 0..n {
            let f = m[i][k];
            if i == k || f == 0.0 {
                continue;
            }
            for j in 0..n {
                m[i][j] -= f * m[k][j];
                inv[i][j] -= f * inv[k][j];
            }
        }
    }
    Some(inv)
}

impl Tableau {
    fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, basis: Vec<usize>) -> Self {
        let mut t = Self {
            rows: a.clone(),
            rhs: b.clone(),
            cost: c.clone(),
            a,
            b,
            c,
            basis,
        };
        t.refresh();
        t
    }

    /// Recomputes rows, right-hand side and reduced costs from the original
    /// data. Returns false (leaving the tableau as is) on a singular basis.
    fn refresh(&mut self) -> bool {
        let m = self.basis.len();
        let bmat: Vec<Vec<f64>> = (0..m)
            .map(|i| self.basis.iter().map(|&j| self.a[i][j]).collect())
            .collect();
        let Some(inv) = invert(bmat) else {
            return false;
        };
        let n = self.c.len();
        for i in 0..m {
            let row = &mut self.rows[i];
            row.iter_mut().for_each(|v| *v = 0.0);
            let mut r = 0.0;
            for k in 0..m {
                let f = inv[i][k];
                if f == 0.0 {
                    continue;
                }
                for (v, a) in row.iter_mut().zip(&self.a[k]) {
                    *v += f * a;
                }
                r += f * self.b[k];
            }
            self.rhs[i] = r;
        }
        let y: Vec<f64> = (0..m)
            .map(|k| (0..m).map(|i| self.c[self.basis[i]] * inv[i][k]).sum())
            .collect();
        for j in 0..n {
            self.cost[j] = self.c[j] - (0..m).map(|k| y[k] * self.a[k][j]).sum::<f64>();
        }
        for (i, &j) in self.basis.iter().enumerate() {
            self.cost[j] = 0.0;
            self.rows[i][j] = 1.0;
        }
        true
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let old = self.basis[r];
        self.basis[r] = c;
        if !self.refresh() {
            self.basis[r] = old;
            self.eliminate(r, c);
        }
    }

    /// Plain elementary pivot, used only when the new basis looks singular.
    fn eliminate(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        self.rows[r].iter_mut().for_each(|a| *a *= inv);
        self.rhs[r] *= inv;
        let (prow, prhs) = (self.rows[r].clone(), self.rhs[r]);
        for i in 0..self.rows.len() {
            let f = self.rows[i][c];
            if i == r || f == 0.0 {
                continue;
            }
            for (a, p) in self.rows[i].iter_mut().zip(&prow) {
                *a -= f * p;
            }
            self.rhs[i] -= f * prhs;
        }
        let f = self.cost[c];
        for (a, p) in self.cost.iter_mut().zip(&prow) {
            *a -= f * p;
        }
        self.basis[r] = c;
    }

    fn set_objective(&mut self, c: Vec<f64>) {
        self.c = c;
        self.refresh();
    }

    fn drop_rows(&mut self, keep: &[bool]) {
        let filter = |v: &mut Vec<Vec<f64>>| {
            let mut idx = 0;
            v.retain(|_| {
                idx += 1;
                keep[idx - 1]
            });
        };
        filter(&mut self.rows);
        filter(&mut self.a);
        let mut idx = 0;
        self.basis.retain(|_| {
            idx += 1;
            keep[idx - 1]
        });
        for v in [&mut self.rhs, &mut self.b] {
            let mut idx = 0;
            v.retain(|_| {
                idx += 1;
                keep[idx - 1]
            });
        }
        self.refresh();
    }

    /// Minimizes the current cost row over columns marked eligible.
    ///
    /// Dantzig pricing with the largest pivot among tied ratios; after a run
    /// of degenerate pivots it falls back to Bland's rule, which cannot cycle.
    fn run(&mut self, eligible: &[bool], opts: &LpOptions) -> Step {
        const DEGENERATE_RUN: usize = 50;
        let mut degenerate = 0;
        let mut blocked = vec![false; eligible.len()];
        for _ in 0..opts.max_iterations {
            let bland = degenerate >= DEGENERATE_RUN;
            let candidates = (0..eligible.len())
                .filter(|&j| eligible[j] && !blocked[j] && self.cost[j] < -opts.optimality_tol);
            let entering = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]))
            };
            let Some(c) = entering else {
                return if blocked.iter().any(|&b| b) { Step::Numerical } else { Step::Optimal };
            };
            let mut best: Option<(usize, f64)> = None;
            let mut tiny = false;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a <= opts.pivot_tol {
                    tiny |= a > 0.0;
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        // exact ties only: preferring a larger pivot over a
                        // slightly smaller ratio would make a basic variable negative
                        let tie = ratio == br;
                        let better_tie = if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            a > self.rows[bi][c]
                        };
                        if (ratio < br && !tie) || (tie && better_tie) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((r, ratio)) => {
                    degenerate = if ratio == 0.0 { degenerate + 1 } else { 0 };
                    self.pivot(r, c);
                    blocked.iter_mut().for_each(|b| *b = false);
                }
                None if tiny => blocked[c] = true,
                None => return Step::Unbounded,
            }
        }
        Step::Numerical
    }
}

/// Solves `p`. Never panics on well-formed input; numerical trouble is a status.
pub fn lp_solve(p: &LinearProgram, opts: &LpOptions) -> LpOutcome {
    let nv = p.num_vars();

    // column layout: structural (free vars split in two), then slacks
    let mut pos_col = Vec::with_capacity(nv);
    let mut neg_col = vec![None; nv];
    let mut ncols = 0;
    for j in 0..nv {
        pos_col.push(ncols);
        ncols += 1;
        if p.free[j] {
            neg_col[j] = Some(ncols);
            ncols += 1;
        }
    }
    let n_struct = ncols;
    let n_slack = p.le.len();
    let n_real = n_struct + n_slack;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut slack_basic: Vec<Option<usize>> = Vec::new();

    let expand = |src: &[f64]| {
        let mut r = vec![0.0; n_real];
        for j in 0..nv {
            r[pos_col[j]] = src[j];
            if let Some(nc) = neg_col[j] {
                r[nc] = -src[j];
            }
        }
        r
    };

    let constraints = p
        .eq
        .iter()
        .map(|(r, b)| (r, *b, None))
        .chain(p.le.iter().enumerate().map(|(k, (r, b))| (r, *b, Some(n_struct + k))));
    for (src, b, slack) in constraints {
        let mut row = expand(src);
        if let Some(s) = slack {
            row[s] = 1.0;
        }
        let scale = src.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if scale == 0.0 {
            let bad = match slack {
                None => b.abs() > opts.feasibility_tol,
                Some(_) => b < -opts.feasibility_tol,
            };
            if bad {
                return LpOutcome::failed(LpStatus::Infeasible, nv, b.abs());
            }
            continue;
        }
        let mut b = b / scale;
        row.iter_mut().for_each(|a| *a /= scale);
        if b < 0.0 {
            row.iter_mut().for_each(|a| *a = -*a);
            b = -b;
        }
        let basic_slack = slack.filter(|&s| row[s] > 0.0);
        if let Some(s) = basic_slack {
            let c = row[s];
            row.iter_mut().for_each(|a| *a /= c);
            b /= c;
        }
        rows.push(row);
        rhs.push(b);
        slack_basic.push(basic_slack);
    }

    let m = rows.len();
    let n_art = slack_basic.iter().filter(|s| s.is_none()).count();
    let total = n_real + n_art;
    let mut basis = vec![0; m];
    let mut art = n_real;
    for i in 0..m {
        rows[i].resize(total, 0.0);
        match slack_basic[i] {
            Some(s) => basis[i] = s,
            None => {
                rows[i][art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
    }

    // phase one: minimize the sum of artificials
    let phase_one_cost: Vec<f64> = (0..total).map(|j| if j >= n_real { 1.0 } else { 0.0 }).collect();
    let mut t = Tableau::new(rows, rhs, phase_one_cost, basis);
    let eligible_all: Vec<bool> = (0..total).map(|j| j < n_real).collect();
    if let Step::Numerical = t.run(&eligible_all, opts) {
        return LpOutcome::failed(LpStatus::NumericalFailure, nv, f64::NAN);
    }
    let phase_one: f64 = (0..m)
        .filter(|&i| t.basis[i] >= n_real)
        .map(|i| t.rhs[i].max(0.0))
        .sum();
    if phase_one > opts.feasibility_tol {
        return LpOutcome::failed(LpStatus::Infeasible, nv, phase_one);
    }

    // drive zero-level artificials out of the basis; drop redundant rows
    let mut keep = vec![true; m];
    for i in 0..m {
        if t.basis[i] < n_real {
            continue;
        }
        let col = (0..n_real)
            .filter(|&j| !t.basis.contains(&j) && t.rows[i][j].abs() > opts.pivot_tol)
            .max_by(|&a, &b| t.rows[i][a].abs().total_cmp(&t.rows[i][b].abs()));
        match col {
            Some(c) => t.pivot(i, c),
            None => keep[i] = false,
        }
    }
    if keep.iter().any(|k| !k) {
        t.drop_rows(&keep);
    }

    // phase two
    let mut c = vec![0.0; total];
    for j in 0..nv {
        c[pos_col[j]] = p.objective[j];
        if let Some(nc) = neg_col[j] {
            c[nc] = -p.objective[j];
        }
    }
    t.set_objective(c);
    match t.run(&eligible_all, opts) {
        Step::Optimal => {}
        Step::Unbounded => return LpOutcome::failed(LpStatus::Unbounded, nv, phase_one),
        Step::Numerical => return LpOutcome::failed(LpStatus::NumericalFailure, nv, phase_one),
    }

    let mut col_val = vec![0.0; total];
    for (i, &b) in t.basis.iter().enumerate() {
        col_val[b] = t.rhs[i];
    }
    let mut x: Vec<f64> = (0..nv)
        .map(|j| col_val[pos_col[j]] - neg_col[j].map_or(0.0, |nc| col_val[nc]))
        .collect();

    // verify against the unscaled problem
    let mut worst = 0.0f64;
    for (row, b) in p.eq.iter() {
        let scale = row.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        worst = worst.max((crate::linalg::dot(row, &x) - b).abs() / scale);
    }
    for (row, b) in p.le.iter() {
        let scale = row.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        worst = worst.max((crate::linalg::dot(row, &x) - b) / scale);
    }
    let bound_gap = (0..nv)
        .filter(|&j| !p.free[j])
        .fold(0.0f64, |m, j| m.max(-x[j]));
    if worst > opts.feasibility_tol || bound_gap > 1e-9 {
        return LpOutcome::failed(LpStatus::NumericalFailure, nv, phase_one);
    }
    for j in 0..nv {
        if !p.free[j] && x[j] < 0.0 {
            x[j] = 0.0;
        }
    }
    let objective = crate::linalg::dot(&p.objective, &x);
    LpOutcome {
        status: LpStatus::Optimal,
        x,
        objective,
        phase_one,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible { phase_one: f64 },
}

/// Phase-one feasibility of the constraints of `p` (its objective is ignored).
pub fn lp_feasible(p: &LinearProgram, opts: &LpOptions) -> Result<Feasibility> {
    let mut q = p.clone();
    q.objective.iter_mut().for_each(|c| *c = 0.0);
    let out = lp_solve(&q, opts);
    match out.status {
        LpStatus::Optimal => Ok(Feasibility::Feasible(out.x)),
        LpStatus::Infeasible => Ok(Feasibility::Infeasible {
            phase_one: out.phase_one,
        }),
        LpStatus::Unbounded => Err(Error::LpNumerical(
            "zero-objective problem reported unbounded".into(),
        )),
        LpStatus::NumericalFailure => Err(Error::LpNumerical(format!(
            "feasibility problem with {} variables failed",
            p.num_vars()
        ))),
    }
}
