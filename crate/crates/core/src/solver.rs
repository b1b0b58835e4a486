//! Value iteration for finite POMDPs.
//!
//! Two solvers share the same Bellman recursion with `V_0 = 0`:
//!
//! - [`solve_exact`] keeps the full piecewise-linear value function as a pruned
//!   set of alpha vectors (incremental pruning over observations);
//! - [`solve_grid`] performs point-based backups on a barycentric belief grid,
//!   keeping one alpha vector per grid point. Every stored vector is the value
//!   of a concrete conditional plan, so the result is a lower bound.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::linalg::{dot, Matrix};
use crate::lp::{lp_solve, LinearProgram, LpOptions, LpStatus};
use crate::model::{Belief, PomdpModel, IMPOSSIBLE_LIKELIHOOD};
use crate::{Error, Result};

/// Q-values closer than this count as tied.
pub const TIE_TOL: f64 = 1e-10;
/// A vector survives pruning only if it beats the rest by more than this
/// somewhere on the simplex.
pub const PRUNE_TOL: f64 = 1e-10;
pub const DEFAULT_CAPACITY: usize = 100_000;
pub const DEFAULT_RESIDUAL: f64 = 1e-8;
pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    pub action: usize,
}

impl AlphaVector {
    pub fn zero(x: usize) -> Self {
        Self {
            values: vec![0.0; x],
            action: 0,
        }
    }

    pub fn eval(&self, belief: &[f64]) -> f64 {
        dot(&self.values, belief)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exactly `k` backups from `V_0 = 0`.
    Horizon(usize),
    /// Back up until the sup-norm change is at most `τ`.
    Residual(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Largest cross-sum the exact solver may form.
    pub capacity: usize,
    /// Upper bound on backups in residual mode.
    pub max_iterations: usize,
    pub lp: LpOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            capacity: DEFAULT_CAPACITY,
            max_iterations: 10_000,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactVf {
    pub alphas: Vec<AlphaVector>,
    pub horizon: usize,
    /// `residuals[k - 1]` is the sup-norm of `V_k − V_{k−1}` over the simplex.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl ExactVf {
    pub fn zero(x: usize) -> Self {
        Self {
            alphas: vec![AlphaVector::zero(x)],
            horizon: 0,
            residuals: Vec::new(),
            converged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridVf {
    pub resolution: usize,
    pub points: Vec<Belief>,
    /// `V(points[i])`.
    pub values: Vec<f64>,
    /// Distinct alpha vectors; `point_alpha[i]` indexes the one backed up at
    /// `points[i]`.
    pub alphas: Vec<AlphaVector>,
    pub point_alpha: Vec<usize>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Constant added to every reward while iterating in residual mode
    /// (already removed from `alphas` and `values`).
    pub reward_offset: f64,
}

impl GridVf {
    /// Last recorded sup-norm change over the grid.
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueFunction {
    Exact(ExactVf),
    Grid(GridVf),
}

impl ValueFunction {
    pub fn alphas(&self) -> &[AlphaVector] {
        match self {
            ValueFunction::Exact(v) => &v.alphas,
            ValueFunction::Grid(v) => &v.alphas,
        }
    }

    /// `max_a α_a' w`; for a belief this is `V(π)`. Positively homogeneous, so
    /// `value_of(σ T) = σ V(T)`.
    pub fn value_of(&self, w: &[f64]) -> f64 {
        self.alphas()
            .iter()
            .map(|a| a.eval(w))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn value_at(&self, belief: &Belief) -> f64 {
        self.value_of(belief.as_slice())
    }

    /// Residual used for infinite-horizon slack budgets.
    pub fn residual(&self) -> f64 {
        match self {
            ValueFunction::Exact(v) => v.residuals.last().copied().unwrap_or(f64::INFINITY),
            ValueFunction::Grid(v) => v.residual(),
        }
    }
}

impl From<ExactVf> for ValueFunction {
    fn from(v: ExactVf) -> Self {
        ValueFunction::Exact(v)
    }
}

impl From<GridVf> for ValueFunction {
    fn from(v: GridVf) -> Self {
        ValueFunction::Grid(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyQuery {
    pub belief: Belief,
    pub q: Vec<f64>,
    /// Every action within [`TIE_TOL`] of the best, ascending.
    pub argmax: Vec<usize>,
}

impl PolicyQuery {
    /// Lowest-index maximizer.
    pub fn action(&self) -> usize {
        self.argmax[0]
    }
}

fn argmax_set(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len()).filter(|&u| values[u] >= best - TIE_TOL).collect()
}

/// All points `c / d` with nonnegative integer `c` summing to `d`, in
/// lexicographic order of `c`.
pub fn barycentric_grid(x: usize, d: usize) -> Vec<Belief> {
    if x == 1 {
        return vec![Belief::unit(1, 0)];
    }
    compositions(x, d)
        .into_iter()
        .map(|c| Belief::from_unnormalized(c.iter().map(|&k| k as f64).collect(), d as f64))
        .collect()
}

/// All `c ∈ ℕ^x` with `Σ c = d`, in the order of [`barycentric_grid`].
fn compositions(x: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, left: usize, c: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == c.len() - 1 {
            c[i] = left;
            out.push(c.clone());
            return;
        }
        for k in 0..=left {
            c[i] = k;
            rec(i + 1, left - k, c, out);
        }
    }
    let mut out = Vec::new();
    if x > 0 && d > 0 {
        rec(0, d, &mut vec![0; x], &mut out);
    }
    out
}

pub fn grid_size(x: usize, d: usize) -> usize {
    // C(d + x − 1, x − 1)
    let mut acc: u128 = 1;
    for i in 0..x.saturating_sub(1) {
        acc = acc * (d + 1 + i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

/// `Q(π, u) = r_u'π + ρ Σ_{y: σ > 0} V(T(π, y, u)) σ(π, y, u)`.
pub fn q_values(m: &PomdpModel, v: &ValueFunction, belief: &Belief) -> PolicyQuery {
    let q: Vec<f64> = (0..m.num_actions)
        .map(|u| {
            let pred = crate::model::predict(m, belief, u);
            let b = &m.observation[u];
            let mut future = 0.0;
            let mut w = vec![0.0; m.num_states];
            for y in 0..m.num_obs {
                for j in 0..m.num_states {
                    w[j] = pred[j] * b[(j, y)];
                }
                if w.iter().sum::<f64>() > IMPOSSIBLE_LIKELIHOOD {
                    future += v.value_of(&w);
                }
            }
            m.expected_reward(belief, u) + m.discount * future
        })
        .collect();
    PolicyQuery {
        belief: belief.clone(),
        argmax: argmax_set(&q),
        q,
    }
}

pub fn optimal_policy_at(m: &PomdpModel, v: &ValueFunction, belief: &Belief) -> usize {
    q_values(m, v, belief).action()
}

/// `argmax_u r_u'π`, lowest index among ties.
pub fn myopic_policy_at(m: &PomdpModel, belief: &Belief) -> usize {
    let r: Vec<f64> = (0..m.num_actions).map(|u| m.expected_reward(belief, u)).collect();
    argmax_set(&r)[0]
}

pub fn value_at(v: &ValueFunction, belief: &Belief) -> f64 {
    v.value_at(belief)
}

// ---------------------------------------------------------------------------
// pruning

fn bits_key(v: &[f64]) -> Vec<u64> {
    // +0.0 and −0.0 compare equal as vectors, so normalize them
    v.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect()
}

fn pointwise_dominated(w: &[f64], by: &[f64]) -> bool {
    w.iter().zip(by).all(|(a, b)| *a <= b + PRUNE_TOL)
}

/// `max δ` subject to `π'(w − v) ≥ δ` for every `v` in `against`, `π` in the
/// simplex. Returns `(δ, π)`.
fn advantage_lp(w: &[f64], against: &[&[f64]], opts: &LpOptions) -> Result<(f64, Vec<f64>)> {
    let x = w.len();
    let mut lp = LinearProgram::new(x + 1);
    lp.set_free(x);
    let mut c = vec![0.0; x + 1];
    c[x] = -1.0;
    lp.set_objective(c);
    let mut simplex = vec![1.0; x + 1];
    simplex[x] = 0.0;
    lp.add_eq(simplex, 1.0);
    // differences are often tiny next to the unit δ column; rescale them
    let scale = against
        .iter()
        .flat_map(|v| v.iter().zip(w).map(|(a, b)| (a - b).abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Ok((0.0, vec![1.0 / x as f64; x]));
    }
    for v in against {
        let mut row: Vec<f64> = v.iter().zip(w).map(|(a, b)| (a - b) / scale).collect();
        row.push(1.0);
        lp.add_le(row, 0.0);
    }
    let out = lp_solve(&lp, opts);
    if out.status != LpStatus::Optimal {
        return Err(Error::LpNumerical(format!(
            "pruning LP over {} vectors ended {:?}",
            against.len(),
            out.status
        )));
    }
    let mut pi: Vec<f64> = out.x[..x].iter().map(|p| p.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    Ok((out.x[x] * scale, pi))
}

/// Finds a belief where `w` beats every vector of `winners` by more than
/// [`PRUNE_TOL`], or `None` if there is none. Cutting-plane: the LP only sees
/// the winners that were binding so far.
fn find_witness(w: &[f64], winners: &[&[f64]], opts: &LpOptions) -> Result<Option<Vec<f64>>> {
    let x = w.len();
    let uniform = vec![1.0 / x as f64; x];
    let best_at = |pi: &[f64]| {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, v) in winners.iter().enumerate() {
            let s = dot(v, pi);
            if s > val {
                val = s;
                best = i;
            }
        }
        (best, val)
    };
    let mut active: Vec<usize> = vec![best_at(&uniform).0];
    loop {
        let cons: Vec<&[f64]> = active.iter().map(|&i| winners[i]).collect();
        let (delta, pi) = advantage_lp(w, &cons, opts)?;
        if delta <= PRUNE_TOL {
            return Ok(None);
        }
        let (best, val) = best_at(&pi);
        if dot(w, &pi) - val > PRUNE_TOL {
            return Ok(Some(pi));
        }
        if active.contains(&best) {
            // an advantage below the LP's own accuracy that direct evaluation
            // does not confirm is rounding, not a witness
            if delta <= opts.feasibility_tol {
                return Ok(None);
            }
            return Err(Error::LpNumerical("pruning LP witness is inconsistent".into()));
        }
        active.push(best);
    }
}

/// `max_π min_{v ∈ others} (w − v)'π` over the simplex, by cutting planes.
/// The value returned is attained at the final LP point, so it never exceeds
/// the true maximum.
fn max_advantage(w: &[f64], others: &[&[f64]], opts: &LpOptions) -> Result<f64> {
    let x = w.len();
    let worst_at = |pi: &[f64]| {
        others
            .iter()
            .enumerate()
            .map(|(i, v)| (i, dot(w, pi) - dot(v, pi)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    };
    let mut active: Vec<usize> = Vec::new();
    let mut unit = vec![0.0; x];
    for i in 0..x {
        unit[i] = 1.0;
        let k = worst_at(&unit).0;
        if !active.contains(&k) {
            active.push(k);
        }
        unit[i] = 0.0;
    }
    loop {
        let cons: Vec<&[f64]> = active.iter().map(|&i| others[i]).collect();
        let (bound, pi) = advantage_lp(w, &cons, opts)?;
        let (k, attained) = worst_at(&pi);
        let scale = w.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        if bound - attained <= 1e-12 * scale || active.contains(&k) {
            return Ok(attained);
        }
        active.push(k);
    }
}

/// `sup_π |max_{α ∈ a} α'π − max_{β ∈ b} β'π|` over the whole simplex.
pub fn sup_distance(a: &[AlphaVector], b: &[AlphaVector], opts: &LpOptions) -> Result<f64> {
    let av: Vec<&[f64]> = a.iter().map(|v| v.values.as_slice()).collect();
    let bv: Vec<&[f64]> = b.iter().map(|v| v.values.as_slice()).collect();
    let mut sup = 0.0f64;
    for (ws, others) in [(&av, &bv), (&bv, &av)] {
        for w in ws.iter() {
            sup = sup.max(max_advantage(w, others, opts)?);
        }
    }
    Ok(sup)
}

/// Lexicographic comparison used to break exact ties between candidates.
fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x > y;
        }
    }
    false
}

/// Removes duplicates, pointwise-dominated and LP-dominated vectors. The
/// maximum over the result matches the maximum over the input everywhere on
/// the simplex, to within [`PRUNE_TOL`].
pub fn prune(vectors: Vec<AlphaVector>) -> Result<Vec<AlphaVector>> {
    prune_with(vectors, &LpOptions::default())
}

pub fn prune_with(vectors: Vec<AlphaVector>, opts: &LpOptions) -> Result<Vec<AlphaVector>> {
    if vectors.len() <= 1 {
        return Ok(vectors);
    }
    let mut seen = BTreeMap::new();
    let mut pending: Vec<AlphaVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if seen.insert(bits_key(&v.values), ()).is_none() {
            pending.push(v);
        }
    }

    let x = pending[0].values.len();
    let uniform = vec![1.0 / x as f64; x];
    let take_best = |pending: &mut Vec<AlphaVector>, pi: &[f64]| {
        let mut best = 0;
        for i in 1..pending.len() {
            let (a, b) = (pending[i].eval(pi), pending[best].eval(pi));
            if a > b || (a == b && lex_greater(&pending[i].values, &pending[best].values)) {
                best = i;
            }
        }
        pending.swap_remove(best)
    };

    let mut winners: Vec<AlphaVector> = vec![take_best(&mut pending, &uniform)];
    while let Some(w) = pending.pop() {
        if winners.iter().any(|v| pointwise_dominated(&w.values, &v.values)) {
            continue;
        }
        let refs: Vec<&[f64]> = winners.iter().map(|v| v.values.as_slice()).collect();
        if let Some(pi) = find_witness(&w.values, &refs, opts)? {
            // the best candidate at the witness is a genuine winner; `w` stays
            // pending unless it is that candidate
            pending.push(w);
            let best = take_best(&mut pending, &pi);
            winners.push(best);
        }
    }
    Ok(winners)
}

// ---------------------------------------------------------------------------
// exact value iteration

/// `g(i) = ρ Σ_j P_ij(u) B_jy(u) α(j)` for every `α` of `v`, pruned.
fn back_project(m: &PomdpModel, v: &ExactVf, u: usize, y: usize, opts: &LpOptions) -> Result<Vec<AlphaVector>> {
    let p = m.transition_for(u);
    let b = &m.observation[u];
    let x = m.num_states;
    let projected = v
        .alphas
        .iter()
        .map(|a| {
            let weighted: Vec<f64> = (0..x).map(|j| b[(j, y)] * a.values[j]).collect();
            AlphaVector {
                values: p.mul_vec(&weighted).into_iter().map(|g| m.discount * g).collect(),
                action: u,
            }
        })
        .collect();
    prune_with(projected, opts)
}

fn cross_sum(a: &[AlphaVector], b: &[AlphaVector], cap: usize) -> Result<Vec<AlphaVector>> {
    let size = a.len().saturating_mul(b.len());
    if size > cap {
        return Err(Error::Capacity { size, cap });
    }
    let mut out = Vec::with_capacity(size);
    for s in a {
        for t in b {
            out.push(AlphaVector {
                values: s.values.iter().zip(&t.values).map(|(p, q)| p + q).collect(),
                action: s.action,
            });
        }
    }
    Ok(out)
}

/// One exact Bellman backup `V_k → V_{k+1}`.
pub fn vi_exact_step(m: &PomdpModel, v: &ExactVf, opts: &SolveOptions) -> Result<ExactVf> {
    let mut all = Vec::new();
    for u in 0..m.num_actions {
        let mut acc = back_project(m, v, u, 0, &opts.lp)?;
        for y in 1..m.num_obs {
            let g = back_project(m, v, u, y, &opts.lp)?;
            acc = prune_with(cross_sum(&acc, &g, opts.capacity)?, &opts.lp)?;
        }
        for a in &mut acc {
            a.values.iter_mut().zip(&m.reward[u]).for_each(|(g, r)| *g += r);
            a.action = u;
        }
        all.extend(acc);
        if all.len() > opts.capacity {
            return Err(Error::Capacity {
                size: all.len(),
                cap: opts.capacity,
            });
        }
    }
    Ok(ExactVf {
        alphas: prune_with(all, &opts.lp)?,
        horizon: v.horizon + 1,
        residuals: v.residuals.clone(),
        converged: false,
    })
}

fn flatten(alphas: &[AlphaVector]) -> Vec<f64> {
    alphas.iter().flat_map(|a| a.values.iter().copied()).collect()
}

pub fn solve_exact(m: &PomdpModel, mode: Mode, opts: &SolveOptions) -> Result<ExactVf> {
    if let Mode::Residual(tau) = mode {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("residual {tau} must be positive")));
        }
    }
    let mut v = ExactVf::zero(m.num_states);
    loop {
        match mode {
            Mode::Horizon(k) if v.horizon >= k => {
                v.converged = true;
                return Ok(v);
            }
            Mode::Residual(_) if v.horizon >= opts.max_iterations => return Ok(v),
            _ => {}
        }
        let next = vi_exact_step(m, &v, opts)?;
        let r = sup_distance(&next.alphas, &v.alphas, &opts.lp)?;
        v = next;
        v.residuals.push(r);
        if let Mode::Residual(tau) = mode {
            if r <= tau {
                v.converged = true;
                return Ok(v);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// grid (point-based) value iteration

/// For each query `w_q` (rows of `queries`), the maximum of `α' w_q` over the
/// rows of `flat` and its lowest argmax.
fn argmax_many(flat: &[f64], x: usize, queries: &[f64], best: &mut [f64], arg: &mut [usize]) {
    /// Queries are processed in coordinate-major blocks so the inner loop is a
    /// branch-free sweep the compiler can vectorize.
    const BLOCK: usize = 128;

    fn kernel<const X: usize>(flat: &[f64], queries: &[f64], best: &mut [f64], arg: &mut [usize]) {
        let mut w = [[0.0f64; BLOCK]; X];
        let mut top = [0.0f64; BLOCK];
        let mut idx = [0u64; BLOCK];
        for (b, chunk) in queries.chunks(BLOCK * X).enumerate() {
            let len = chunk.len() / X;
            for q in 0..len {
                for i in 0..X {
                    w[i][q] = chunk[q * X + i];
                }
            }
            top.fill(f64::NEG_INFINITY);
            idx.fill(0);
            for (a, alpha) in flat.chunks_exact(X).enumerate() {
                let a = a as u64;
                for q in 0..BLOCK {
                    let mut s = 0.0;
                    for i in 0..X {
                        s += alpha[i] * w[i][q];
                    }
                    let better = s > top[q];
                    top[q] = if better { s } else { top[q] };
                    idx[q] = if better { a } else { idx[q] };
                }
            }
            let at = b * BLOCK;
            best[at..at + len].copy_from_slice(&top[..len]);
            for q in 0..len {
                arg[at + q] = idx[q] as usize;
            }
        }
    }
    match x {
        2 => kernel::<2>(flat, queries, best, arg),
        3 => kernel::<3>(flat, queries, best, arg),
        4 => kernel::<4>(flat, queries, best, arg),
        5 => kernel::<5>(flat, queries, best, arg),
        _ => {
            best.fill(f64::NEG_INFINITY);
            arg.fill(0);
            for (a, alpha) in flat.chunks_exact(x).enumerate() {
                for (q, w) in queries.chunks_exact(x).enumerate() {
                    let s = dot(alpha, w);
                    if s > best[q] {
                        best[q] = s;
                        arg[q] = a;
                    }
                }
            }
        }
    }
}

/// Scratch space for one tree query.
#[derive(Default)]
struct TreeQuery {
    stack: Vec<(usize, f64)>,
    belief: Vec<f64>,
    cum: Vec<usize>,
    frac: Vec<f64>,
    perm: Vec<usize>,
    /// Corner compositions, row-major.
    corners: Vec<usize>,
    lambda: Vec<f64>,
    slots: Vec<usize>,
}

/// Freudenthal cell of a resolution-`d` grid containing `q.belief`: writes
/// the grid compositions at its corners and the barycentric weights.
fn freudenthal_cell(d: usize, q: &mut TreeQuery) {
    let x = q.belief.len();
    let df = d as f64;
    // cumulative coordinates y_i = d Σ_{j ≥ i} b_j, so y_0 = d
    q.cum.clear();
    q.cum.resize(x, 0);
    q.frac.clear();
    q.frac.resize(x, 0.0);
    q.cum[0] = d;
    let mut acc = 0.0;
    for i in (1..x).rev() {
        acc += q.belief[i];
        let y = (df * acc).min(df);
        q.cum[i] = y as usize;
        q.frac[i] = y - q.cum[i] as f64;
    }
    q.perm.clear();
    q.perm.extend(1..x);
    let frac = &q.frac;
    q.perm.sort_by(|&a, &c| frac[c].total_cmp(&frac[a]));

    q.corners.clear();
    q.lambda.clear();
    let push = |cum: &[usize], corners: &mut Vec<usize>| {
        for i in 0..x {
            let next = if i + 1 < x { cum[i + 1] } else { 0 };
            corners.push(cum[i].saturating_sub(next));
        }
    };
    push(&q.cum, &mut q.corners);
    q.lambda.push(1.0 - q.perm.first().map_or(0.0, |&p| q.frac[p]));
    for k in 0..q.perm.len() {
        let p = q.perm[k];
        q.cum[p] += 1;
        push(&q.cum, &mut q.corners);
        let next = q.perm.get(k + 1).map_or(0.0, |&r| q.frac[r]);
        q.lambda.push(q.frac[p] - next);
    }
}

/// Position of a composition in [`compositions`] order, or `None` when it
/// does not sum to `d`. `counts[i][l]` is the number of compositions of `l`
/// into `x − i` parts.
fn composition_rank(c: &[usize], d: usize, counts: &[Vec<usize>]) -> Option<usize> {
    let x = c.len();
    let mut left = d;
    let mut rank = 0;
    for i in 0..x - 1 {
        if c[i] > left {
            return None;
        }
        for k in 0..c[i] {
            rank += counts[i + 1][left - k];
        }
        left -= c[i];
    }
    (c[x - 1] == left).then_some(rank)
}

/// Exact maximum-inner-product search over alpha vectors for nonnegative
/// queries. Every node stores `M_k = max α' d_k` over its vectors for the
/// points `d_k` of a coarse barycentric grid; a query direction lies in one
/// grid cell with corners `d_k` and weights `λ_k ≥ 0`, so `Σ λ_k M_k` bounds
/// every `α' π` below the node. Dot products and tie-breaking match the
/// linear scan bit for bit.
struct AlphaTree {
    x: usize,
    /// Vectors in tree order, row-major.
    rows: Vec<f64>,
    /// `order[k]` is the original index of `rows[k]`.
    order: Vec<usize>,
    nodes: Vec<TreeNode>,
    /// `dirs` bounds per node, row-major.
    bounds: Vec<f64>,
    num_dirs: usize,
    resolution: usize,
    counts: Vec<Vec<usize>>,
    max_abs: f64,
}

struct TreeNode {
    start: usize,
    end: usize,
    /// Children; `usize::MAX` marks a leaf.
    left: usize,
    right: usize,
}

impl AlphaTree {
    const LEAF: usize = 16;
    const MAX_DIRECTIONS: usize = 64;

    fn new(flat: &[f64], x: usize) -> Self {
        let n = flat.len() / x;
        let resolution = (1..=32)
            .take_while(|&d| grid_size(x, d) <= Self::MAX_DIRECTIONS)
            .last()
            .unwrap_or(1);
        let comps = compositions(x, resolution);
        let dirs: Vec<f64> = comps
            .iter()
            .flat_map(|c| c.iter().map(move |&k| k as f64 / resolution as f64))
            .collect();
        let mut tree = Self {
            x,
            rows: Vec::with_capacity(flat.len()),
            order: Vec::new(),
            nodes: Vec::new(),
            bounds: Vec::new(),
            num_dirs: comps.len(),
            resolution,
            counts: (0..=x)
                .map(|i| (0..=resolution).map(|l| if i == x { 0 } else { grid_size(x - i, l) }).collect())
                .collect(),
            max_abs: flat.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        let mut order: Vec<usize> = (0..n).collect();
        tree.build(flat, &dirs, &mut order, 0, n);
        for &k in &order {
            tree.rows.extend_from_slice(&flat[k * x..(k + 1) * x]);
        }
        tree.order = order;
        tree
    }

    fn build(&mut self, flat: &[f64], dirs: &[f64], order: &mut [usize], start: usize, end: usize) -> usize {
        let x = self.x;
        let nd = dirs.len() / x;
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            start,
            end,
            left: usize::MAX,
            right: usize::MAX,
        });
        self.bounds.extend(core::iter::repeat_n(f64::NEG_INFINITY, nd));
        if end - start > Self::LEAF {
            let mut hi = vec![f64::NEG_INFINITY; x];
            let mut lo = vec![f64::INFINITY; x];
            for &k in &order[start..end] {
                for i in 0..x {
                    hi[i] = hi[i].max(flat[k * x + i]);
                    lo[i] = lo[i].min(flat[k * x + i]);
                }
            }
            let axis = (0..x)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap_or(0);
            let mid = start + (end - start) / 2;
            order[start..end]
                .select_nth_unstable_by(mid - start, |&a, &b| flat[a * x + axis].total_cmp(&flat[b * x + axis]));
            let left = self.build(flat, dirs, order, start, mid);
            let right = self.build(flat, dirs, order, mid, end);
            self.nodes[id].left = left;
            self.nodes[id].right = right;
            for k in 0..nd {
                self.bounds[id * nd + k] = self.bounds[left * nd + k].max(self.bounds[right * nd + k]);
            }
        } else {
            for &a in &order[start..end] {
                let alpha = &flat[a * x..(a + 1) * x];
                for (k, d) in dirs.chunks_exact(x).enumerate() {
                    let v = dot(alpha, d);
                    let slot = &mut self.bounds[id * nd + k];
                    *slot = slot.max(v);
                }
            }
        }
        id
    }

    fn argmax(&self, w: &[f64], q: &mut TreeQuery) -> (f64, usize) {
        let x = self.x;
        let nd = self.num_dirs;
        let mass: f64 = w.iter().sum();
        if !(mass > 0.0) {
            return self.scan(w);
        }
        q.belief.clear();
        q.belief.extend(w.iter().map(|v| v / mass));
        freudenthal_cell(self.resolution, q);
        // corners with zero weight may fall outside the simplex; they are
        // given slot 0 and contribute nothing
        q.slots.clear();
        for (c, &l) in q.corners.chunks_exact(x).zip(&q.lambda) {
            match composition_rank(c, self.resolution, &self.counts) {
                Some(k) => q.slots.push(k),
                None if l == 0.0 => q.slots.push(0),
                None => return self.scan(w),
            }
        }
        // distance between the belief and the point the weights reconstruct
        let r = self.resolution as f64;
        let mut err = 0.0;
        for i in 0..x {
            let rebuilt: f64 = q.corners.chunks_exact(x).zip(&q.lambda).map(|(c, l)| l * c[i] as f64 / r).sum();
            err += (rebuilt - q.belief[i]).abs();
        }
        let pad = self.max_abs * (err + q.lambda.iter().map(|l| l.min(0.0).abs()).sum::<f64>());
        let (slots, lambda) = (&q.slots, &q.lambda);
        let bound = |node: usize| -> f64 {
            let s: f64 = slots.iter().zip(lambda).map(|(&k, l)| l * self.bounds[node * nd + k]).sum();
            let v = mass * (s + pad);
            // rounding in either evaluation must not prune a true maximizer
            v + 1e-12 * (v.abs() + mass * self.max_abs + 1.0)
        };

        let (mut best, mut arg) = (f64::NEG_INFINITY, usize::MAX);
        let mut stack = core::mem::take(&mut q.stack);
        stack.clear();
        stack.push((0, bound(0)));
        while let Some((id, ub)) = stack.pop() {
            if ub < best {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == usize::MAX {
                for k in node.start..node.end {
                    let s = dot(&self.rows[k * x..(k + 1) * x], w);
                    let a = self.order[k];
                    if s > best || (s == best && a < arg) {
                        best = s;
                        arg = a;
                    }
                }
            } else {
                let (l, r) = (bound(node.left), bound(node.right));
                // the more promising child is popped first
                if l > r {
                    stack.push((node.right, r));
                    stack.push((node.left, l));
                } else {
                    stack.push((node.left, l));
                    stack.push((node.right, r));
                }
            }
        }
        q.stack = stack;
        (best, arg)
    }

    fn scan(&self, w: &[f64]) -> (f64, usize) {
        let (mut best, mut arg) = (f64::NEG_INFINITY, usize::MAX);
        for (k, row) in self.rows.chunks_exact(self.x).enumerate() {
            let s = dot(row, w);
            let a = self.order[k];
            if s > best || (s == best && a < arg) {
                best = s;
                arg = a;
            }
        }
        (best, arg)
    }
}

/// [`argmax_many`] for nonnegative queries, switching to the tree once the
/// vector set is large enough to pay for it.
fn argmax_nonneg(flat: &[f64], x: usize, queries: &[f64], best: &mut [f64], arg: &mut [usize]) {
    if flat.len() / x <= 4 * AlphaTree::LEAF {
        return argmax_many(flat, x, queries, best, arg);
    }
    debug_assert!(queries.iter().all(|&q| q >= 0.0));
    let tree = AlphaTree::new(flat, x);
    let mut scratch = TreeQuery::default();
    for (q, w) in queries.chunks_exact(x).enumerate() {
        (best[q], arg[q]) = tree.argmax(w, &mut scratch);
    }
}

/// Per-action `P(u) diag(B_y(u))` so a back-projection is one mat-vec.
fn projection_matrices(m: &PomdpModel) -> Vec<Vec<Matrix>> {
    let x = m.num_states;
    (0..m.num_actions)
        .map(|u| {
            let p = m.transition_for(u);
            let b = &m.observation[u];
            (0..m.num_obs)
                .map(|y| {
                    let mut g = p.clone();
                    for i in 0..x {
                        for j in 0..x {
                            g[(i, j)] *= b[(j, y)];
                        }
                    }
                    g
                })
                .collect()
        })
        .collect()
}

pub fn solve_grid(m: &PomdpModel, d: usize, mode: Mode, opts: &SolveOptions) -> Result<GridVf> {
    if d == 0 {
        return Err(Error::InvalidParameter("grid resolution must be at least 1".into()));
    }
    if let Mode::Residual(tau) = mode {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("residual {tau} must be positive")));
        }
    }
    let (x, ny, nu) = (m.num_states, m.num_obs, m.num_actions);
    let rho = m.discount;
    let points = barycentric_grid(x, d);
    let n = points.len();
    let proj = projection_matrices(m);

    // In residual mode rewards are lifted to be nonnegative so that carrying a
    // point's previous vector forward keeps every grid value nondecreasing;
    // together with the lower-bound property this guarantees convergence.
    let carry = matches!(mode, Mode::Residual(_));
    let offset = if carry {
        let min_r = m.reward.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        f64::max(0.0, -min_r)
    } else {
        0.0
    };
    let rewards: Vec<Vec<f64>> = m
        .reward
        .iter()
        .map(|r| r.iter().map(|v| v + offset).collect())
        .collect();

    // predicted-and-weighted queries w_{u,y}(j) = (P(u)'π)_j B_jy(u)
    let nq = nu * ny;
    let mut queries = vec![0.0; n * nq * x];
    for (k, p) in points.iter().enumerate() {
        for u in 0..nu {
            let pred = crate::model::predict(m, p, u);
            let b = &m.observation[u];
            for y in 0..ny {
                let base = (k * nq + u * ny + y) * x;
                for j in 0..x {
                    queries[base + j] = pred[j] * b[(j, y)];
                }
            }
        }
    }

    let mut alphas = vec![AlphaVector::zero(x)];
    let mut flat = flatten(&alphas);
    let mut values = vec![0.0; n];
    let mut holder = vec![0usize; n];
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut best = vec![0.0; n * nq];
    let mut arg = vec![0usize; n * nq];
    let flat_points: Vec<f64> = points.iter().flat_map(|p| p.as_slice().iter().copied()).collect();

    loop {
        match mode {
            Mode::Horizon(k) if iterations >= k => {
                converged = true;
                break;
            }
            Mode::Residual(_) if iterations >= opts.max_iterations => break,
            _ => {}
        }
        let mut next: Vec<AlphaVector> = Vec::with_capacity(n);
        argmax_nonneg(&flat, x, &queries, &mut best, &mut arg);
        for (k, p) in points.iter().enumerate() {
            let arg = &arg[k * nq..(k + 1) * nq];
            let mut chosen: Option<(f64, AlphaVector)> = None;
            for u in 0..nu {
                let mut beta = rewards[u].clone();
                for y in 0..ny {
                    let g = proj[u][y].mul_vec(&alphas[arg[u * ny + y]].values);
                    beta.iter_mut().zip(&g).for_each(|(b, g)| *b += rho * g);
                }
                let val = dot(&beta, p.as_slice());
                if chosen.as_ref().is_none_or(|(v, _)| val > *v) {
                    chosen = Some((val, AlphaVector { values: beta, action: u }));
                }
            }
            let (val, alpha) = chosen.expect("at least one action");
            if carry && iterations > 0 && values[k] > val {
                next.push(alphas[holder[k]].clone());
            } else {
                next.push(alpha);
            }
        }

        // exact dedup, first occurrence wins
        let mut index = BTreeMap::new();
        let mut distinct = Vec::new();
        for (k, a) in next.into_iter().enumerate() {
            let id = *index.entry(bits_key(&a.values)).or_insert_with(|| {
                distinct.push(a);
                distinct.len() - 1
            });
            holder[k] = id;
        }
        alphas = distinct;
        flat = flatten(&alphas);

        let mut r: f64 = 0.0;
        argmax_nonneg(&flat, x, &flat_points, &mut best[..n], &mut arg[..n]);
        for k in 0..n {
            r = r.max((best[k] - values[k]).abs());
            values[k] = best[k];
            holder[k] = arg[k];
        }
        iterations += 1;
        residuals.push(r);
        if let Mode::Residual(tau) = mode {
            if r <= tau {
                converged = true;
                break;
            }
        }
    }

    if offset != 0.0 {
        let lift = offset / (1.0 - rho);
        for a in &mut alphas {
            a.values.iter_mut().for_each(|v| *v -= lift);
        }
        values.iter_mut().for_each(|v| *v -= lift);
    }
    Ok(GridVf {
        resolution: d,
        points,
        values,
        alphas,
        point_alpha: holder,
        iterations,
        residuals,
        converged,
        reward_offset: offset,
    })
}

/// Which solver [`solve`] dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Exact,
    Grid { resolution: usize },
}

pub fn solve(m: &PomdpModel, method: Method, mode: Mode, opts: &SolveOptions) -> Result<ValueFunction> {
    Ok(match method {
        Method::Exact => solve_exact(m, mode, opts)?.into(),
        Method::Grid { resolution } => solve_grid(m, resolution, mode, opts)?.into(),
    })
}

/// Additive slack for comparisons made with an approximate value function:
/// zero for a finite horizon, `2τ/(1 − ρ)` for a residual-`τ` solve.
pub fn slack_for(mode: Mode, discount: f64) -> f64 {
    match mode {
        Mode::Horizon(_) => 0.0,
        Mode::Residual(tau) => 2.0 * tau / (1.0 - discount),
    }
}

// ---------------------------------------------------------------------------
// diagnostics

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaMonotoneReport {
    /// `γ(0) ≤ γ(j)` for every interior `j` and every vector.
    pub first_vs_middle_ok: bool,
    /// `γ(j) ≤ γ(X−1)` for every interior `j` and every vector.
    pub middle_vs_last_ok: bool,
    /// Every vector nondecreasing; expected when `X ≤ 3`.
    pub fully_increasing: bool,
    pub fully_increasing_expected: bool,
    /// `(vector index, state)` pairs that break one of the bounds above.
    pub violations: Vec<(usize, usize)>,
}

pub fn gamma_monotone_report(v: &ExactVf) -> GammaMonotoneReport {
    const TOL: f64 = 1e-10;
    let x = v.alphas.first().map_or(0, |a| a.values.len());
    let mut rep = GammaMonotoneReport {
        first_vs_middle_ok: true,
        middle_vs_last_ok: true,
        fully_increasing: true,
        fully_increasing_expected: x <= 3,
        violations: Vec::new(),
    };
    for (k, a) in v.alphas.iter().enumerate() {
        let g = &a.values;
        for j in 1..x.saturating_sub(1) {
            if g[0] > g[j] + TOL {
                rep.first_vs_middle_ok = false;
                rep.violations.push((k, j));
            }
            if g[j] > g[x - 1] + TOL {
                rep.middle_vs_last_ok = false;
                rep.violations.push((k, j));
            }
        }
        if x == 2 && g[0] > g[1] + TOL {
            rep.first_vs_middle_ok = false;
            rep.middle_vs_last_ok = false;
            rep.violations.push((k, 1));
        }
        for j in 1..x {
            if g[j - 1] > g[j] + TOL {
                rep.fully_increasing = false;
                if x > 3 {
                    rep.violations.push((k, j));
                }
            }
        }
    }
    rep.violations.sort_unstable();
    rep.violations.dedup();
    rep
}
