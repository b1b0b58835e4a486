//! Stochastic orders and matrix dominance predicates.
//!
//! Every predicate returns an [`OrderVerdict`]; a failing verdict always
//! carries a [`Witness`] naming the violated inequality and the values that
//! violate it, so reports can be re-checked by hand.
//!
//! Naming follows the action-pair convention used throughout the crate:
//! `b_low` plays the role of `B(u)` and `b_high` of `B(u + 1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::linalg::Matrix;
use crate::lp::{self, LinearProgram, LpOptions};
use crate::{Error, Result};

/// Slack on every scalar inequality tested here.
pub const ORDER_TOL: f64 = 1e-12;
/// A quadratic form counts as nonnegative down to this value.
pub const COPOSITIVE_TOL: f64 = 1e-9;
/// Inputs to the copositivity test must be symmetric to this.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Residual accepted on a recovered stochastic factor.
pub const FACTOR_TOL: f64 = 1e-8;
/// Barycentric step of the copositivity grid search.
pub const COPOSITIVE_GRID: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    First,
    Last,
}

/// The inequality a failing check tripped over. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `p1(i) p2(j) > p2(i) p1(j)` with `i < j`.
    Mlr { i: usize, j: usize, lhs: f64, rhs: f64 },
    /// `Σ_{k ≥ j} p1(k) < Σ_{k ≥ j} p2(k)`.
    TailSum { j: usize, dominant: f64, dominated: f64 },
    /// Negative 2×2 minor on rows `(i, i2)`, columns `(j, j2)`.
    Minor { rows: (usize, usize), cols: (usize, usize), value: f64 },
    /// `π' A π < 0`; `index` names the matrix in a set when relevant.
    Quadratic { index: Option<usize>, point: Vec<f64>, value: f64 },
    /// Row `row` of `b_high` fails to first-order dominate row `row` of `b_low`
    /// at CDF index `col`.
    Cdf { row: usize, col: usize, low: f64, high: f64 },
    /// The sequence `Σ_{y≤j} b_low[i][y] − Σ_{y≤l} b_high[i][y]` crossed from
    /// positive at `positive_row` to negative at `negative_row`.
    SignChange {
        cols: (usize, usize),
        positive_row: usize,
        negative_row: usize,
        positive: f64,
        negative: f64,
    },
    /// Boundary product inequality failed at `row`.
    Boundary { side: Boundary, row: usize, lhs: f64, rhs: f64 },
    /// No stochastic factor exists; phase-one optimum of the factor LP.
    NoStochasticFactor { phase_one: f64 },
    /// `values[index + 1] < values[index]` in row `row` (e.g. a reward vector).
    Decrease { row: usize, index: usize, before: f64, after: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl OrderVerdict {
    pub fn pass() -> Self {
        Self { holds: true, witness: None }
    }

    pub fn fail(w: Witness) -> Self {
        Self {
            holds: false,
            witness: Some(w),
        }
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("lengths {a} and {b} differ")));
    }
    Ok(())
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::Dimension(format!(
            "{}x{} versus {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// `p1 ≥_r p2`: `p1(i) p2(j) ≤ p2(i) p1(j)` for all `i < j`.
pub fn mlr_dominates(p1: &[f64], p2: &[f64]) -> Result<OrderVerdict> {
    check_lengths(p1.len(), p2.len())?;
    for i in 0..p1.len() {
        for j in i + 1..p1.len() {
            let lhs = p1[i] * p2[j];
            let rhs = p2[i] * p1[j];
            if lhs > rhs + ORDER_TOL {
                return Ok(OrderVerdict::fail(Witness::Mlr { i, j, lhs, rhs }));
            }
        }
    }
    Ok(OrderVerdict::pass())
}

/// `p1 ≥_s p2`: every upper tail sum of `p1` is at least that of `p2`.
pub fn fosd_dominates(p1: &[f64], p2: &[f64]) -> Result<OrderVerdict> {
    check_lengths(p1.len(), p2.len())?;
    let (mut t1, mut t2) = (0.0, 0.0);
    for j in (0..p1.len()).rev() {
        t1 += p1[j];
        t2 += p2[j];
        if t1 < t2 - ORDER_TOL {
            return Ok(OrderVerdict::fail(Witness::TailSum {
                j,
                dominant: t1,
                dominated: t2,
            }));
        }
    }
    Ok(OrderVerdict::pass())
}

/// All 2×2 minors nonnegative (to `-1e-12`). Negative entries are an error.
pub fn is_tp2(m: &Matrix) -> Result<OrderVerdict> {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if m[(i, j)] < -ORDER_TOL {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: m[(i, j)],
                });
            }
        }
    }
    for i in 0..m.rows() {
        for i2 in i + 1..m.rows() {
            for j in 0..m.cols() {
                for j2 in j + 1..m.cols() {
                    let value = m[(i, j)] * m[(i2, j2)] - m[(i, j2)] * m[(i2, j)];
                    if value < -ORDER_TOL {
                        return Ok(OrderVerdict::fail(Witness::Minor {
                            rows: (i, i2),
                            cols: (j, j2),
                            value,
                        }));
                    }
                }
            }
        }
    }
    Ok(OrderVerdict::pass())
}

/// The symmetrized matrices `Γ^j`, `j = 0..X−1`, of the copositive ordering
/// `P1 ⪯ P2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaMatrixSet {
    pub matrices: Vec<Matrix>,
}

pub fn gamma_matrices(p1: &Matrix, p2: &Matrix) -> Result<GammaMatrixSet> {
    check_same_shape(p1, p2)?;
    if !p1.is_square() {
        return Err(Error::Dimension("transition matrices must be square".into()));
    }
    let n = p1.rows();
    let matrices = (0..n.saturating_sub(1))
        .map(|j| {
            let raw = |m: usize, k: usize| p1[(m, j)] * p2[(k, j + 1)] - p1[(m, j + 1)] * p2[(k, j)];
            let mut g = Matrix::zeros(n, n);
            for m in 0..n {
                for k in 0..n {
                    g[(m, k)] = 0.5 * (raw(m, k) + raw(k, m));
                }
            }
            g
        })
        .collect();
    Ok(GammaMatrixSet { matrices })
}

fn quad(a: &Matrix, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        if x[i] == 0.0 {
            continue;
        }
        let mut r = 0.0;
        for j in 0..n {
            r += a[(i, j)] * x[j];
        }
        s += x[i] * r;
    }
    s
}

/// Exact minimum of `π'Aπ` over the 2-simplex `π = (t, 1 − t)`.
fn min_quadratic_2(a: &Matrix) -> (Vec<f64>, f64) {
    let (a11, a12, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
    let mut best = if a11 <= a22 {
        (vec![1.0, 0.0], a11)
    } else {
        (vec![0.0, 1.0], a22)
    };
    // f(t) = a11 t² + 2 a12 t (1−t) + a22 (1−t)²; f'' = 2 (a11 − 2a12 + a22)
    let curv = a11 - 2.0 * a12 + a22;
    if curv > 0.0 {
        let t = (a22 - a12) / curv;
        if t > 0.0 && t < 1.0 {
            let v = (a11 * a22 - a12 * a12) / curv;
            if v < best.1 {
                best = (vec![t, 1.0 - t], v);
            }
        }
    }
    best
}

/// Visits every barycentric point `k / d` of the `n`-simplex.
fn for_each_grid_point(n: usize, d: usize, mut f: impl FnMut(&[usize])) {
    let mut c = vec![0usize; n];
    c[n - 1] = d;
    loop {
        f(&c);
        // next composition in colex order over the first n−1 coordinates
        let mut i = 0;
        loop {
            if i == n - 1 {
                return;
            }
            if c[n - 1] > 0 {
                c[i] += 1;
                c[n - 1] -= 1;
                break;
            }
            c[n - 1] += c[i];
            c[i] = 0;
            i += 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Minimizes `π'Aπ` on the face spanned by `support` via the KKT system
/// `A_SS x = μ 1, 1'x = 1`; returns `None` if singular or `x ∉ face`.
fn face_stationary_point(a: &Matrix, support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let mut kkt = Matrix::zeros(k + 1, k + 1);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            kkt[(r, c)] = a[(i, j)];
        }
        kkt[(r, k)] = -1.0;
        kkt[(k, r)] = 1.0;
    }
    let mut rhs = vec![0.0; k + 1];
    rhs[k] = 1.0;
    let sol = kkt.solve(&rhs).ok()?;
    if sol[..k].iter().any(|&x| x < -1e-12) {
        return None;
    }
    let mut x = vec![0.0; a.rows()];
    for (r, &i) in support.iter().enumerate() {
        x[i] = sol[r].max(0.0);
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    Some(x)
}

/// Minimum of `π'Aπ` over the unit simplex, with its minimizer.
///
/// 1×1 and 2×2 are solved in closed form. Larger matrices combine a
/// barycentric grid search with stationary points of every face, which is
/// exact for the dimensions used here (X ≤ ~10).
pub fn simplex_quadratic_min(a: &Matrix) -> (Vec<f64>, f64) {
    let n = a.rows();
    match n {
        0 => return (Vec::new(), 0.0),
        1 => return (vec![1.0], a[(0, 0)]),
        2 => return min_quadratic_2(a),
        _ => {}
    }
    // grid: step 1/200, coarsened when the point count would explode
    let mut d = COPOSITIVE_GRID;
    while d > 4 && binomial(d + n - 1, n - 1) > 250_000.0 {
        d -= 1;
    }
    let mut best_c = vec![0usize; n];
    let mut best_v = f64::INFINITY;
    let mut x = vec![0.0; n];
    for_each_grid_point(n, d, |c| {
        for (xi, &ci) in x.iter_mut().zip(c) {
            *xi = ci as f64 / d as f64;
        }
        let v = quad(a, &x);
        if v < best_v {
            best_v = v;
            best_c.copy_from_slice(c);
        }
    });
    let mut best_x: Vec<f64> = best_c.iter().map(|&c| c as f64 / d as f64).collect();

    if n <= 12 {
        let mut support = Vec::with_capacity(n);
        for mask in 1u32..(1 << n) {
            support.clear();
            support.extend((0..n).filter(|i| mask & (1 << i) != 0));
            if let Some(x) = face_stationary_point(a, &support) {
                let v = quad(a, &x);
                if v < best_v {
                    best_v = v;
                    best_x = x;
                }
            }
        }
    }
    (best_x, best_v)
}

/// `A` copositive: `min_{π ∈ simplex} π'Aπ ≥ −1e-9`.
pub fn is_copositive(a: &Matrix) -> Result<OrderVerdict> {
    if !a.is_square() {
        return Err(Error::Dimension("copositivity needs a square matrix".into()));
    }
    for i in 0..a.rows() {
        for j in i + 1..a.cols() {
            let gap = (a[(i, j)] - a[(j, i)]).abs();
            if gap > SYMMETRY_TOL {
                return Err(Error::Asymmetric { row: i, col: j, gap });
            }
        }
    }
    let (point, value) = simplex_quadratic_min(a);
    if value >= -COPOSITIVE_TOL {
        Ok(OrderVerdict::pass())
    } else {
        Ok(OrderVerdict::fail(Witness::Quadratic {
            index: None,
            point,
            value,
        }))
    }
}

/// Assumption A4: `P1 ⪯ P2`, i.e. every `Γ^j` is copositive.
pub fn copositive_dominates(p1: &Matrix, p2: &Matrix) -> Result<OrderVerdict> {
    let set = gamma_matrices(p1, p2)?;
    for (j, g) in set.matrices.iter().enumerate() {
        let v = is_copositive(g)?;
        if let Some(Witness::Quadratic { point, value, .. }) = v.witness {
            return Ok(OrderVerdict::fail(Witness::Quadratic {
                index: Some(j),
                point,
                value,
            }));
        }
    }
    Ok(OrderVerdict::pass())
}

fn cdf_rows(b: &Matrix) -> Matrix {
    let mut c = b.clone();
    for i in 0..c.rows() {
        let row = c.row_mut(i);
        for y in 1..row.len() {
            row[y] += row[y - 1];
        }
    }
    c
}

/// Assumption A5: each row of `b_high` first-order dominates the same row of
/// `b_low`, i.e. `Σ_{y≤j} b_low[i][y] ≥ Σ_{y≤j} b_high[i][y]`.
pub fn check_a5(b_low: &Matrix, b_high: &Matrix) -> Result<OrderVerdict> {
    check_same_shape(b_low, b_high)?;
    let (cl, ch) = (cdf_rows(b_low), cdf_rows(b_high));
    for i in 0..cl.rows() {
        for j in 0..cl.cols() {
            if cl[(i, j)] < ch[(i, j)] - ORDER_TOL {
                return Ok(OrderVerdict::fail(Witness::Cdf {
                    row: i,
                    col: j,
                    low: cl[(i, j)],
                    high: ch[(i, j)],
                }));
            }
        }
    }
    Ok(OrderVerdict::pass())
}

/// Assumption A6, Lehmann precision `b_high >_L b_low`: for every `(j, l)`,
/// `Σ_{y≤j} b_low[i][y] − Σ_{y≤l} b_high[i][y]` never goes from strictly
/// positive to strictly negative as `i` increases. Values within `1e-12` of
/// zero are sign-neutral.
pub fn lehmann_precision(b_low: &Matrix, b_high: &Matrix) -> Result<OrderVerdict> {
    if b_low.rows() != b_high.rows() {
        return Err(Error::Dimension(format!(
            "{} versus {} states",
            b_low.rows(),
            b_high.rows()
        )));
    }
    let (cl, ch) = (cdf_rows(b_low), cdf_rows(b_high));
    for j in 0..cl.cols() {
        for l in 0..ch.cols() {
            let mut positive: Option<(usize, f64)> = None;
            for i in 0..cl.rows() {
                let d = cl[(i, j)] - ch[(i, l)];
                if d > ORDER_TOL {
                    positive.get_or_insert((i, d));
                } else if d < -ORDER_TOL {
                    if let Some((pi, pv)) = positive {
                        return Ok(OrderVerdict::fail(Witness::SignChange {
                            cols: (j, l),
                            positive_row: pi,
                            negative_row: i,
                            positive: pv,
                            negative: d,
                        }));
                    }
                }
            }
        }
    }
    Ok(OrderVerdict::pass())
}

/// Assumption A7 for finite observations:
/// `b_low[i][0]·b_high[X][0] ≤ b_high[i][0]·b_low[X][0]` and
/// `b_low[i][Y]·b_high[X][Y] ≥ b_high[i][Y]·b_low[X][Y]` for all `i`
/// (`X`, `Y` the last indices).
pub fn check_a7(b_low: &Matrix, b_high: &Matrix) -> Result<OrderVerdict> {
    check_same_shape(b_low, b_high)?;
    let x = b_low.rows() - 1;
    let y = b_low.cols() - 1;
    for i in 0..=x {
        let lhs = b_low[(i, 0)] * b_high[(x, 0)];
        let rhs = b_high[(i, 0)] * b_low[(x, 0)];
        if lhs > rhs + ORDER_TOL {
            return Ok(OrderVerdict::fail(Witness::Boundary {
                side: Boundary::First,
                row: i,
                lhs,
                rhs,
            }));
        }
        let lhs = b_low[(i, y)] * b_high[(x, y)];
        let rhs = b_high[(i, y)] * b_low[(x, y)];
        if lhs < rhs - ORDER_TOL {
            return Ok(OrderVerdict::fail(Witness::Boundary {
                side: Boundary::Last,
                row: i,
                lhs,
                rhs,
            }));
        }
    }
    Ok(OrderVerdict::pass())
}

/// Outcome of a stochastic-factor search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factorization {
    pub verdict: OrderVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<Matrix>,
    /// `max |product − target|` for the returned factor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

enum Side {
    /// `known · F = target`
    Right,
    /// `F · known = target`
    Left,
}

fn stochastic_factor(known: &Matrix, target: &Matrix, side: Side) -> Result<Factorization> {
    // F is r×c; row sums of F are one
    let (r, c) = match side {
        Side::Right => {
            if known.rows() != target.rows() {
                return Err(Error::Dimension(format!(
                    "{} versus {} rows",
                    known.rows(),
                    target.rows()
                )));
            }
            (known.cols(), target.cols())
        }
        Side::Left => {
            if known.cols() != target.cols() {
                return Err(Error::Dimension(format!(
                    "{} versus {} columns",
                    known.cols(),
                    target.cols()
                )));
            }
            (target.rows(), known.rows())
        }
    };
    let var = |a: usize, b: usize| a * c + b;
    let mut prog = LinearProgram::new(r * c);
    for i in 0..target.rows() {
        for j in 0..target.cols() {
            let mut row = vec![0.0; r * c];
            match side {
                // (known F)_{ij} = Σ_k known_{ik} F_{kj}
                Side::Right => (0..r).for_each(|k| row[var(k, j)] = known[(i, k)]),
                // (F known)_{ij} = Σ_k F_{ik} known_{kj}
                Side::Left => (0..c).for_each(|k| row[var(i, k)] = known[(k, j)]),
            }
            prog.add_eq(row, target[(i, j)]);
        }
    }
    for a in 0..r {
        let mut row = vec![0.0; r * c];
        (0..c).for_each(|b| row[var(a, b)] = 1.0);
        prog.add_eq(row, 1.0);
    }
    match lp::lp_feasible(&prog, &LpOptions::default())? {
        lp::Feasibility::Feasible(x) => {
            let f = Matrix::from_vec(r, c, x)?;
            let product = match side {
                Side::Right => known.matmul(&f)?,
                Side::Left => f.matmul(known)?,
            };
            let residual = product.max_abs_diff(target);
            let (row_gap, min_entry) = f.stochastic_defect();
            if residual > FACTOR_TOL || row_gap > FACTOR_TOL || min_entry < -FACTOR_TOL {
                return Err(Error::LpNumerical(format!(
                    "factor residual {residual:e}, row-sum gap {row_gap:e}"
                )));
            }
            Ok(Factorization {
                verdict: OrderVerdict::pass(),
                factor: Some(f),
                residual: Some(residual),
            })
        }
        lp::Feasibility::Infeasible { phase_one } => Ok(Factorization {
            verdict: OrderVerdict::fail(Witness::NoStochasticFactor { phase_one }),
            factor: None,
            residual: None,
        }),
    }
}

/// `strong >_B weak`: a stochastic `L` with `strong · L = weak` exists.
pub fn blackwell_dominates(strong: &Matrix, weak: &Matrix) -> Result<Factorization> {
    stochastic_factor(strong, weak, Side::Right)
}

/// A stochastic `M` with `noisy = M · clean` exists.
pub fn reverse_factorization(noisy: &Matrix, clean: &Matrix) -> Result<Factorization> {
    stochastic_factor(clean, noisy, Side::Left)
}
