//! Assumption pipeline and empirical checks of the myopic-bound theorems.
//!
//! [`assumption_report`] runs every order predicate on a model. The `verify_*`
//! functions test the conclusions on a solved value function; they report
//! margins and counterexamples but never assert, because the hypotheses are
//! sufficient rather than necessary.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::model::{self, line_coordinates, Belief, GeneralShift, LineCoordinates, PomdpModel};
use crate::orders::{self, OrderVerdict, Witness};
use crate::solver::{self, ExactVf, GammaMonotoneReport, Method, Mode, PolicyQuery, SolveOptions, ValueFunction};
use crate::{Error, Result};

/// Tolerance of the range-containment inequalities.
pub const RANGE_TOL: f64 = 1e-10;
/// Tolerance of the monotonicity and chord checks along lines.
pub const SHAPE_TOL: f64 = 1e-9;
/// Uniform λ points in a ψ sweep are `k / PSI_STEPS`.
pub const PSI_STEPS: usize = 200;

/// Outcome of one assumption check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails { witness: Witness },
    /// The check could not be decided (e.g. the LP failed numerically).
    Undetermined { reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }
}

impl From<Result<OrderVerdict>> for Verdict {
    fn from(r: Result<OrderVerdict>) -> Self {
        match r {
            Ok(v) if v.holds => Verdict::Holds,
            Ok(v) => Verdict::Fails {
                witness: v.witness.expect("failing verdicts carry a witness"),
            },
            Err(e) => Verdict::Undetermined { reason: format!("{e}") },
        }
    }
}

/// Checks tied to one consecutive action pair `(u, u + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairChecks {
    pub low: usize,
    pub high: usize,
    /// `P(u) ⪯ P(u + 1)`.
    pub a4: Verdict,
    pub a5: Verdict,
    /// `B(u + 1) >_L B(u)`.
    pub a6: Verdict,
    pub a7: Verdict,
    /// `B(u + 1) >_B B(u)`.
    pub blackwell: Verdict,
    /// `B(u) = M B(u + 1)` for a stochastic `M`.
    pub reverse_factorization: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct HypothesisFlags {
    pub shared: bool,
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub a4: bool,
    pub a5: bool,
    pub a6: bool,
    pub a7: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Applicability {
    /// Shared `P` with A2, A3, A6, A7.
    pub statement1: bool,
    /// A1 through A7.
    pub statement2: bool,
}

pub fn applicability(f: &HypothesisFlags) -> Applicability {
    Applicability {
        statement1: f.shared && f.a2 && f.a3 && f.a6 && f.a7,
        statement2: f.a1 && f.a2 && f.a3 && f.a4 && f.a5 && f.a6 && f.a7,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ShiftOutcome {
    /// A shift with strictly increasing rewards exists; `f` is one.
    Feasible { f: Vec<f64> },
    Infeasible { phase_one: f64 },
    Undetermined { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub model: String,
    pub shared_transition: bool,
    /// `A1`: `r(·, u)` nondecreasing, per action.
    pub a1: Vec<Verdict>,
    /// `A2`: every transition matrix TP2 (one entry when shared).
    pub a2: Vec<Verdict>,
    /// `A3`: `B(u)` TP2, per action.
    pub a3: Vec<Verdict>,
    pub pairs: Vec<PairChecks>,
    pub a1_prime: ShiftOutcome,
    /// Conjunctions over all actions and pairs.
    pub summary: HypothesisFlags,
    pub applicability: Applicability,
    pub notes: Vec<String>,
}

fn increasing(values: &[f64], row: usize) -> Verdict {
    for i in 0..values.len().saturating_sub(1) {
        if values[i + 1] < values[i] {
            return Verdict::Fails {
                witness: Witness::Decrease {
                    row,
                    index: i,
                    before: values[i],
                    after: values[i + 1],
                },
            };
        }
    }
    Verdict::Holds
}

fn factor_verdict(r: Result<orders::Factorization>) -> Verdict {
    r.map(|f| f.verdict).into()
}

/// Runs every checker; pairwise checks use consecutive actions `(u, u + 1)`.
pub fn assumption_report(m: &PomdpModel) -> AssumptionReport {
    let a1: Vec<Verdict> = m.reward.iter().enumerate().map(|(u, r)| increasing(r, u)).collect();
    let a2: Vec<Verdict> = match &m.transition {
        model::Transition::Shared(p) => vec![orders::is_tp2(p).into()],
        model::Transition::PerAction(ps) => ps.iter().map(|p| orders::is_tp2(p).into()).collect(),
    };
    let a3: Vec<Verdict> = m.observation.iter().map(|b| orders::is_tp2(b).into()).collect();

    let pairs: Vec<PairChecks> = (0..m.num_actions.saturating_sub(1))
        .map(|u| {
            let (bl, bh) = (&m.observation[u], &m.observation[u + 1]);
            PairChecks {
                low: u,
                high: u + 1,
                a4: orders::copositive_dominates(m.transition_for(u), m.transition_for(u + 1)).into(),
                a5: orders::check_a5(bl, bh).into(),
                a6: orders::lehmann_precision(bl, bh).into(),
                a7: orders::check_a7(bl, bh).into(),
                blackwell: factor_verdict(orders::blackwell_dominates(bh, bl)),
                reverse_factorization: factor_verdict(orders::reverse_factorization(bl, bh)),
            }
        })
        .collect();

    let a1_prime = if m.is_shared() {
        match model::reward_shift_controlled(m) {
            Ok(s) => ShiftOutcome::Feasible { f: s.f },
            Err(e) => ShiftOutcome::Undetermined { reason: format!("{e}") },
        }
    } else {
        match model::reward_shift_general(m) {
            Ok(GeneralShift::Feasible(s)) => ShiftOutcome::Feasible { f: s.f },
            Ok(GeneralShift::Infeasible { phase_one }) => ShiftOutcome::Infeasible { phase_one },
            Err(e) => ShiftOutcome::Undetermined { reason: format!("{e}") },
        }
    };

    let all = |v: &[Verdict]| v.iter().all(Verdict::holds);
    let all_pairs = |f: fn(&PairChecks) -> &Verdict| pairs.iter().all(|p| f(p).holds());
    let summary = HypothesisFlags {
        shared: m.is_shared(),
        a1: all(&a1),
        a2: all(&a2),
        a3: all(&a3),
        a4: all_pairs(|p| &p.a4),
        a5: all_pairs(|p| &p.a5),
        a6: all_pairs(|p| &p.a6),
        a7: all_pairs(|p| &p.a7),
    };

    let mut notes = vec![String::from(
        "A5 is tested as: each row of B(u+1) first-order dominates the same row of B(u)",
    )];
    if m.num_actions == 1 {
        notes.push("single action: pairwise checks are vacuous".into());
    }
    AssumptionReport {
        model: m.name.clone(),
        shared_transition: m.is_shared(),
        a1,
        a2,
        a3,
        pairs,
        a1_prime,
        applicability: applicability(&summary),
        summary,
        notes,
    }
}

// ---------------------------------------------------------------------------
// policy and Q-difference checks

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceViolation {
    pub belief: Belief,
    pub optimal: usize,
    pub myopic: usize,
    /// `Q(π, μ*) − Q(π, μ̲)`.
    pub q_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDominance {
    pub checked: usize,
    pub violations: Vec<DominanceViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairMargin {
    pub low: usize,
    pub high: usize,
    /// `min_π [Q(π, u+1) − r_{u+1}'π] − [Q(π, u) − r_u'π]`.
    pub min_margin: f64,
    pub argmin: Belief,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QDiffReport {
    pub pairs: Vec<PairMargin>,
    /// Smallest margin over all pairs (`+∞` for a single action).
    pub min_margin: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Q-values at every point.
pub fn policy_table(m: &PomdpModel, v: &ValueFunction, points: &[Belief]) -> Vec<PolicyQuery> {
    points.iter().map(|p| solver::q_values(m, v, p)).collect()
}

/// Beliefs where the optimal action is below the myopic one. With an
/// approximate `V`, a point counts only if the myopic action is worse than the
/// optimum by more than `slack` (plus the tie tolerance).
pub fn policy_dominance(m: &PomdpModel, table: &[PolicyQuery], slack: f64) -> PolicyDominance {
    let mut violations = Vec::new();
    for q in table {
        let opt = q.action();
        let myo = solver::myopic_policy_at(m, &q.belief);
        let gap = q.q[opt] - q.q[myo];
        if opt < myo && gap > slack + solver::TIE_TOL {
            violations.push(DominanceViolation {
                belief: q.belief.clone(),
                optimal: opt,
                myopic: myo,
                q_gap: gap,
            });
        }
    }
    PolicyDominance {
        checked: table.len(),
        violations,
    }
}

pub fn q_diff_margins(m: &PomdpModel, table: &[PolicyQuery], slack: f64) -> QDiffReport {
    let mut pairs = Vec::new();
    for u in 0..m.num_actions.saturating_sub(1) {
        let mut best = (f64::INFINITY, None);
        for q in table {
            let lo = q.q[u] - m.expected_reward(&q.belief, u);
            let hi = q.q[u + 1] - m.expected_reward(&q.belief, u + 1);
            let d = hi - lo;
            if d < best.0 {
                best = (d, Some(&q.belief));
            }
        }
        if let (d, Some(b)) = best {
            pairs.push(PairMargin {
                low: u,
                high: u + 1,
                min_margin: d,
                argmin: b.clone(),
            });
        }
    }
    let min_margin = pairs.iter().map(|p| p.min_margin).fold(f64::INFINITY, f64::min);
    QDiffReport {
        holds: min_margin >= -slack,
        pairs,
        min_margin,
        slack,
    }
}

pub fn verify_policy_dominance(m: &PomdpModel, v: &ValueFunction, d: usize, slack: f64) -> PolicyDominance {
    let points = solver::barycentric_grid(m.num_states, d);
    policy_dominance(m, &policy_table(m, v, &points), slack)
}

pub fn verify_q_diff_monotone(m: &PomdpModel, v: &ValueFunction, d: usize, slack: f64) -> QDiffReport {
    let points = solver::barycentric_grid(m.num_states, d);
    q_diff_margins(m, &policy_table(m, v, &points), slack)
}

// ---------------------------------------------------------------------------
// ψ(λ) and range containment

/// `(σ_y, e_X' T(π, y, u))` for every observation with positive likelihood.
fn last_component_branches(m: &PomdpModel, belief: &Belief, u: usize) -> Vec<(f64, f64)> {
    let pred = model::predict(m, belief, u);
    let b = &m.observation[u];
    let x = m.num_states;
    (0..m.num_obs)
        .filter_map(|y| {
            let sigma: f64 = (0..x).map(|j| pred[j] * b[(j, y)]).sum();
            (sigma > model::IMPOSSIBLE_LIKELIHOOD).then(|| (sigma, pred[x - 1] * b[(x - 1, y)] / sigma))
        })
        .collect()
}

fn expected_excess(branches: &[(f64, f64)], lambda: f64) -> f64 {
    branches.iter().map(|(s, t)| f64::max(t - lambda, 0.0) * s).sum()
}

/// `ψ(λ) = Σ_y [e_X'T(π,y,u_high) − λ]⁺ σ(π,y,u_high) − Σ_y [e_X'T(π,y,u_low) − λ]⁺ σ(π,y,u_low)`.
pub fn psi(m: &PomdpModel, belief: &Belief, u_low: usize, u_high: usize, lambda: f64) -> Result<f64> {
    if !m.is_shared() {
        return Err(Error::NotShared);
    }
    let hi = last_component_branches(m, belief, u_high);
    let lo = last_component_branches(m, belief, u_low);
    Ok(expected_excess(&hi, lambda) - expected_excess(&lo, lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiPairMin {
    pub low: usize,
    pub high: usize,
    pub min: f64,
    pub argmin_belief: Belief,
    pub argmin_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiSweep {
    pub beliefs: usize,
    pub pairs: Vec<PsiPairMin>,
    pub min: f64,
    /// `max |ψ(0)|, |ψ(1)|` over beliefs and pairs.
    pub endpoint_max_abs: f64,
}

/// Evaluates ψ for every consecutive pair at `λ ∈ {0, 1/200, …, 1}` plus every
/// breakpoint `e_X'T(π, y, u)` of either action. ψ is piecewise linear
/// between breakpoints, so this finds the exact minimum over `[0, 1]`.
pub fn psi_sweep(m: &PomdpModel, beliefs: &[Belief]) -> Result<PsiSweep> {
    if !m.is_shared() {
        return Err(Error::NotShared);
    }
    let mut pairs = Vec::new();
    let mut endpoint: f64 = 0.0;
    for u in 0..m.num_actions.saturating_sub(1) {
        let mut best = PsiPairMin {
            low: u,
            high: u + 1,
            min: f64::INFINITY,
            argmin_belief: Belief::uniform(m.num_states),
            argmin_lambda: 0.0,
        };
        for b in beliefs {
            let hi = last_component_branches(m, b, u + 1);
            let lo = last_component_branches(m, b, u);
            let eval = |l: f64| expected_excess(&hi, l) - expected_excess(&lo, l);
            endpoint = endpoint.max(eval(0.0).abs()).max(eval(1.0).abs());
            let grid = (0..=PSI_STEPS).map(|k| k as f64 / PSI_STEPS as f64);
            let breaks = hi.iter().chain(&lo).map(|(_, t)| *t);
            for l in grid.chain(breaks) {
                let v = eval(l);
                if v < best.min {
                    best.min = v;
                    best.argmin_belief = b.clone();
                    best.argmin_lambda = l;
                }
            }
        }
        pairs.push(best);
    }
    Ok(PsiSweep {
        beliefs: beliefs.len(),
        min: pairs.iter().map(|p| p.min).fold(f64::INFINITY, f64::min),
        pairs,
        endpoint_max_abs: endpoint,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeSide {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeFailure {
    pub belief: Belief,
    pub side: RangeSide,
    /// Extreme of `e_X'T(π, y, u_low)` over `y`.
    pub low: f64,
    /// Extreme of `e_X'T(π, y, u_high)` over `y`.
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeReport {
    pub low: usize,
    pub high: usize,
    pub checked: usize,
    pub holds: bool,
    pub failures: Vec<RangeFailure>,
}

/// The spread of `e_X'T(π, ·, u_high)` contains that of `e_X'T(π, ·, u_low)`.
pub fn verify_range_containment(
    m: &PomdpModel,
    beliefs: &[Belief],
    u_low: usize,
    u_high: usize,
) -> Result<RangeReport> {
    if !m.is_shared() {
        return Err(Error::NotShared);
    }
    let extremes = |br: &[(f64, f64)]| {
        br.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, t)| (a.min(*t), b.max(*t)))
    };
    let mut failures = Vec::new();
    for b in beliefs {
        let (lo_min, lo_max) = extremes(&last_component_branches(m, b, u_low));
        let (hi_min, hi_max) = extremes(&last_component_branches(m, b, u_high));
        if hi_min > lo_min + RANGE_TOL {
            failures.push(RangeFailure {
                belief: b.clone(),
                side: RangeSide::Min,
                low: lo_min,
                high: hi_min,
            });
        }
        if hi_max < lo_max - RANGE_TOL {
            failures.push(RangeFailure {
                belief: b.clone(),
                side: RangeSide::Max,
                low: lo_max,
                high: hi_max,
            });
        }
    }
    Ok(RangeReport {
        low: u_low,
        high: u_high,
        checked: beliefs.len(),
        holds: failures.is_empty(),
        failures,
    })
}

// ---------------------------------------------------------------------------
// value shape

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeFailure {
    pub line: LineCoordinates,
    /// `(ε_1, ε_2)` for a monotonicity failure, `(ε_1, ε_3)` for a chord failure.
    pub epsilons: (f64, f64),
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub lines: usize,
    pub steps: usize,
    pub monotone: bool,
    pub convex: bool,
    pub monotone_failures: Vec<ShapeFailure>,
    pub convex_failures: Vec<ShapeFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaMonotoneReport>,
}

/// On each line `ℓ(e_X, π̄)` through the given bases, evaluates `V` at
/// `ε = k / steps` and checks that it is nondecreasing and that each interior
/// point lies below the chord of its neighbours.
pub fn verify_value_monotone_convex(v: &ValueFunction, bases: &[Belief], steps: usize) -> ShapeReport {
    let steps = steps.max(2);
    let mut rep = ShapeReport {
        lines: bases.len(),
        steps,
        monotone: true,
        convex: true,
        monotone_failures: Vec::new(),
        convex_failures: Vec::new(),
        gamma: match v {
            ValueFunction::Exact(e) => Some(solver::gamma_monotone_report(e)),
            ValueFunction::Grid(_) => None,
        },
    };
    for base in bases {
        let line = LineCoordinates {
            base: line_coordinates(base).base,
            epsilon: 0.0,
        };
        let eps: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        let vals: Vec<f64> = eps.iter().map(|&e| v.value_at(&line.point(e))).collect();
        for k in 1..vals.len() {
            let drop = vals[k - 1] - vals[k];
            if drop > SHAPE_TOL {
                rep.monotone = false;
                rep.monotone_failures.push(ShapeFailure {
                    line: line.clone(),
                    epsilons: (eps[k - 1], eps[k]),
                    gap: drop,
                });
            }
        }
        for k in 1..vals.len() - 1 {
            let excess = vals[k] - 0.5 * (vals[k - 1] + vals[k + 1]);
            if excess > SHAPE_TOL {
                rep.convex = false;
                rep.convex_failures.push(ShapeFailure {
                    line: line.clone(),
                    epsilons: (eps[k - 1], eps[k + 1]),
                    gap: excess,
                });
            }
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// model comparison

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonHypotheses {
    pub a1: bool,
    pub a2: bool,
    pub a3_strong: bool,
    pub a3_weak: bool,
    /// Per action: boundary condition with `B̄(u)` in the role of the
    /// less precise sensor and `B(u)` in the role of the more precise one.
    pub a7: Vec<bool>,
    /// Per action: `B(u) >_L B̄(u)`.
    pub lehmann: Vec<bool>,
    /// Per action: `B(u) >_B B̄(u)`; `None` when the LP was undecided.
    pub blackwell: Vec<Option<bool>>,
    pub statement1: bool,
    pub statement2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub strong: String,
    pub weak: String,
    pub hypotheses: ComparisonHypotheses,
    pub points: usize,
    /// `min_π J*_strong(π) − J*_weak(π)` over the grid.
    pub min_difference: f64,
    pub argmin: Belief,
    /// Allowed shortfall: twice the per-model slack.
    pub slack: f64,
    pub holds: bool,
}

fn check_comparable(a: &PomdpModel, b: &PomdpModel) -> Result<()> {
    if (a.num_states, a.num_obs, a.num_actions) != (b.num_states, b.num_obs, b.num_actions) {
        return Err(Error::Dimension(format!(
            "models have (X, Y, U) = ({}, {}, {}) and ({}, {}, {})",
            a.num_states, a.num_obs, a.num_actions, b.num_states, b.num_obs, b.num_actions
        )));
    }
    if a.reward != b.reward || a.discount != b.discount {
        return Err(Error::InvalidModel("models must share rewards and discount".into()));
    }
    match (a.shared_transition(), b.shared_transition()) {
        (Some(p), Some(q)) if p == q => Ok(()),
        _ => Err(Error::InvalidModel(
            "models must share one action-independent transition matrix".into(),
        )),
    }
}

pub fn comparison_hypotheses(strong: &PomdpModel, weak: &PomdpModel) -> Result<ComparisonHypotheses> {
    check_comparable(strong, weak)?;
    let ok = |v: Result<OrderVerdict>| v.map(|v| v.holds).unwrap_or(false);
    let p = strong.shared_transition().expect("checked");
    let a1 = strong.reward.iter().enumerate().all(|(u, r)| increasing(r, u).holds());
    let a2 = ok(orders::is_tp2(p));
    let a3_strong = strong.observation.iter().all(|b| ok(orders::is_tp2(b)));
    let a3_weak = weak.observation.iter().all(|b| ok(orders::is_tp2(b)));
    let pairs = strong.observation.iter().zip(&weak.observation);
    let a7: Vec<bool> = pairs.clone().map(|(s, w)| ok(orders::check_a7(w, s))).collect();
    let lehmann: Vec<bool> = pairs.clone().map(|(s, w)| ok(orders::lehmann_precision(w, s))).collect();
    let blackwell: Vec<Option<bool>> = pairs
        .map(|(s, w)| orders::blackwell_dominates(s, w).ok().map(|f| f.verdict.holds))
        .collect();
    let base = a1 && a2 && a3_strong && a3_weak && a7.iter().all(|&b| b);
    Ok(ComparisonHypotheses {
        statement1: base && lehmann.iter().all(|&b| b),
        statement2: blackwell.iter().all(|b| *b == Some(true)),
        a1,
        a2,
        a3_strong,
        a3_weak,
        a7,
        lehmann,
        blackwell,
    })
}

/// Solves both models and compares their optimal values on the grid of
/// resolution `d`. Identical models short-circuit to an exact zero.
pub fn compare_models(
    strong: &PomdpModel,
    weak: &PomdpModel,
    d: usize,
    method: Method,
    mode: Mode,
    opts: &SolveOptions,
) -> Result<ComparisonReport> {
    let hypotheses = comparison_hypotheses(strong, weak)?;
    let points = solver::barycentric_grid(strong.num_states, d);
    let vs = solver::solve(strong, method, mode, opts)?;
    let vw = if strong == weak {
        vs.clone()
    } else {
        solver::solve(weak, method, mode, opts)?
    };
    let slack = 2.0 * solver::slack_for(mode, strong.discount);
    let mut min = (f64::INFINITY, 0);
    for (k, p) in points.iter().enumerate() {
        let d = vs.value_at(p) - vw.value_at(p);
        if d < min.0 {
            min = (d, k);
        }
    }
    Ok(ComparisonReport {
        strong: strong.name.clone(),
        weak: weak.name.clone(),
        hypotheses,
        points: points.len(),
        min_difference: min.0,
        argmin: points[min.1].clone(),
        slack,
        holds: min.0 >= -slack,
    })
}

/// Everything [`verify`] measures for one solved model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub grid: usize,
    pub points: usize,
    pub slack: f64,
    pub applicability: Applicability,
    pub policy_dominance: PolicyDominance,
    pub q_diff: QDiffReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub range_containment: Vec<RangeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<PsiSweep>,
    pub value_shape: ShapeReport,
}

impl VerificationReport {
    /// Whether the checks the theorems predict for this model came out clean:
    /// when statement 1 applies, no dominance violations and a ψ minimum of at
    /// least `−1e-9`.
    pub fn expectations_met(&self) -> bool {
        if !self.applicability.statement1 {
            return true;
        }
        self.policy_dominance.violations.is_empty() && self.psi.as_ref().is_none_or(|p| p.min >= -1e-9)
    }
}

/// Inputs for [`verify`] that the caller samples.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyInputs<'a> {
    pub grid: usize,
    pub slack: f64,
    /// Beliefs for the ψ sweep and range containment.
    pub samples: &'a [Belief],
    /// Bases of the lines used for the shape checks.
    pub line_bases: &'a [Belief],
    pub line_steps: usize,
}

pub fn verify(m: &PomdpModel, v: &ValueFunction, inputs: &VerifyInputs<'_>) -> Result<VerificationReport> {
    let report = assumption_report(m);
    let points = solver::barycentric_grid(m.num_states, inputs.grid);
    let table = policy_table(m, v, &points);
    let (range_containment, psi) = if m.is_shared() {
        let ranges = (0..m.num_actions.saturating_sub(1))
            .map(|u| verify_range_containment(m, inputs.samples, u, u + 1))
            .collect::<Result<Vec<_>>>()?;
        (ranges, Some(psi_sweep(m, inputs.samples)?))
    } else {
        (Vec::new(), None)
    };
    Ok(VerificationReport {
        grid: inputs.grid,
        points: points.len(),
        slack: inputs.slack,
        applicability: report.applicability,
        policy_dominance: policy_dominance(m, &table, inputs.slack),
        q_diff: q_diff_margins(m, &table, inputs.slack),
        range_containment,
        psi,
        value_shape: verify_value_monotone_convex(v, inputs.line_bases, inputs.line_steps),
    })
}

/// Keeps only the alpha-vector diagnostics of an exact value function.
pub fn gamma_report(v: &ExactVf) -> GammaMonotoneReport {
    solver::gamma_monotone_report(v)
}
