//! POMDP model data, validation and belief propagation.
//!
//! Conventions: `P(u)[i][j] = P(x' = j | x = i, u)`, `B(u)[j][y] = P(y | x' = j, u)`.
//! The Bayes filter is `T(π, y, u) = B_y(u) P(u)' π / σ(π, y, u)` with
//! `σ(π, y, u) = 1' B_y(u) P(u)' π`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};
use crate::lp::{self, LinearProgram, LpOptions};
use crate::{Error, Result};

/// Row sums and entry ranges of every stochastic matrix must hold to this.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// A belief is considered normalized when its sum is within this of one.
pub const BELIEF_TOL: f64 = 1e-12;
/// Observation likelihoods at or below this are treated as impossible.
pub const IMPOSSIBLE_LIKELIHOOD: f64 = 1e-300;
/// Strict-increase margin used by the general reward-shift LP.
pub const SHIFT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Transition {
    /// One matrix for every action (controlled sensing).
    Shared(Matrix),
    PerAction(Vec<Matrix>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomdpModel {
    pub name: String,
    pub num_states: usize,
    pub num_obs: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub transition: Transition,
    pub observation: Vec<Matrix>,
    pub reward: Vec<Vec<f64>>,
}

/// Which matrix family a [`Violation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Transition,
    Observation,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixKind::Transition => "P",
            MatrixKind::Observation => "B",
        })
    }
}

/// One violated model invariant. Row and action indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Dimension {
        message: String,
    },
    RowSum {
        matrix: MatrixKind,
        action: Option<usize>,
        row: usize,
        sum: f64,
    },
    EntryRange {
        matrix: MatrixKind,
        action: Option<usize>,
        row: usize,
        col: usize,
        value: f64,
    },
    Discount {
        value: f64,
    },
    NonFiniteReward {
        action: usize,
        state: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = |m: &MatrixKind, a: &Option<usize>| match a {
            Some(a) => format!("{m}({a})"),
            None => format!("{m}"),
        };
        match self {
            Violation::Dimension { message } => write!(f, "dimension: {message}"),
            Violation::RowSum {
                matrix,
                action,
                row,
                sum,
            } => write!(f, "{} row {row}: row sum {sum} ≠ 1", label(matrix, action)),
            Violation::EntryRange {
                matrix,
                action,
                row,
                col,
                value,
            } => write!(
                f,
                "{} entry ({row}, {col}) = {value} outside [0, 1]",
                label(matrix, action)
            ),
            Violation::Discount { value } => write!(f, "discount {value} not < 1 (or negative)"),
            Violation::NonFiniteReward { action, state } => {
                write!(f, "reward r({state}, {action}) is not finite")
            }
        }
    }
}

impl PomdpModel {
    /// Validates and returns the model, or the violations joined into one error.
    pub fn checked(self) -> Result<Self> {
        let violations = validate_model(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            let msg: Vec<String> = violations.iter().map(|v| format!("{v}")).collect();
            Err(Error::InvalidModel(msg.join("; ")))
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self.transition, Transition::Shared(_))
    }

    pub fn transition_for(&self, action: usize) -> &Matrix {
        match &self.transition {
            Transition::Shared(p) => p,
            Transition::PerAction(ps) => &ps[action],
        }
    }

    pub fn shared_transition(&self) -> Option<&Matrix> {
        match &self.transition {
            Transition::Shared(p) => Some(p),
            Transition::PerAction(_) => None,
        }
    }

    /// `r_u' π`.
    pub fn expected_reward(&self, belief: &Belief, action: usize) -> f64 {
        dot(&self.reward[action], belief.as_slice())
    }

    /// The same model with every reward vector replaced.
    pub fn with_rewards(&self, reward: Vec<Vec<f64>>) -> Self {
        Self {
            reward,
            ..self.clone()
        }
    }
}

/// Checks every [`PomdpModel`] invariant; an empty list means the model is valid.
pub fn validate_model(m: &PomdpModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let dim = |out: &mut Vec<Violation>, message: String| out.push(Violation::Dimension { message });

    if m.num_states == 0 || m.num_obs == 0 || m.num_actions == 0 {
        dim(
            &mut out,
            format!(
                "X, Y, U must be positive (got {}, {}, {})",
                m.num_states, m.num_obs, m.num_actions
            ),
        );
        return out;
    }
    if !(0.0..1.0).contains(&m.discount) {
        out.push(Violation::Discount { value: m.discount });
    }

    let check_matrix = |out: &mut Vec<Violation>,
                            mat: &Matrix,
                            kind: MatrixKind,
                            action: Option<usize>,
                            cols: usize| {
        if mat.rows() != m.num_states || mat.cols() != cols {
            dim(
                out,
                format!(
                    "{}: expected {}x{cols}, found {}x{}",
                    match action {
                        Some(a) => format!("{kind}({a})"),
                        None => format!("{kind}"),
                    },
                    m.num_states,
                    mat.rows(),
                    mat.cols()
                ),
            );
            return;
        }
        for row in 0..mat.rows() {
            let r = mat.row(row);
            for (col, &value) in r.iter().enumerate() {
                if !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&value) {
                    out.push(Violation::EntryRange {
                        matrix: kind,
                        action,
                        row,
                        col,
                        value,
                    });
                }
            }
            let sum: f64 = r.iter().sum();
            if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
                out.push(Violation::RowSum {
                    matrix: kind,
                    action,
                    row,
                    sum,
                });
            }
        }
    };

    match &m.transition {
        Transition::Shared(p) => check_matrix(&mut out, p, MatrixKind::Transition, None, m.num_states),
        Transition::PerAction(ps) => {
            if ps.len() != m.num_actions {
                dim(
                    &mut out,
                    format!("{} transition matrices for {} actions", ps.len(), m.num_actions),
                );
            }
            for (u, p) in ps.iter().enumerate() {
                check_matrix(&mut out, p, MatrixKind::Transition, Some(u), m.num_states);
            }
        }
    }

    if m.observation.len() != m.num_actions {
        dim(
            &mut out,
            format!(
                "{} observation matrices for {} actions",
                m.observation.len(),
                m.num_actions
            ),
        );
    }
    for (u, b) in m.observation.iter().enumerate() {
        check_matrix(&mut out, b, MatrixKind::Observation, Some(u), m.num_obs);
    }

    if m.reward.len() != m.num_actions {
        dim(
            &mut out,
            format!("{} reward vectors for {} actions", m.reward.len(), m.num_actions),
        );
    }
    for (u, r) in m.reward.iter().enumerate() {
        if r.len() != m.num_states {
            dim(
                &mut out,
                format!("reward {u} has length {}, expected {}", r.len(), m.num_states),
            );
            continue;
        }
        for (state, v) in r.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::NonFiniteReward { action: u, state });
            }
        }
    }
    out
}

/// A probability vector over the hidden states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Accepts vectors within `1e-9` of the simplex and renormalizes them;
    /// anything further off is rejected.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty vector".into()));
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -STOCHASTIC_TOL {
                return Err(Error::InvalidBelief(format!("entry {i} = {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidBelief(format!("entries sum to {sum}")));
        }
        if (sum - 1.0).abs() > BELIEF_TOL {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self(probs))
    }

    /// Normalizes a nonnegative vector with positive mass. Used internally
    /// where the input is known to be a scaled probability vector.
    pub(crate) fn from_unnormalized(mut v: Vec<f64>, mass: f64) -> Self {
        v.iter_mut().for_each(|p| *p = (*p / mass).max(0.0));
        Self(v)
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `λ self + (1 − λ) other`.
    pub fn mix(&self, other: &Belief, lambda: f64) -> Belief {
        Belief(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        )
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.0
    }
}

/// Position of a belief on the segment from a point of the face `π(X) = 0`
/// to the vertex `e_X`: `π = (1 − ε) base + ε e_X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCoordinates {
    pub base: Belief,
    pub epsilon: f64,
}

impl LineCoordinates {
    pub fn point(&self, epsilon: f64) -> Belief {
        let n = self.base.len();
        let mut v: Vec<f64> = self.base.as_slice().iter().map(|b| (1.0 - epsilon) * b).collect();
        v[n - 1] += epsilon;
        Belief(v)
    }

    pub fn reconstruct(&self) -> Belief {
        self.point(self.epsilon)
    }
}

pub fn line_coordinates(belief: &Belief) -> LineCoordinates {
    let p = belief.as_slice();
    let n = p.len();
    let epsilon = p[n - 1];
    let base = if n == 1 {
        Belief(vec![1.0])
    } else if 1.0 - epsilon <= BELIEF_TOL {
        // every base gives the same point at ε = 1
        let mut v = vec![1.0 / (n - 1) as f64; n];
        v[n - 1] = 0.0;
        Belief(v)
    } else {
        let mut v: Vec<f64> = p.iter().map(|x| x / (1.0 - epsilon)).collect();
        v[n - 1] = 0.0;
        Belief(v)
    };
    LineCoordinates { base, epsilon }
}

/// `P(u)' π`, the predicted state distribution before observing.
pub fn predict(m: &PomdpModel, belief: &Belief, action: usize) -> Vec<f64> {
    m.transition_for(action).tr_mul_vec(belief.as_slice())
}

/// `σ(π, y, u)`.
pub fn obs_likelihood(m: &PomdpModel, belief: &Belief, obs: usize, action: usize) -> f64 {
    let b = &m.observation[action];
    predict(m, belief, action)
        .iter()
        .enumerate()
        .map(|(j, p)| p * b[(j, obs)])
        .sum()
}

/// `T(π, y, u)`; errors when the observation has (numerically) zero likelihood.
pub fn belief_update(m: &PomdpModel, belief: &Belief, obs: usize, action: usize) -> Result<Belief> {
    let b = &m.observation[action];
    let joint: Vec<f64> = predict(m, belief, action)
        .iter()
        .enumerate()
        .map(|(j, p)| p * b[(j, obs)])
        .collect();
    let sigma: f64 = joint.iter().sum();
    if sigma <= IMPOSSIBLE_LIKELIHOOD {
        return Err(Error::ImpossibleObservation {
            obs,
            action,
            likelihood: sigma,
        });
    }
    Ok(Belief::from_unnormalized(joint, sigma))
}

/// Every positive-likelihood observation under `action`, as `(y, σ, T(π, y, u))`.
pub fn observation_branches(m: &PomdpModel, belief: &Belief, action: usize) -> Vec<(usize, f64, Belief)> {
    let predicted = predict(m, belief, action);
    let b = &m.observation[action];
    (0..m.num_obs)
        .filter_map(|y| {
            let joint: Vec<f64> = predicted.iter().enumerate().map(|(j, p)| p * b[(j, y)]).collect();
            let sigma: f64 = joint.iter().sum();
            (sigma > IMPOSSIBLE_LIKELIHOOD).then(|| (y, sigma, Belief::from_unnormalized(joint, sigma)))
        })
        .collect()
}

/// Result of a reward shift: `f`, the per-action increments
/// `Δ_u = (I − ρ P(u)) f`, and the model with rewards `r_u + Δ_u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardShift {
    pub f: Vec<f64>,
    pub delta: Vec<Vec<f64>>,
    #[serde(skip)]
    pub shifted: PomdpModel,
}

fn apply_shift(m: &PomdpModel, f: Vec<f64>) -> RewardShift {
    let delta: Vec<Vec<f64>> = (0..m.num_actions)
        .map(|u| {
            let pf = m.transition_for(u).mul_vec(&f);
            f.iter().zip(&pf).map(|(fi, pfi)| fi - m.discount * pfi).collect()
        })
        .collect();
    let reward = m
        .reward
        .iter()
        .zip(&delta)
        .map(|(r, d)| r.iter().zip(d).map(|(a, b)| a + b).collect())
        .collect();
    RewardShift {
        shifted: m.with_rewards(reward),
        f,
        delta,
    }
}

/// Controlled-sensing reward shift: `Δ(i) = (i + 1)·r̃` with `r̃` one more than
/// the reward spread, and `f = (I − ρP)⁻¹ Δ`.
pub fn reward_shift_controlled(m: &PomdpModel) -> Result<RewardShift> {
    let p = m.shared_transition().ok_or(Error::NotShared)?;
    let (lo, hi) = m
        .reward
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let step = (hi - lo) + 1.0;
    let delta: Vec<f64> = (0..m.num_states).map(|i| (i + 1) as f64 * step).collect();

    let n = m.num_states;
    let mut a = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= m.discount * p[(i, j)];
        }
    }
    let f = a.solve(&delta)?;
    let residual = crate::linalg::max_abs_diff(&a.mul_vec(&f), &delta);
    if residual > 1e-8 * step.max(1.0) {
        return Err(Error::Residual(residual));
    }
    Ok(apply_shift(m, f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GeneralShift {
    Feasible(RewardShift),
    /// Phase-one LP optimum certifying that no `f` exists.
    Infeasible { phase_one: f64 },
}

/// Searches for `f` with every `(I − ρP(u)) f` strictly increasing by at least
/// [`SHIFT_MARGIN`] per step. Numerical LP failure is an error, not a verdict.
pub fn reward_shift_general(m: &PomdpModel) -> Result<GeneralShift> {
    let n = m.num_states;
    let mut prog = LinearProgram::new(n);
    for j in 0..n {
        prog.set_free(j);
    }
    for u in 0..m.num_actions {
        let p = m.transition_for(u);
        for i in 0..n.saturating_sub(1) {
            // (e_{i+1} − e_i)' (I − ρP) f ≥ margin
            let mut row = vec![0.0; n];
            row[i + 1] += 1.0;
            row[i] -= 1.0;
            for j in 0..n {
                row[j] -= m.discount * (p[(i + 1, j)] - p[(i, j)]);
            }
            prog.add_ge(row, SHIFT_MARGIN);
        }
    }
    match lp::lp_feasible(&prog, &LpOptions::default())? {
        lp::Feasibility::Feasible(f) => Ok(GeneralShift::Feasible(apply_shift(m, f))),
        lp::Feasibility::Infeasible { phase_one } => Ok(GeneralShift::Infeasible { phase_one }),
    }
}
