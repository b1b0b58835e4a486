//! Independent oracles and random instances shared by the integration tests.
//! Nothing here calls the belief-update or backup code under test.

#![allow(dead_code)]

use myopic_core::linalg::Matrix;
use myopic_core::{Belief, PomdpModel, Transition};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector; with `sparse`, some entries are forced to zero.
pub fn random_dist(r: &mut ChaCha8Rng, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && r.gen_bool(0.25) {
                    0.0
                } else {
                    r.gen_range(0.01..1.0)
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            v.iter_mut().for_each(|p| *p /= s);
            return v;
        }
    }
}

pub fn random_stochastic(r: &mut ChaCha8Rng, rows: usize, cols: usize, sparse: bool) -> Matrix {
    let data: Vec<Vec<f64>> = (0..rows).map(|_| random_dist(r, cols, sparse)).collect();
    Matrix::from_rows(&data).unwrap()
}

pub fn random_belief(r: &mut ChaCha8Rng, n: usize) -> Belief {
    let sparse = r.gen_bool(0.2);
    Belief::new(random_dist(r, n, sparse)).unwrap()
}

/// Random model with every dimension in `1..=max_dim`.
pub fn random_model(r: &mut ChaCha8Rng, max_dim: usize) -> PomdpModel {
    let x = r.gen_range(1..=max_dim);
    let y = r.gen_range(1..=max_dim);
    let u = r.gen_range(1..=max_dim);
    let shared = r.gen_bool(0.5);
    random_model_dims(r, x, y, u, shared)
}

pub fn random_model_dims(r: &mut ChaCha8Rng, x: usize, y: usize, u: usize, shared: bool) -> PomdpModel {
    let sparse = r.gen_bool(0.3);
    let transition = if shared {
        Transition::Shared(random_stochastic(r, x, x, sparse))
    } else {
        Transition::PerAction((0..u).map(|_| random_stochastic(r, x, x, sparse)).collect())
    };
    PomdpModel {
        name: "random".into(),
        num_states: x,
        num_obs: y,
        num_actions: u,
        discount: r.gen_range(0.0..0.95),
        transition,
        observation: (0..u).map(|_| random_stochastic(r, x, y, sparse)).collect(),
        reward: (0..u).map(|_| (0..x).map(|_| r.gen_range(-1.0..2.0)).collect()).collect(),
    }
}

fn transition(m: &PomdpModel, u: usize) -> &Matrix {
    match &m.transition {
        Transition::Shared(p) => p,
        Transition::PerAction(ps) => &ps[u],
    }
}

/// `Pr(x_k = i, x_{k+1} = j, y = y)` for every triple, summed over `i` and
/// `j`, gives `σ`; summing over `i` only and normalizing gives `T`.
pub fn joint_bayes(m: &PomdpModel, pi: &[f64], y: usize, u: usize) -> (f64, Vec<f64>) {
    let x = m.num_states;
    let p = transition(m, u);
    let b = &m.observation[u];
    let mut next = vec![0.0; x];
    for i in 0..x {
        for j in 0..x {
            next[j] += pi[i] * p[(i, j)] * b[(j, y)];
        }
    }
    let sigma: f64 = next.iter().sum();
    if sigma > 0.0 {
        next.iter_mut().for_each(|v| *v /= sigma);
    }
    (sigma, next)
}

/// Depth-`k` expectimax: `V_k(π) = max_u r_u'π + ρ Σ_y σ V_{k−1}(T)`, `V_0 = 0`.
pub fn expectimax(m: &PomdpModel, pi: &[f64], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    (0..m.num_actions)
        .map(|u| q_expectimax(m, pi, u, k))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn q_expectimax(m: &PomdpModel, pi: &[f64], u: usize, k: usize) -> f64 {
    let immediate: f64 = m.reward[u].iter().zip(pi).map(|(r, p)| r * p).sum();
    if k <= 1 {
        return immediate;
    }
    let mut future = 0.0;
    for y in 0..m.num_obs {
        let (sigma, next) = joint_bayes(m, pi, y, u);
        if sigma > 1e-300 {
            future += sigma * expectimax(m, &next, k - 1);
        }
    }
    immediate + m.discount * future
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
