//! Cross-checks against independent brute-force oracles.

mod common;

use common::*;
use myopic_core::linalg::{dot, Matrix};
use myopic_core::lp::{lp_solve, LinearProgram, LpOptions, LpStatus};
use myopic_core::model::{self, GeneralShift};
use myopic_core::solver::{self, AlphaVector, Mode, SolveOptions, ValueFunction};
use myopic_core::{fixtures, Belief, PomdpModel, Transition};
use rand::Rng;

#[test]
fn ex1_bayes_update_matches_joint_enumeration() {
    let m = fixtures::ex1();
    let pi = Belief::uniform(3);
    let (sigma, want) = joint_bayes(&m, pi.as_slice(), 1, 0);
    let got = model::belief_update(&m, &pi, 1, 0).unwrap();
    assert!(close(model::obs_likelihood(&m, &pi, 1, 0), sigma, 1e-15));
    for (g, w) in got.as_slice().iter().zip(&want) {
        assert!(close(*g, *w, 1e-15), "{got:?} vs {want:?}");
    }
    // P'π = [0.3, 0.4, 0.3]; column 1 of B(0) is [0.2, 0.8, 0.2]
    assert!(close(sigma, 0.44, 1e-15));
    let hand = [0.06 / 0.44, 0.32 / 0.44, 0.06 / 0.44];
    assert!(linalg_close(got.as_slice(), &hand, 1e-15));
}

fn linalg_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    myopic_core::linalg::max_abs_diff(a, b) <= tol
}

#[test]
fn random_bayes_updates_match_joint_enumeration() {
    let mut r = rng(11);
    for _ in 0..300 {
        let m = random_model(&mut r, 4);
        let pi = random_belief(&mut r, m.num_states);
        let u = r.gen_range(0..m.num_actions);
        for y in 0..m.num_obs {
            let (sigma, want) = joint_bayes(&m, pi.as_slice(), y, u);
            assert!(close(model::obs_likelihood(&m, &pi, y, u), sigma, 1e-14));
            match model::belief_update(&m, &pi, y, u) {
                Ok(b) => assert!(linalg_close(b.as_slice(), &want, 1e-12)),
                Err(_) => assert!(sigma <= 1e-300),
            }
        }
    }
}

#[test]
fn exact_solver_matches_expectimax() {
    let mut r = rng(7);
    for case in 0..40 {
        let m = random_model(&mut r, 3);
        let k = r.gen_range(1..=4);
        let v = solver::solve_exact(&m, Mode::Horizon(k), &SolveOptions::default()).unwrap();
        let v = ValueFunction::Exact(v);
        for _ in 0..50 {
            let pi = random_belief(&mut r, m.num_states);
            let want = expectimax(&m, pi.as_slice(), k);
            let got = v.value_at(&pi);
            assert!(close(got, want, 1e-9), "case {case}, k {k}: {got} vs {want}");
        }
    }
}

#[test]
fn q_values_match_depth_two_expectimax() {
    let mut r = rng(8);
    for _ in 0..40 {
        let shared = r.gen_bool(0.5);
        let m = random_model_dims(&mut r, 2, 2, 2, shared);
        let v = ValueFunction::Exact(solver::solve_exact(&m, Mode::Horizon(1), &SolveOptions::default()).unwrap());
        for _ in 0..11 {
            let pi = random_belief(&mut r, 2);
            let q = solver::q_values(&m, &v, &pi);
            for u in 0..2 {
                assert!(close(q.q[u], q_expectimax(&m, pi.as_slice(), u, 2), 1e-12));
            }
        }
    }
}

#[test]
fn eleven_point_two_state_check() {
    let mut r = rng(3);
    let m = random_model_dims(&mut r, 2, 2, 2, false);
    let v = ValueFunction::Exact(solver::solve_exact(&m, Mode::Horizon(3), &SolveOptions::default()).unwrap());
    for k in 0..=10 {
        let p = k as f64 / 10.0;
        let pi = Belief::new(vec![1.0 - p, p]).unwrap();
        assert!(close(v.value_at(&pi), expectimax(&m, pi.as_slice(), 3), 1e-10));
    }
}

fn grid_max(vs: &[Vec<f64>], p: f64) -> f64 {
    vs.iter().map(|v| v[0] * (1.0 - p) + v[1] * p).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn prune_matches_dense_grid_oracle() {
    let mut r = rng(5);
    for _ in 0..300 {
        let n = r.gen_range(1..=8);
        let vs: Vec<Vec<f64>> = (0..n).map(|_| vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]).collect();
        let alphas: Vec<AlphaVector> = vs
            .iter()
            .map(|v| AlphaVector {
                values: v.clone(),
                action: 0,
            })
            .collect();
        let kept: Vec<Vec<f64>> = solver::prune(alphas).unwrap().into_iter().map(|a| a.values).collect();
        for k in 0..=1000 {
            let p = k as f64 / 1000.0;
            assert!(close(grid_max(&kept, p), grid_max(&vs, p), 1e-10));
        }
        // every survivor is the strict maximum somewhere (checked at fine resolution)
        for (i, w) in kept.iter().enumerate() {
            let others: Vec<Vec<f64>> = kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.clone()).collect();
            if others.is_empty() {
                continue;
            }
            let best = (0..=100_000)
                .map(|k| {
                    let p = k as f64 / 100_000.0;
                    w[0] * (1.0 - p) + w[1] * p - grid_max(&others, p)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(best > 0.0, "{w:?} never wins among {kept:?}");
        }
    }
}

#[test]
fn prune_three_states_against_grid() {
    let mut r = rng(6);
    let grid = solver::barycentric_grid(3, 60);
    for _ in 0..100 {
        let n = r.gen_range(1..=12);
        let alphas: Vec<AlphaVector> = (0..n)
            .map(|_| AlphaVector {
                values: (0..3).map(|_| r.gen_range(-1.0..1.0)).collect(),
                action: 0,
            })
            .collect();
        let kept = solver::prune(alphas.clone()).unwrap();
        for p in &grid {
            let a = alphas.iter().map(|v| v.eval(p.as_slice())).fold(f64::NEG_INFINITY, f64::max);
            let b = kept.iter().map(|v| v.eval(p.as_slice())).fold(f64::NEG_INFINITY, f64::max);
            assert!(close(a, b, 1e-10));
        }
    }
}

/// Brute-force LP optimum over all basic solutions of
/// `min c'x, Gx ≤ h, x ≥ 0` (bounded by construction).
fn vertex_optimum(c: &[f64], g: &[Vec<f64>], h: &[f64]) -> Option<f64> {
    let n = c.len();
    // all constraints as a'x ≤ b, including −x_j ≤ 0
    let mut rows: Vec<(Vec<f64>, f64)> = g.iter().cloned().zip(h.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let mut best: Option<f64> = None;
    let total = rows.len();
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let a = Matrix::from_rows(&pick.iter().map(|&i| rows[i].0.clone()).collect::<Vec<_>>()).unwrap();
        let b: Vec<f64> = pick.iter().map(|&i| rows[i].1).collect();
        if let Ok(x) = a.solve(&b) {
            if rows.iter().all(|(r, rhs)| dot(r, &x) <= rhs + 1e-9) {
                let v = dot(c, &x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut r = rng(9);
    let mut solved = 0;
    for _ in 0..300 {
        let n = r.gen_range(1..=8);
        let m = r.gen_range(1..=5);
        let c: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut g: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let mut h: Vec<f64> = (0..m).map(|_| r.gen_range(-0.5..1.0)).collect();
        g.push(vec![1.0; n]);
        h.push(r.gen_range(1.0..3.0));
        let mut p = LinearProgram::new(n);
        p.set_objective(c.clone());
        for (row, b) in g.iter().zip(&h) {
            p.add_le(row.clone(), *b);
        }
        let out = lp_solve(&p, &LpOptions::default());
        match vertex_optimum(&c, &g, &h) {
            Some(v) => {
                assert_eq!(out.status, LpStatus::Optimal);
                assert!(close(out.objective, v, 1e-7), "{} vs {v}", out.objective);
                assert!(p.max_violation(&out.x) <= 1e-8);
                solved += 1;
            }
            None => assert_eq!(out.status, LpStatus::Infeasible),
        }
    }
    assert!(solved > 100);
}

/// `P(0)` moves state 1 to state 2 and `P(1)` moves it to state 0; both
/// absorb states 0 and 2. With `f(0) = 0` the increments need
/// `ρ f2 < f1 < f2` and `0 < f1 < (1 − ρ) f2`, feasible iff `ρ < 1/2`.
fn crafted(discount: f64) -> PomdpModel {
    let p0 = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]).unwrap();
    let p1 = Matrix::from_rows(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
    PomdpModel {
        name: "crafted".into(),
        num_states: 3,
        num_obs: 1,
        num_actions: 2,
        discount,
        transition: Transition::PerAction(vec![p0, p1]),
        observation: vec![Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap(); 2],
        reward: vec![vec![0.0; 3]; 2],
    }
}

/// Shifts are translation invariant in `f`, so directions `(0, a, b)` with
/// `a, b ∈ [−1, 1]` cover every candidate.
fn grid_search_shift(m: &PomdpModel) -> bool {
    let steps = 400;
    for ia in 0..=steps {
        for ib in 0..=steps {
            let f = [0.0, -1.0 + 2.0 * ia as f64 / steps as f64, -1.0 + 2.0 * ib as f64 / steps as f64];
            let ok = (0..m.num_actions).all(|u| {
                let pf = m.transition_for(u).mul_vec(&f);
                let d: Vec<f64> = f.iter().zip(&pf).map(|(a, b)| a - m.discount * b).collect();
                d.windows(2).all(|w| w[1] > w[0])
            });
            if ok {
                return true;
            }
        }
    }
    false
}

#[test]
fn general_shift_agrees_with_grid_search() {
    for rho in [0.0, 0.1, 0.3, 0.45, 0.55, 0.7, 0.9] {
        let m = crafted(rho);
        let lp = model::reward_shift_general(&m).unwrap();
        let grid = grid_search_shift(&m);
        match lp {
            GeneralShift::Feasible(s) => {
                assert!(grid, "ρ = {rho}");
                for d in &s.delta {
                    assert!(d.windows(2).all(|w| w[1] - w[0] >= model::SHIFT_MARGIN - 1e-9));
                }
            }
            GeneralShift::Infeasible { phase_one } => {
                assert!(!grid, "ρ = {rho}");
                assert!(phase_one > 0.0);
            }
        }
    }
}

#[test]
fn grid_solver_never_exceeds_exact() {
    let mut r = rng(12);
    for _ in 0..20 {
        let m = random_model_dims(&mut r, 3, 2, 2, true);
        let k = 4;
        let e = ValueFunction::Exact(solver::solve_exact(&m, Mode::Horizon(k), &SolveOptions::default()).unwrap());
        let g = solver::solve_grid(&m, 12, Mode::Horizon(k), &SolveOptions::default()).unwrap();
        for (p, v) in g.points.iter().zip(&g.values) {
            assert!(*v <= e.value_at(p) + 1e-9);
        }
    }
}
