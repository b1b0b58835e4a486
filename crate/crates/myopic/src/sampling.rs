//! Seeded belief samples for the ψ sweep, range checks and line checks.

use myopic_core::Belief;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform on the simplex: normalized exponential spacings.
fn uniform_simplex(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| -(1.0 - r.gen::<f64>()).ln()).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|e| e / s).collect();
        }
    }
}

/// `n` beliefs drawn uniformly from `Π(X)`.
pub fn sample_beliefs(x: usize, n: usize, seed: u64) -> Vec<Belief> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Belief::new(uniform_simplex(&mut r, x)).expect("sampled belief"))
        .collect()
}

/// `n` bases `π̄` drawn uniformly from the face `π(X) = 0`. Empty when `X < 2`.
pub fn sample_line_bases(x: usize, n: usize, seed: u64) -> Vec<Belief> {
    if x < 2 {
        return Vec::new();
    }
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x6c69_6e65);
    (0..n)
        .map(|_| {
            let mut v = uniform_simplex(&mut r, x - 1);
            v.push(0.0);
            Belief::new(v).expect("sampled base")
        })
        .collect()
}
