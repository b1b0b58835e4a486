//! Ready-made example models.
//!
//! The observation matrices of [`ex1`], [`ex2`] and [`reversed_factor`] are the
//! standard literature examples. Every model here is completed with the same
//! artifact choices: the birth–death transition matrix from
//! [`birth_death`], the rewards from [`default_rewards`] and discount
//! [`DEFAULT_DISCOUNT`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::model::{PomdpModel, Transition};
use crate::{Error, Result};

pub const DEFAULT_DISCOUNT: f64 = 0.9;

fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).expect("fixture rows are rectangular")
}

/// Tridiagonal chain that stays put with probability 0.8. For `X = 3` this is
/// `[[0.8, 0.2, 0], [0.1, 0.8, 0.1], [0, 0.2, 0.8]]`.
pub fn birth_death(x: usize) -> Matrix {
    let mut p = Matrix::zeros(x, x);
    if x == 1 {
        p[(0, 0)] = 1.0;
        return p;
    }
    for i in 0..x {
        p[(i, i)] = 0.8;
        if i == 0 {
            p[(0, 1)] = 0.2;
        } else if i == x - 1 {
            p[(i, i - 1)] = 0.2;
        } else {
            p[(i, i - 1)] = 0.1;
            p[(i, i + 1)] = 0.1;
        }
    }
    p
}

/// Increasing rewards for `U` actions: `r_0(i) = i + 1`, the last action gets
/// `r_top`, which starts at 0.8 with increments 1.4, 1.2, 1.0, … (floored at
/// 0.1), and action `u` interpolates `r_0 + u/(U − 1) (r_top − r_0)`. For `X = 3`, `U = 2` this gives
/// `[1, 2, 3]` and `[0.8, 2.2, 3.4]`.
pub fn default_rewards(x: usize, u: usize) -> Vec<Vec<f64>> {
    let r0: Vec<f64> = (0..x).map(|i| (i + 1) as f64).collect();
    // tenths, so that the published decimals come out exact
    let mut r1 = Vec::with_capacity(x);
    let mut acc: i64 = 8;
    for i in 0..x {
        if i > 0 {
            acc += i64::max(14 - 2 * (i as i64 - 1), 1);
        }
        r1.push(acc as f64 / 10.0);
    }
    let span = u.saturating_sub(1).max(1) as f64;
    (0..u)
        .map(|a| {
            let t = a as f64 / span;
            r0.iter().zip(&r1).map(|(z, o)| (1.0 - t) * z + t * o).collect()
        })
        .collect()
}

fn complete(name: &str, observation: Vec<Matrix>) -> PomdpModel {
    let x = observation[0].rows();
    let y = observation[0].cols();
    let u = observation.len();
    PomdpModel {
        name: String::from(name),
        num_states: x,
        num_obs: y,
        num_actions: u,
        discount: DEFAULT_DISCOUNT,
        transition: Transition::Shared(birth_death(x)),
        observation,
        reward: default_rewards(x, u),
    }
}

fn normalized_rows(mut b: Matrix) -> Matrix {
    for i in 0..b.rows() {
        let s: f64 = b.row(i).iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            b.row_mut(i).iter_mut().for_each(|v| *v /= s);
        }
    }
    b
}

pub fn ex1_observations() -> [Matrix; 2] {
    [
        m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]),
        m(&[&[0.9, 0.1, 0.0], &[0.2, 0.7, 0.1], &[0.0, 0.2, 0.8]]),
    ]
}

/// The published `B(0)` has a last row summing to 0.99999; that row is
/// rescaled to sum to one, which preserves every likelihood ratio.
pub fn ex2_observations() -> [Matrix; 2] {
    [
        normalized_rows(m(&[
            &[0.44847, 0.30706, 0.24447],
            &[0.33443, 0.28762, 0.37795],
            &[0.32463, 0.28971, 0.38565],
        ])),
        m(&[
            &[0.170021, 0.410485, 0.419494],
            &[0.106500, 0.433559, 0.459941],
            &[0.020739, 0.263223, 0.716038],
        ]),
    ]
}

/// `B(0) = M B(1)` for a stochastic `M`, yet no stochastic `L` has
/// `B(0) = B(1) L`.
pub fn reversed_factor_observations() -> [Matrix; 2] {
    [
        m(&[
            &[0.3229, 0.4703, 0.2068],
            &[0.2237, 0.4902, 0.2861],
            &[0.1587, 0.4620, 0.3793],
        ]),
        m(&[
            &[0.4387, 0.5190, 0.0423],
            &[0.2455, 0.6625, 0.0920],
            &[0.0615, 0.2829, 0.6556],
        ]),
    ]
}

pub fn ex1() -> PomdpModel {
    complete("ex1", ex1_observations().into())
}

pub fn ex2() -> PomdpModel {
    complete("ex2", ex2_observations().into())
}

pub fn reversed_factor() -> PomdpModel {
    complete("reversed_factor", reversed_factor_observations().into())
}

/// Confusion matrix used by the default hierarchical models.
pub fn default_confusion() -> Matrix {
    m(&[&[0.9, 0.1, 0.0], &[0.05, 0.9, 0.05], &[0.0, 0.1, 0.9]])
}

/// Hierarchical sensing: polling level `l` of the network gives
/// `B(U − 1 − l) = M^l B_base`, so the last action observes the source directly.
pub fn hierarchical(confusion: &Matrix, base: &Matrix, levels: usize) -> Result<PomdpModel> {
    if levels == 0 {
        return Err(Error::InvalidParameter("at least one level is needed".into()));
    }
    if !confusion.is_square() || confusion.cols() != base.rows() {
        return Err(Error::Dimension(format!(
            "confusion {}x{} does not fit a base with {} states",
            confusion.rows(),
            confusion.cols(),
            base.rows()
        )));
    }
    if !confusion.is_row_stochastic(crate::model::STOCHASTIC_TOL) {
        return Err(Error::InvalidParameter("confusion matrix is not stochastic".into()));
    }
    let mut observation = Vec::with_capacity(levels);
    for l in (0..levels).rev() {
        observation.push(confusion.pow(l as u32)?.matmul(base)?);
    }
    complete("hierarchical", observation).checked()
}

/// Two hierarchical networks over the same source: the second one's
/// confusion is `M L`, so each of its levels is noisier. Returns
/// `(strong, weak)` with `U = 2`.
pub fn hierarchical_pair() -> (PomdpModel, PomdpModel) {
    let confusion = default_confusion();
    let garble = birth_death(3);
    let base = ex1_observations()[0].clone();
    let mut strong = hierarchical(&confusion, &base, 2).expect("valid fixture");
    strong.name = "hierarchical_strong".into();
    let noisier = confusion.matmul(&garble).expect("3x3");
    let mut weak = hierarchical(&noisier, &base, 2).expect("valid fixture");
    weak.name = "hierarchical_weak".into();
    (strong, weak)
}

/// Tridiagonal sensors: sensor 0 is accurate (`p`) in the interior, sensor 1
/// is accurate (`q_b`) at the two boundary states.
pub fn tridiagonal(x: usize, p: f64, q: f64, q_b: f64) -> Result<PomdpModel> {
    if x < 2 {
        return Err(Error::InvalidParameter(format!("need X >= 2, got {x}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if !(q >= 0.0 && q <= (1.0 + p) / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "q = {q} outside [0, (1 + p)/2 = {}]",
            (1.0 + p) / 2.0
        )));
    }
    if !(q_b > p && q_b <= 1.0) {
        return Err(Error::InvalidParameter(format!("q_b = {q_b} must lie in (p, 1]")));
    }
    let mut b0 = Matrix::zeros(x, x);
    let mut b1 = Matrix::zeros(x, x);
    for i in 1..x - 1 {
        b0[(i, i)] = p;
        b0[(i, i - 1)] = (1.0 - p) / 2.0;
        b0[(i, i + 1)] = (1.0 - p) / 2.0;
        b1[(i, i)] = q;
        b1[(i, i + 1)] = (1.0 - p) / 2.0;
        b1[(i, i - 1)] = (1.0 + p) / 2.0 - q;
    }
    for (b, acc) in [(&mut b0, p), (&mut b1, q_b)] {
        b[(0, 0)] = acc;
        b[(0, 1)] = 1.0 - acc;
        b[(x - 1, x - 1)] = acc;
        b[(x - 1, x - 2)] = 1.0 - acc;
    }
    complete("tridiagonal", alloc::vec![b0, b1]).checked()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;
    use crate::orders;

    #[test]
    fn bundled_models_validate() {
        for model in [ex1(), ex2(), reversed_factor(), hierarchical_pair().0, hierarchical_pair().1] {
            assert!(validate_model(&model).is_empty(), "{}", model.name);
        }
    }

    #[test]
    fn ex1_first_row() {
        assert_eq!(ex1().observation[0].row(0), &[0.8, 0.2, 0.0]);
    }

    #[test]
    fn fixture_transition_is_tp2() {
        for x in 1..8 {
            assert!(orders::is_tp2(&birth_death(x)).unwrap().holds, "X = {x}");
        }
        assert_eq!(
            birth_death(3),
            m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]])
        );
    }

    #[test]
    fn default_rewards_match_documented_values() {
        let r = default_rewards(3, 2);
        assert_eq!(r[0], [1.0, 2.0, 3.0]);
        assert!(crate::linalg::max_abs_diff(&r[1], &[0.8, 2.2, 3.4]) < 1e-15);
        for x in 1..12 {
            for v in default_rewards(x, 4) {
                assert!(v.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn hierarchical_identity_confusion_gives_equal_sensors() {
        let base = ex1_observations()[0].clone();
        let h = hierarchical(&Matrix::identity(3), &base, 3).unwrap();
        assert!(h.observation.iter().all(|b| *b == base));
    }

    #[test]
    fn hierarchical_levels_are_confusion_powers() {
        let c = default_confusion();
        let base = ex1_observations()[0].clone();
        let h = hierarchical(&c, &base, 3).unwrap();
        let two = c.matmul(&c).unwrap().matmul(&base).unwrap();
        assert!(h.observation[0].max_abs_diff(&two) < 1e-15);
        assert_eq!(h.observation[2], base);
    }

    #[test]
    fn tridiagonal_rows_are_stochastic() {
        let t = tridiagonal(4, 0.6, 0.7, 0.8).unwrap();
        let close = |a: &[f64], b: &[f64]| crate::linalg::max_abs_diff(a, b) < 1e-15;
        assert!(close(t.observation[1].row(1), &[0.1, 0.7, 0.2, 0.0]));
        assert!(close(t.observation[0].row(3), &[0.0, 0.0, 0.4, 0.6]));
        for x in 2..9 {
            assert!(tridiagonal(x, 0.5, 0.6, 0.9).is_ok());
        }
    }

    #[test]
    fn tridiagonal_rejects_bad_parameters() {
        assert!(tridiagonal(4, 0.6, 0.81, 0.9).is_err());
        assert!(tridiagonal(4, 0.6, 0.7, 0.5).is_err());
        assert!(tridiagonal(1, 0.6, 0.7, 0.8).is_err());
    }
}
