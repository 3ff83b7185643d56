//! GLR stopping rule and recommendation.

use serde::{Deserialize, Serialize};

use crate::divergence::{best_response_unchecked, correct_grid};
use crate::error::{domain, Result};
use crate::problems::{AnswerPoint, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub delta: f64,
    pub k: usize,
    #[serde(default)]
    pub c_tilde: f64,
}

impl ThresholdParams {
    pub fn new(delta: f64, k: usize, c_tilde: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta must lie in (0, 1), got {delta}"));
        }
        if !(c_tilde.is_finite() && c_tilde >= 0.0) {
            return domain(format!("c_tilde must be >= 0, got {c_tilde}"));
        }
        if k == 0 {
            return domain("threshold needs at least one arm");
        }
        Ok(Self { delta, k, c_tilde })
    }
}

/// `β(t, δ) = ln(1/δ) + K ln(4 ln(1/δ) + 1) + 6K ln(ln t + 3) + K C̃`.
pub fn threshold(params: &ThresholdParams, t: u64) -> f64 {
    let k = params.k as f64;
    let l = (1.0 / params.delta).ln();
    let t = (t.max(1)) as f64;
    l + k * (4.0 * l + 1.0).ln() + 6.0 * k * (t.ln() + 3.0).ln() + k * params.c_tilde
}

/// `max_{x ∈ X*(μ̂)} D(μ̂, N, ¬x)` over the answer grid, with raw counts as
/// weights. Ties resolve to the lexicographically first answer.
pub fn glr_stat(
    problem: &Problem,
    mu_hat: &[f64],
    counts: &[f64],
    grid: &[AnswerPoint],
) -> Result<(f64, AnswerPoint)> {
    if counts.len() != problem.arms() || mu_hat.len() != problem.arms() {
        return domain("counts and means must have one entry per arm");
    }
    if !problem.model_box.contains(mu_hat) {
        return domain("empirical means must be clamped into the model box");
    }
    let candidates = correct_grid(problem, mu_hat, grid);
    let mut best: Option<(f64, AnswerPoint)> = None;
    for x in candidates {
        let v = best_response_unchecked(problem, mu_hat, counts, std::slice::from_ref(&x))?.0;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, x));
        }
    }
    best.ok_or_else(|| crate::error::Error::Domain("empty answer grid".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    Continue,
    Stop(AnswerPoint),
}

pub fn decide(stat: f64, argmax: &[f64], threshold_value: f64) -> Decision {
    if stat > threshold_value {
        Decision::Stop(argmax.to_vec())
    } else {
        Decision::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::FamilySpec;
    use crate::problems::{answer_grid, ModelBox};
    use proptest::prelude::*;

    fn gauss() -> FamilySpec {
        FamilySpec::gaussian(1.0, -1.0, 2.0).unwrap()
    }

    #[test]
    fn threshold_value() {
        // Term by term: 2.302585 + 2 ln 10.21034 + 12 ln(ln 10 + 3).
        let p = ThresholdParams::new(0.1, 2, 0.0).unwrap();
        let b = threshold(&p, 10);
        assert!((b - 26.967_72).abs() < 1e-4, "{b}");
        let expected = 10f64.ln() + 2.0 * (4.0 * 10f64.ln() + 1.0).ln() + 12.0 * (10f64.ln() + 3.0).ln();
        assert!((b - expected).abs() < 1e-12);
    }

    #[test]
    fn threshold_monotonicity() {
        let a = ThresholdParams::new(0.01, 2, 0.0).unwrap();
        let b = ThresholdParams::new(0.1, 2, 0.0).unwrap();
        assert!(threshold(&a, 10) > threshold(&b, 10));
        assert!(threshold(&b, 10) <= threshold(&b, 11));
        let c = ThresholdParams::new(0.1, 2, 1.5).unwrap();
        assert!((threshold(&c, 10) - threshold(&b, 10) - 3.0).abs() < 1e-12);
        assert!(ThresholdParams::new(1.0, 2, 0.0).is_err());
    }

    #[test]
    fn glr_examples() {
        let p = Problem::identity_regression(
            gauss(),
            ModelBox::new(vec![0.0], vec![1.0]).unwrap(),
            0.1,
        )
        .unwrap();
        let grid = answer_grid(p.answer_space(), 0.01).unwrap();
        let (s, x) = glr_stat(&p, &[0.5], &[1000.0], &grid).unwrap();
        assert!((s - 5.0).abs() < 1e-9);
        assert!((x[0] - 0.5).abs() < 1e-12);

        let bai = Problem::best_arm(gauss(), ModelBox::new(vec![-1.0; 2], vec![2.0; 2]).unwrap())
            .unwrap();
        let grid = answer_grid(bai.answer_space(), 0.01).unwrap();
        let (s, x) = glr_stat(&bai, &[1.0, 0.0], &[100.0, 100.0], &grid).unwrap();
        assert!((s - 25.0).abs() < 1e-9, "{s}");
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(5.0, &[0.5], 26.99), Decision::Continue);
        assert_eq!(decide(27.0, &[0.5], 26.99), Decision::Stop(vec![0.5]));
        assert_eq!(decide(26.99, &[0.5], 26.99), Decision::Continue);
    }

    proptest! {
        #[test]
        fn glr_is_homogeneous_in_counts(
            m1 in -0.5f64..1.5, m2 in -0.5f64..1.5,
            n1 in 1.0f64..500.0, n2 in 1.0f64..500.0,
        ) {
            let bai = Problem::best_arm(
                gauss(),
                ModelBox::new(vec![-1.0; 2], vec![2.0; 2]).unwrap(),
            ).unwrap();
            let grid = answer_grid(bai.answer_space(), 0.01).unwrap();
            let (a, _) = glr_stat(&bai, &[m1, m2], &[n1, n2], &grid).unwrap();
            let (b, _) = glr_stat(&bai, &[m1, m2], &[2.0 * n1, 2.0 * n2], &grid).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((b - 2.0 * a).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}
