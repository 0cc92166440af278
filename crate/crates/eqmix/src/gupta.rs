//! The moment-based symmetry test: the sample third standardized moment b₁,
//! studentized by its estimated asymptotic variance under the null, referred
//! to the standard normal.

use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::specfun::{std_normal_sf, Probability};
use serde::Serialize;

/// Outcome of the b₁-based test, with the moment ingredients retained so the
/// whole computation is auditable.
#[derive(Debug, Clone, Serialize)]
pub struct GuptaResult {
    pub n: usize,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m6: f64,
    /// Sample third standardized moment b₁ = m₃ / m₂^{3/2}.
    pub b1: f64,
    /// Estimated variance of b₁ under the null:
    /// (m₆ − 6·m₂·m₄ + 9·m₂³) / (n·m₂³).
    pub sigma2_hat: f64,
    /// Studentized statistic S₁ = b₁ / σ̂. The 1/n inside σ̂² supplies the
    /// √n scaling, so S₁ = b₁·√(n·m₂³ / (m₆ − 6·m₂·m₄ + 9·m₂³)); under
    /// normality the variance term is 6·m₂³ and this reduces to √(n/6)·b₁.
    pub s1: f64,
    /// Two-sided p-value 2·P(Z > |S₁|).
    pub p_value: Probability,
}

/// Runs the b₁-based symmetry test.
///
/// The normal reference is asymptotic; it is only meaningful for moderate
/// samples (the simulation harness requires n ≥ 7), but any n ≥ 3 with
/// positive variance is accepted here.
pub fn gupta_test(sample: &Sample) -> Result<GuptaResult> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::Domain(format!(
            "the moment test needs at least 3 observations, got {n}"
        )));
    }
    let m2 = sample.central_moment(2);
    if m2 <= 0.0 {
        return Err(Error::DegenerateSample(
            "constant sample: second central moment is zero".into(),
        ));
    }
    let m3 = sample.central_moment(3);
    let m4 = sample.central_moment(4);
    let m6 = sample.central_moment(6);
    let b1 = m3 / m2.powf(1.5);
    let nf = n as f64;
    let sigma2_hat = (m6 - 6.0 * m2 * m4 + 9.0 * m2 * m2 * m2) / (nf * m2 * m2 * m2);
    if sigma2_hat <= 0.0 {
        return Err(Error::Numerical(format!(
            "estimated variance of b1 is not positive ({sigma2_hat}); \
             the sample moments are too degenerate for the normal reference"
        )));
    }
    // σ̂² estimates Var(b₁) and already carries the 1/n, so studentizing is
    // a plain ratio; multiplying by √n here again would inflate S₁ by √n
    // (e.g. rejecting N(0,1) samples at rate ≈ 0.85 instead of ≈ 0.05).
    let s1 = b1 / sigma2_hat.sqrt();
    let p_value = Probability::new_clamped(2.0 * std_normal_sf(s1.abs())?.value());
    Ok(GuptaResult {
        n,
        m2,
        m3,
        m4,
        m6,
        b1,
        sigma2_hat,
        s1,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_symmetric_sample_scores_zero() {
        // Every x paired with 2c − x around c = 1.
        let s = Sample::new(vec![-2.0, 4.0, 0.0, 2.0, -1.0, 3.0, 1.0]).unwrap();
        let r = gupta_test(&s).unwrap();
        assert_eq!(r.b1, 0.0);
        assert_eq!(r.s1, 0.0);
        assert_eq!(r.p_value.value(), 1.0);
    }

    #[test]
    fn toy_sample_matches_frozen_oracle() {
        // {1,2,3,4,10}: m2=10, m3=36, m4=278.8, m6=9490, so
        // sigma2_hat = (9490 − 6·10·278.8 + 9·1000)/(5·1000) = 0.3524 exactly.
        let s = Sample::new(vec![1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        let r = gupta_test(&s).unwrap();
        assert!((r.b1 - 1.138_419_957_660_616_559_5).abs() < 1e-14);
        assert!((r.sigma2_hat - 0.3524).abs() < 1e-14);
        assert!((r.s1 - 1.917_717_144_559_651_939).abs() < 1e-13);
        assert!((r.p_value.value() - 5.514_688_662_141_234e-2).abs() < 1e-13);
    }

    #[test]
    fn components_match_brute_force_evaluator() {
        // Independent term-by-term evaluation of the printed formulas.
        let s = Sample::new(vec![0.3, -1.2, 2.4, 0.0, 5.5, -0.7, 1.1, 0.9, -2.2, 3.3]).unwrap();
        let r = gupta_test(&s).unwrap();
        let xs = s.values();
        let n = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / n;
        let m = |p: i32| xs.iter().map(|x| (x - xbar).powi(p)).sum::<f64>() / n;
        let (m2, m3, m4, m6) = (m(2), m(3), m(4), m(6));
        let b1 = m3 / m2.powf(1.5);
        let sigma2 = (m6 - 6.0 * m2 * m4 + 9.0 * m2.powi(3)) / (n * m2.powi(3));
        let s1 = b1 * (n * m2.powi(3) / (m6 - 6.0 * m2 * m4 + 9.0 * m2.powi(3))).sqrt();
        assert!(((r.m2 - m2) / m2).abs() < 1e-12);
        assert!(((r.b1 - b1) / b1).abs() < 1e-12);
        assert!(((r.sigma2_hat - sigma2) / sigma2).abs() < 1e-12);
        assert!(((r.s1 - s1) / s1).abs() < 1e-12);
    }

    #[test]
    fn reflection_negates_b1_and_s1_exactly() {
        let s = Sample::new(vec![0.3, -1.2, 2.4, 0.0, 5.5, -0.7, 1.1, 0.9]).unwrap();
        let reflected = Sample::new(s.values().iter().map(|x| -x).collect()).unwrap();
        let a = gupta_test(&s).unwrap();
        let b = gupta_test(&reflected).unwrap();
        assert_eq!(a.b1, -b.b1);
        assert_eq!(a.s1, -b.s1);
        assert_eq!(a.p_value.value(), b.p_value.value());
    }

    #[test]
    fn degenerate_inputs_are_reported() {
        assert!(matches!(
            gupta_test(&Sample::new(vec![2.0; 9]).unwrap()),
            Err(Error::DegenerateSample(_))
        ));
        assert!(gupta_test(&Sample::new(vec![1.0, 2.0]).unwrap()).is_err());
        // Exactly one third of the mass at ±a (a² = 3·m₂) zeroes the variance
        // estimate: reported rather than clamped.
        let mut values = vec![0.0; 8];
        values.extend_from_slice(&[-1.0, -1.0, 1.0, 1.0]);
        let s = Sample::new(values).unwrap();
        assert!(matches!(gupta_test(&s), Err(Error::Numerical(_))));
    }

    #[test]
    fn skewed_sample_rejects() {
        // A strongly right-skewed sample should produce a small p-value.
        let values: Vec<f64> = (0..60).map(|i| ((i as f64) / 59.0).powi(4) * 10.0).collect();
        let r = gupta_test(&Sample::new(values).unwrap()).unwrap();
        assert!(r.b1 > 0.5);
        assert!(r.p_value.value() < 0.05);
    }
}
