//! The mixture-based likelihood-ratio test of symmetry: compare the
//! unconstrained fit against the fit under the mirror-weight constraint
//! π_j = π_{k−j+1} and refer the deviance to χ² with ⌊k/2⌋ degrees of
//! freedom.

use crate::em::{fit_pair, EmOptions, FitResult, PairedFit};
use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::selection::{selection_rows, Criterion, SelectionTable};
use crate::specfun::{chi2_sf, Probability};
use serde::Serialize;

/// How k is determined before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMode {
    /// Select k by an information criterion over odd k ≤ k_max.
    ByCriterion { criterion: Criterion, k_max: usize },
    /// Test at a fixed odd k, bypassing selection.
    FixedK(usize),
}

/// How the tested k was chosen, echoed in the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChosenBy {
    Aic,
    Bic,
    FixedK,
}

impl From<Criterion> for ChosenBy {
    fn from(c: Criterion) -> Self {
        match c {
            Criterion::Aic => ChosenBy::Aic,
            Criterion::Bic => ChosenBy::Bic,
        }
    }
}

/// Outcome of the likelihood-ratio symmetry test.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryTestResult {
    pub chosen_k: usize,
    pub chosen_by: ChosenBy,
    /// dev = 2·(ℓ_unconstrained − ℓ_constrained), clamped to 0 when a hair
    /// negative from convergence slack.
    pub deviance: f64,
    /// ⌊chosen_k / 2⌋.
    pub df: u32,
    pub p_value: Probability,
    /// True iff chosen_k = 1: a single normal is symmetric by construction,
    /// so the null is accepted without a likelihood comparison.
    pub auto_accepted: bool,
    /// Some constrained weight sits on the simplex boundary (≈ 0), where the
    /// χ² reference is approximate.
    pub boundary: bool,
    pub unconstrained_fit: FitResult,
    pub constrained_fit: FitResult,
    /// The per-k table when k was selected by criterion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionTable>,
}

fn result_from_pair(
    pair: PairedFit,
    chosen_by: ChosenBy,
    selection: Option<SelectionTable>,
) -> Result<SymmetryTestResult> {
    let k = pair.unconstrained.params.k();
    if k == 1 {
        return Ok(SymmetryTestResult {
            chosen_k: 1,
            chosen_by,
            deviance: 0.0,
            df: 0,
            p_value: Probability::new(1.0)?,
            auto_accepted: true,
            boundary: false,
            unconstrained_fit: pair.unconstrained,
            constrained_fit: pair.constrained,
            selection,
        });
    }
    let mut deviance = 2.0 * (pair.unconstrained.loglik - pair.constrained.loglik);
    if deviance < -1e-6 {
        return Err(Error::Diagnostics(format!(
            "constrained fit exceeded the unconstrained log-likelihood by {:.3e} \
             (deviance {deviance:.3e}); increase restarts",
            pair.constrained.loglik - pair.unconstrained.loglik
        )));
    }
    if deviance < 0.0 {
        deviance = 0.0;
    }
    let df = (k / 2) as u32;
    let p_value = chi2_sf(deviance, df)?;
    let boundary = pair
        .constrained
        .params
        .weights
        .iter()
        .any(|w| *w <= 1e-12);
    Ok(SymmetryTestResult {
        chosen_k: k,
        chosen_by,
        deviance,
        df,
        p_value,
        auto_accepted: false,
        boundary,
        unconstrained_fit: pair.unconstrained,
        constrained_fit: pair.constrained,
        selection,
    })
}

/// Replays the test from an already-fitted selection table under either
/// criterion, without refitting. The result carries no table echo.
pub fn test_from_table(table: &SelectionTable, criterion: Criterion) -> Result<SymmetryTestResult> {
    let k = table.chosen_for(criterion)?;
    let pair = table
        .row_for(k)
        .expect("chosen k is always one of the fitted rows")
        .fits
        .clone();
    result_from_pair(pair, criterion.into(), None)
}

/// Runs the likelihood-ratio symmetry test, selecting k first when asked.
pub fn mixture_symmetry_test(
    sample: &Sample,
    mode: TestMode,
    options: &EmOptions,
) -> Result<SymmetryTestResult> {
    match mode {
        TestMode::FixedK(k) => {
            let pair = fit_pair(sample, k, options)?;
            result_from_pair(pair, ChosenBy::FixedK, None)
        }
        TestMode::ByCriterion { criterion, k_max } => {
            let rows = selection_rows(sample, k_max, options)?;
            let mut table = SelectionTable {
                rows,
                chosen_k: 0,
                criterion,
            };
            table.chosen_k = table.chosen_for(criterion)?;
            let mut result = test_from_table(&table, criterion)?;
            result.selection = Some(table);
            Ok(result)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{draw_sample, RandomStream, SimDistribution};

    fn options() -> EmOptions {
        EmOptions::default()
    }

    #[test]
    fn fixed_k1_auto_accepts() {
        let s = draw_sample(&SimDistribution::ChiSq1, 50, RandomStream::new(1, 0)).unwrap();
        let r = mixture_symmetry_test(&s, TestMode::FixedK(1), &options()).unwrap();
        assert!(r.auto_accepted);
        assert_eq!(r.chosen_k, 1);
        assert_eq!(r.deviance, 0.0);
        assert_eq!(r.df, 0);
        assert_eq!(r.p_value.value(), 1.0);
        assert_eq!(r.chosen_by, ChosenBy::FixedK);
    }

    #[test]
    fn selected_k1_auto_accepts() {
        let s = draw_sample(&SimDistribution::StdNormal, 80, RandomStream::new(2, 0)).unwrap();
        let r = mixture_symmetry_test(
            &s,
            TestMode::ByCriterion {
                criterion: Criterion::Bic,
                k_max: 7,
            },
            &options(),
        )
        .unwrap();
        assert_eq!(r.chosen_k, 1);
        assert!(r.auto_accepted);
        assert_eq!(r.chosen_by, ChosenBy::Bic);
        assert!(r.selection.is_some());
    }

    #[test]
    fn df_is_floor_of_half_k() {
        let s = draw_sample(&SimDistribution::ChiSq1, 120, RandomStream::new(3, 0)).unwrap();
        for (k, df) in [(3usize, 1u32), (5, 2), (7, 3)] {
            let r = mixture_symmetry_test(&s, TestMode::FixedK(k), &options()).unwrap();
            assert_eq!(r.df, df);
            assert!(r.deviance >= 0.0);
            // p must agree with the survival function at the deviance.
            let p = chi2_sf(r.deviance, df).unwrap().value();
            assert_eq!(r.p_value.value(), p);
        }
    }

    #[test]
    fn skewed_data_rejects_symmetric_data_accepts() {
        let skewed =
            draw_sample(&SimDistribution::LogNormal01, 100, RandomStream::new(4, 0)).unwrap();
        let r = mixture_symmetry_test(
            &skewed,
            TestMode::ByCriterion {
                criterion: Criterion::Bic,
                k_max: 7,
            },
            &options(),
        )
        .unwrap();
        assert!(r.chosen_k > 1);
        assert!(r.p_value.value() < 0.01, "p = {}", r.p_value.value());

        let symmetric =
            draw_sample(&SimDistribution::StdNormal, 100, RandomStream::new(5, 0)).unwrap();
        let r = mixture_symmetry_test(
            &symmetric,
            TestMode::ByCriterion {
                criterion: Criterion::Bic,
                k_max: 7,
            },
            &options(),
        )
        .unwrap();
        assert!(r.p_value.value() > 0.10, "p = {}", r.p_value.value());
    }

    #[test]
    fn exactly_symmetric_data_has_tiny_deviance() {
        let base = draw_sample(&SimDistribution::StdNormal, 40, RandomStream::new(6, 0)).unwrap();
        let mut values = base.values().to_vec();
        values.extend(base.values().iter().map(|x| 1.0 - x));
        let s = Sample::new(values).unwrap();
        let r = mixture_symmetry_test(&s, TestMode::FixedK(3), &options()).unwrap();
        assert!(r.deviance >= 0.0);
        assert!(r.deviance < 1e-4, "deviance {}", r.deviance);
        assert!(r.p_value.value() > 0.99);
    }

    #[test]
    fn result_is_affine_invariant() {
        // Fixed iteration budget: the stopping rule depends on |loglik|,
        // which shifts under an affine map (see the equivariance test notes).
        let s = draw_sample(&SimDistribution::ChiSq5, 90, RandomStream::new(7, 0)).unwrap();
        let mapped = Sample::new(s.values().iter().map(|x| 0.4 * x + 11.0).collect()).unwrap();
        let opts = EmOptions {
            tol: 0.0,
            max_iterations: 80,
            random_restarts: 3,
            ..EmOptions::default()
        };
        let mode = TestMode::ByCriterion {
            criterion: Criterion::Aic,
            k_max: 5,
        };
        let a = mixture_symmetry_test(&s, mode, &opts).unwrap();
        let b = mixture_symmetry_test(&mapped, mode, &opts).unwrap();
        assert_eq!(a.chosen_k, b.chosen_k);
        assert_eq!(a.df, b.df);
        assert!((a.deviance - b.deviance).abs() < 1e-6);
        assert!((a.p_value.value() - b.p_value.value()).abs() < 1e-6);
    }

    #[test]
    fn fixed_k_requires_odd_k() {
        let s = draw_sample(&SimDistribution::StdNormal, 30, RandomStream::new(8, 0)).unwrap();
        assert!(mixture_symmetry_test(&s, TestMode::FixedK(2), &options()).is_err());
    }

    #[test]
    fn no_negative_deviance_across_assorted_fits() {
        let mut worst = f64::INFINITY;
        for (i, dist) in [
            SimDistribution::StdNormal,
            SimDistribution::Laplace,
            SimDistribution::ChiSq1,
            SimDistribution::LogNormal01,
            SimDistribution::StudentT5,
        ]
        .into_iter()
        .enumerate()
        {
            for n in [25usize, 60] {
                let s = draw_sample(&dist, n, RandomStream::new(100 + i as u64, 0)).unwrap();
                for k in [3usize, 5] {
                    let r = mixture_symmetry_test(&s, TestMode::FixedK(k), &options()).unwrap();
                    worst = worst.min(r.deviance);
                }
            }
        }
        assert!(worst >= 0.0, "negative deviance survived: {worst}");
    }
}
