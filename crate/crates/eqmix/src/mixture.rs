//! The equispaced normal mixture model: k normal components with common
//! variance σ² whose means ν_j = α + β·δ_j sit on a fixed symmetric grid of
//! equispaced points δ_j in [−1, 1].
//!
//! With odd k the central component sits exactly at α, so α is the candidate
//! center of symmetry and the symmetry hypothesis is a pure statement about
//! the weights: π_j = π_{k−j+1}.

use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::specfun::LN_SQRT_2PI;
use serde::Serialize;

/// The fixed support grid δ_1 < … < δ_k, equispaced in [−1, 1] (δ_1 = 0 when
/// k = 1). Mirror symmetry δ_j = −δ_{k−j+1} holds bitwise by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquispacedGrid {
    k: usize,
    deltas: Vec<f64>,
}

/// Builds the grid for an odd number of components.
pub fn make_grid(k: usize) -> Result<EquispacedGrid> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::Domain(format!(
            "number of components must be odd and positive, got {k}"
        )));
    }
    let half = (k - 1) / 2;
    let mut deltas = Vec::with_capacity(k);
    // Build the positive half and mirror it so δ_j + δ_{k−j+1} = 0 exactly.
    for m in (1..=half).rev() {
        deltas.push(-(2.0 * m as f64 / (k - 1) as f64));
    }
    deltas.push(0.0);
    for m in 1..=half {
        deltas.push(2.0 * m as f64 / (k - 1) as f64);
    }
    Ok(EquispacedGrid { k, deltas })
}

impl EquispacedGrid {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

/// Full parameter vector of an equispaced normal mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureParams {
    pub grid: EquispacedGrid,
    /// Location of the central component (the candidate center of symmetry).
    pub alpha: f64,
    /// Nonnegative spread of the support points around α.
    pub beta: f64,
    /// Common component variance.
    pub sigma2: f64,
    /// Mixing weights π_1 … π_k, nonnegative and summing to 1.
    pub weights: Vec<f64>,
}

impl MixtureParams {
    pub fn new(
        grid: EquispacedGrid,
        alpha: f64,
        beta: f64,
        sigma2: f64,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::Domain(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::Domain(format!(
                "sigma2 must be finite and positive, got {sigma2}"
            )));
        }
        if weights.len() != grid.k() {
            return Err(Error::Domain(format!(
                "expected {} weights, got {}",
                grid.k(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain(format!("weights must be nonnegative: {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights must sum to 1, got {sum}")));
        }
        Ok(MixtureParams {
            grid,
            alpha,
            beta,
            sigma2,
            weights,
        })
    }

    pub fn k(&self) -> usize {
        self.grid.k()
    }

    /// Component means ν_j = α + β·δ_j, nondecreasing in j.
    pub fn support_points(&self) -> Vec<f64> {
        self.grid
            .deltas()
            .iter()
            .map(|d| self.alpha + self.beta * d)
            .collect()
    }
}

/// Log of the mixture density ln f(x) = ln Σ_j π_j φ(x; ν_j, σ²), evaluated
/// with a max-shifted sum of exponentials.
pub fn log_density(x: f64, params: &MixtureParams) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("log_density requires finite x, got {x}")));
    }
    let inv_2s2 = 0.5 / params.sigma2;
    let mut best = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(params.k());
    for (w, d) in params.weights.iter().zip(params.grid.deltas()) {
        let nu = params.alpha + params.beta * d;
        let t = w.ln() - (x - nu) * (x - nu) * inv_2s2;
        if t > best {
            best = t;
        }
        terms.push(t);
    }
    if !best.is_finite() {
        return Err(Error::Numerical(format!(
            "density underflowed at x = {x} for all components"
        )));
    }
    let sum: f64 = terms.iter().map(|t| (t - best).exp()).sum();
    Ok(best + sum.ln() - LN_SQRT_2PI - 0.5 * params.sigma2.ln())
}

/// Sample log-likelihood Σ_i ln f(x_i).
pub fn log_likelihood(sample: &Sample, params: &MixtureParams) -> Result<f64> {
    let mut total = 0.0;
    for &x in sample.values() {
        total += log_density(x, params)?;
    }
    Ok(total)
}
