//! Choice of the number of mixture components k by AIC or BIC over the odd
//! grid 1, 3, …, k_max.

use crate::em::{fit_pair, EmOptions, PairedFit};
use crate::error::{Error, Result};
use crate::sample::Sample;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Information criterion used to pick k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::Config(format!(
                "unknown criterion '{other}'; valid values: aic, bic"
            ))),
        }
    }
}

/// AIC and BIC for a fit with log-likelihood `loglik` and `npar` free
/// parameters on n observations: (−2ℓ + 2·npar, −2ℓ + npar·ln n).
pub fn information_criteria(loglik: f64, npar: usize, n: usize) -> (f64, f64) {
    let neg2 = -2.0 * loglik;
    let p = npar as f64;
    (neg2 + 2.0 * p, neg2 + p * (n as f64).ln())
}

/// One candidate k with its paired fits.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionRow {
    pub k: usize,
    #[serde(flatten)]
    pub fits: PairedFit,
}

impl SelectionRow {
    /// Criterion value of the unconstrained fit (the maintained hypothesis
    /// drives selection).
    fn score(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Aic => self.fits.unconstrained.aic,
            Criterion::Bic => self.fits.unconstrained.bic,
        }
    }

    /// σ²-floored fits are excluded from the argmin.
    fn eligible(&self) -> bool {
        !self.fits.unconstrained.sigma2_floored
    }
}

/// Fits for every candidate k plus the selected one.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionTable {
    pub rows: Vec<SelectionRow>,
    pub chosen_k: usize,
    pub criterion: Criterion,
}

impl SelectionTable {
    /// Replays the argmin under either criterion without refitting. Ties are
    /// broken toward the smaller k.
    pub fn chosen_for(&self, criterion: Criterion) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for row in &self.rows {
            if !row.eligible() {
                continue;
            }
            let score = row.score(criterion);
            if best.map_or(true, |(_, s)| score < s) {
                best = Some((row.k, score));
            }
        }
        best.map(|(k, _)| k).ok_or_else(|| {
            Error::Selection("every candidate fit hit the variance floor".into())
        })
    }

    pub fn row_for(&self, k: usize) -> Option<&SelectionRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

/// Fits every odd k up to `k_max` (paired, so the symmetry test can reuse the
/// table) without committing to a criterion.
pub fn selection_rows(sample: &Sample, k_max: usize, options: &EmOptions) -> Result<Vec<SelectionRow>> {
    if k_max == 0 || k_max % 2 == 0 {
        return Err(Error::Domain(format!("k_max must be odd and positive, got {k_max}")));
    }
    let mut rows = Vec::with_capacity(k_max / 2 + 1);
    for k in (1..=k_max).step_by(2) {
        rows.push(SelectionRow {
            k,
            fits: fit_pair(sample, k, options)?,
        });
    }
    Ok(rows)
}

/// Selects k by the given criterion over the unconstrained fits.
pub fn select_k(
    sample: &Sample,
    criterion: Criterion,
    k_max: usize,
    options: &EmOptions,
) -> Result<SelectionTable> {
    let rows = selection_rows(sample, k_max, options)?;
    let mut table = SelectionTable {
        rows,
        chosen_k: 0,
        criterion,
    };
    table.chosen_k = table.chosen_for(criterion)?;
    Ok(table)
}
