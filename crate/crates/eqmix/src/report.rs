//! Analysis-report assembly: input digest, fitted-density grids, and the
//! versioned JSON document the CLI emits.

use std::io::Write;

use serde::Serialize;

use crate::em::FitResult;
use crate::error::{Error, Result};
use crate::gupta::GuptaResult;
use crate::mixture::log_density;
use crate::sample::Sample;
use crate::selection::SelectionTable;
use crate::symmetry::SymmetryTestResult;

/// Report schema identifier embedded in the JSON output.
pub const REPORT_SCHEMA: &str = "eqmix-analysis-report/v1";

/// Summary statistics of the ingested sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl InputDigest {
    pub fn from_sample(sample: &Sample) -> Self {
        InputDigest {
            n: sample.len(),
            min: sample.min(),
            max: sample.max(),
            mean: sample.mean(),
            median: sample.median(),
        }
    }
}

/// Fitted densities evaluated on a shared abscissa grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub x: Vec<f64>,
    pub density_unconstrained: Vec<f64>,
    pub density_constrained: Vec<f64>,
}

/// Everything one `test` invocation produces, serialized as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    /// Schema identifier, [`REPORT_SCHEMA`].
    pub schema: String,
    /// Version of the tool that wrote the report.
    pub tool_version: String,
    /// RNG pedigree, [`GENERATOR_ID`].
    pub generator: String,
    /// Digest of the parsed input.
    pub input: InputDigest,
    /// Resolved configuration (flags merged over any config file).
    pub config: serde_json::Value,
    /// Model-order candidates, when a mixture test ran in selection mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionTable>,
    /// One mixture test result per requested mode.
    pub mixture_tests: Vec<SymmetryTestResult>,
    /// Moment-test result, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gupta: Option<GuptaResult>,
    /// Fitted densities for plotting, when a mixture test ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_grid: Option<DensityGrid>,
}

impl AnalysisReport {
    /// The report as pretty-printed JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Default abscissa span: the sample range padded by two fitted standard
/// deviations on each side.
pub fn default_grid_range(sample: &Sample, fit: &FitResult) -> (f64, f64) {
    let sd = fit.params.sigma2.sqrt();
    (sample.min() - 2.0 * sd, sample.max() + 2.0 * sd)
}

/// Evaluates the fitted density on `n_points` equally spaced abscissae
/// spanning `range`, returning (x, f̂(x)) pairs.
pub fn emit_density_grid(
    fit: &FitResult,
    n_points: usize,
    range: (f64, f64),
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = range;
    if n_points < 2 {
        return Err(Error::Config(format!(
            "density grid needs at least 2 points, got {n_points}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Config(format!(
            "density grid range must be finite with lo < hi, got ({lo}, {hi})"
        )));
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    let mut grid = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let x = if i + 1 == n_points { hi } else { lo + i as f64 * step };
        grid.push((x, log_density(x, &fit.params)?.exp()));
    }
    Ok(grid)
}

/// Evaluates both fits of a pair on one shared default-range grid.
pub fn density_grid(
    sample: &Sample,
    unconstrained: &FitResult,
    constrained: &FitResult,
    n_points: usize,
) -> Result<DensityGrid> {
    let range = default_grid_range(sample, unconstrained);
    let free = emit_density_grid(unconstrained, n_points, range)?;
    let tied = emit_density_grid(constrained, n_points, range)?;
    Ok(DensityGrid {
        x: free.iter().map(|(x, _)| *x).collect(),
        density_unconstrained: free.into_iter().map(|(_, f)| f).collect(),
        density_constrained: tied.into_iter().map(|(_, f)| f).collect(),
    })
}

/// Writes the grid as CSV with the canonical three-column header.
pub fn write_density_csv<W: Write>(grid: &DensityGrid, mut out: W) -> Result<()> {
    writeln!(out, "x,density_unconstrained,density_constrained")?;
    for i in 0..grid.x.len() {
        writeln!(
            out,
            "{},{},{}",
            crate::dataio::format_value(grid.x[i]),
            crate::dataio::format_value(grid.density_unconstrained[i]),
            crate::dataio::format_value(grid.density_constrained[i]),
        )?;
    }
    Ok(())
}
