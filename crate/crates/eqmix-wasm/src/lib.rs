//! Browser bindings for the mixture-based symmetry test.
//!
//! Three operations are exported, all speaking JSON strings so the page
//! needs no generated TypeScript glue:
//!
//! * [`analyze`] — fit the equispaced-mixture models to pasted data and run
//!   the deviance and moment tests, returning results plus a plot-ready
//!   density grid;
//! * [`simulate`] — draw a reproducible sample from one of the named
//!   distributions, for experimenting without data at hand;
//! * [`distributions`] — enumerate the valid distribution tags.
//!
//! The `*_json` functions carry the actual logic and compile (and are
//! tested) on any target; the thin `#[wasm_bindgen]` wrappers only convert
//! errors for JavaScript.

use eqmix::dataio::parse_data_str;
use eqmix::{
    density_grid, gupta_test, mixture_symmetry_test, Criterion, DataFormat, EmOptions, InputDigest,
    RandomStream, Result, Sample, SimDistribution, SymmetryTestResult, TestMode, DEFAULT_SEED,
};
use serde::Deserialize;
use serde_json::json;
use std::str::FromStr;
use wasm_bindgen::prelude::*;

/// Options accepted by [`analyze_json`], all optional in the JSON text.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "snake_case")]
pub struct AnalyzeConfig {
    /// "aic" or "bic"; absent means run both (BIC drives the density grid).
    pub criterion: Option<Criterion>,
    /// Fixed odd order, bypassing selection; mutually exclusive with
    /// `criterion`.
    pub k: Option<usize>,
    /// Largest candidate order when selecting, odd.
    pub k_max: usize,
    /// Seed for the EM restart draws.
    pub seed: u64,
    /// Random restarts per fit, beyond the deterministic start.
    pub restarts: usize,
    /// Also run the moment (b₁) test.
    pub gupta: bool,
    /// Abscissa count of the emitted density grid.
    pub grid_points: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            criterion: None,
            k: None,
            k_max: 7,
            seed: DEFAULT_SEED,
            restarts: 5,
            gupta: true,
            grid_points: 257,
        }
    }
}

fn config_error(message: String) -> eqmix::Error {
    eqmix::Error::Config(message)
}

/// Parses pasted numbers: whitespace-, comma-, or semicolon-separated.
fn parse_pasted(data: &str) -> Result<Sample> {
    let normalized: String = data
        .chars()
        .map(|c| if c == ',' || c == ';' { ' ' } else { c })
        .collect();
    parse_data_str(&normalized, &DataFormat::Whitespace)
}

/// Core of [`analyze`]: returns the report as a JSON string.
pub fn analyze_json(data: &str, config: &str) -> Result<String> {
    let cfg: AnalyzeConfig = if config.trim().is_empty() {
        AnalyzeConfig::default()
    } else {
        serde_json::from_str(config)
            .map_err(|e| config_error(format!("bad analyze options: {e}")))?
    };
    if cfg.k.is_some() && cfg.criterion.is_some() {
        return Err(config_error(
            "set either a fixed k or a selection criterion, not both".into(),
        ));
    }
    let sample = parse_pasted(data)?;
    let options = EmOptions {
        random_restarts: cfg.restarts,
        stream: RandomStream::new(cfg.seed, 0),
        ..EmOptions::default()
    };

    let mut tests: Vec<SymmetryTestResult> = Vec::new();
    if let Some(k) = cfg.k {
        tests.push(mixture_symmetry_test(&sample, TestMode::FixedK(k), &options)?);
    } else {
        let criteria = match cfg.criterion {
            Some(c) => vec![c],
            None => vec![Criterion::Aic, Criterion::Bic],
        };
        for criterion in criteria {
            tests.push(mixture_symmetry_test(
                &sample,
                TestMode::ByCriterion {
                    criterion,
                    k_max: cfg.k_max,
                },
                &options,
            )?);
        }
    }
    let primary = tests.last().expect("at least one test ran");
    let grid = density_grid(
        &sample,
        &primary.unconstrained_fit,
        &primary.constrained_fit,
        cfg.grid_points,
    )?;
    let gupta = if cfg.gupta {
        Some(gupta_test(&sample)?)
    } else {
        None
    };

    let report = json!({
        "input": InputDigest::from_sample(&sample),
        "mixture_tests": tests,
        "gupta": gupta,
        "density_grid": grid,
    });
    serde_json::to_string(&report).map_err(|e| config_error(format!("serialize: {e}")))
}

/// Core of [`simulate`]: draws `n` values from the tagged distribution.
pub fn simulate_json(dist: &str, n: usize, seed: u64) -> Result<String> {
    let dist = SimDistribution::from_str(dist)?;
    let sample = eqmix::draw_sample(&dist, n, RandomStream::new(seed, 0))?;
    let body = json!({
        "dist": dist.label(),
        "n": n,
        "seed": seed,
        "values": sample.values(),
    });
    serde_json::to_string(&body).map_err(|e| config_error(format!("serialize: {e}")))
}

/// Core of [`distributions`]: the valid tags with a symmetry marker each.
pub fn distributions_json() -> String {
    let entries: Vec<_> = SimDistribution::TAGS
        .iter()
        .map(|tag| {
            let dist = SimDistribution::from_str(tag).expect("listed tags parse");
            json!({ "tag": *tag, "symmetric": dist.is_symmetric() })
        })
        .collect();
    serde_json::to_string(&entries).expect("static list serializes")
}

#[wasm_bindgen]
pub fn analyze(data: &str, config: &str) -> std::result::Result<String, JsError> {
    analyze_json(data, config).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn simulate(dist: &str, n: usize, seed: u64) -> std::result::Result<String, JsError> {
    simulate_json(dist, n, seed).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn distributions() -> String {
    distributions_json()
}
