//! Monte Carlo harness for the level/power study.
//!
//! A study draws `replicates` samples for every (distribution, n) cell, runs
//! the requested symmetry tests on each sample, and aggregates rejection
//! rates per nominal level together with how often each mixture order k was
//! selected. Replicate r of cell (d, n) owns the child stream with flat index
//! `(d·|sizes| + n)·replicates + r`, so results are independent of worker
//! count and identical runs are bitwise reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::em::EmOptions;
use crate::error::{Error, Result};
use crate::gupta::gupta_test;
use crate::rng::{draw_sample, RandomStream, SimDistribution, DEFAULT_SEED, GENERATOR_ID};
use crate::selection::{selection_rows, Criterion, SelectionTable};
use crate::symmetry::test_from_table;

/// Report schema identifier embedded in the JSON output.
pub const STUDY_SCHEMA: &str = "eqmix-study-report/v1";

/// Which test a study cell runs on each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Likelihood-ratio mixture test at the AIC-selected order.
    MixtureAic,
    /// Likelihood-ratio mixture test at the BIC-selected order.
    MixtureBic,
    /// Moment-based test on standardized skewness.
    Gupta,
}

impl TestKind {
    /// All kinds, in canonical output order.
    pub const ALL: [TestKind; 3] = [TestKind::MixtureAic, TestKind::MixtureBic, TestKind::Gupta];

    /// Stable label used in CSV and JSON output.
    pub fn label(&self) -> &'static str {
        match self {
            TestKind::MixtureAic => "mixture_aic",
            TestKind::MixtureBic => "mixture_bic",
            TestKind::Gupta => "gupta",
        }
    }

    /// The selection criterion driving this test, if it is a mixture test.
    fn criterion(&self) -> Option<Criterion> {
        match self {
            TestKind::MixtureAic => Some(Criterion::Aic),
            TestKind::MixtureBic => Some(Criterion::Bic),
            TestKind::Gupta => None,
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mixture_aic" => Ok(TestKind::MixtureAic),
            "mixture_bic" => Ok(TestKind::MixtureBic),
            "gupta" => Ok(TestKind::Gupta),
            other => Err(Error::Config(format!(
                "unknown test kind {other:?}; expected one of mixture-aic, mixture-bic, gupta"
            ))),
        }
    }
}

/// Full description of a simulation study.
#[derive(Debug, Clone, Serialize)]
pub struct StudySpec {
    /// Sampling distributions, one study cell per (distribution, n) pair.
    pub distributions: Vec<SimDistribution>,
    /// Sample sizes per distribution.
    pub sample_sizes: Vec<usize>,
    /// Replicates per cell.
    pub replicates: usize,
    /// Nominal test levels, each strictly inside (0, 1).
    pub levels: Vec<f64>,
    /// Tests evaluated on every replicate.
    pub tests: Vec<TestKind>,
    /// Master seed; every replicate derives its own child stream from it.
    pub master_seed: u64,
    /// Largest candidate mixture order (odd).
    pub k_max: usize,
    /// EM settings for the per-replicate fits. The embedded stream is
    /// ignored: each replicate re-keys the options with its own stream.
    pub em: EmOptions,
    /// Optional cap on worker threads; `None` uses all available cores.
    pub max_workers: Option<usize>,
}

impl Default for StudySpec {
    /// The full study: eight distributions, n ∈ {20, 50, 100}, 1000
    /// replicates, levels {0.01, 0.05, 0.10}, all three tests.
    fn default() -> Self {
        StudySpec {
            distributions: vec![
                SimDistribution::StdNormal,
                SimDistribution::StudentT5,
                SimDistribution::Laplace,
                SimDistribution::SymNm3(Default::default()),
                SimDistribution::ChiSq1,
                SimDistribution::ChiSq5,
                SimDistribution::ChiSq10,
                SimDistribution::LogNormal01,
            ],
            sample_sizes: vec![20, 50, 100],
            replicates: 1000,
            levels: vec![0.01, 0.05, 0.10],
            tests: TestKind::ALL.to_vec(),
            master_seed: DEFAULT_SEED,
            k_max: 7,
            em: study_em_options(),
            max_workers: None,
        }
    }
}

/// EM settings tuned for study throughput: fewer restarts and a tighter
/// iteration cap than the single-sample default, which at study scale trades
/// a negligible chance of a slightly sub-optimal restart winner for a large
/// constant factor in runtime.
pub fn study_em_options() -> EmOptions {
    EmOptions {
        max_iterations: 2000,
        random_restarts: 4,
        ..EmOptions::default()
    }
}

impl StudySpec {
    /// Checks the invariants assumed by [`run_study`].
    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() {
            return Err(Error::Config("study needs at least one distribution".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for dist in &self.distributions {
            if let SimDistribution::SymNm3(params) = dist {
                params.validated()?;
            }
            if !seen.insert(dist.label()) {
                return Err(Error::Config(format!(
                    "distribution {} listed more than once",
                    dist.label()
                )));
            }
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("study needs at least one sample size".into()));
        }
        let min_n = if self.tests.contains(&TestKind::Gupta) { 7 } else { 2 };
        for &n in &self.sample_sizes {
            if n < min_n {
                return Err(Error::Config(format!(
                    "sample size {n} is below the study minimum {min_n}"
                )));
            }
        }
        if self.replicates == 0 {
            return Err(Error::Config("study needs at least one replicate".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::Config("study needs at least one level".into()));
        }
        for &level in &self.levels {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::Config(format!(
                    "level {level} is outside the open interval (0, 1)"
                )));
            }
        }
        if self.tests.is_empty() {
            return Err(Error::Config("study needs at least one test".into()));
        }
        let mut seen_tests = std::collections::BTreeSet::new();
        for test in &self.tests {
            if !seen_tests.insert(*test) {
                return Err(Error::Config(format!("test {test} listed more than once")));
            }
        }
        if self.k_max == 0 || self.k_max % 2 == 0 {
            return Err(Error::Config(format!(
                "k_max must be odd and positive, got {}",
                self.k_max
            )));
        }
        if self.max_workers == Some(0) {
            return Err(Error::Config("max_workers must be at least 1".into()));
        }
        Ok(())
    }

    fn needs_mixture(&self) -> bool {
        self.tests.iter().any(|t| t.criterion().is_some())
    }

    /// Criteria with a requested mixture test, in canonical (AIC, BIC) order.
    fn mixture_criteria(&self) -> Vec<Criterion> {
        [Criterion::Aic, Criterion::Bic]
            .into_iter()
            .filter(|c| self.tests.iter().any(|t| t.criterion() == Some(*c)))
            .collect()
    }
}

/// One rejection-rate row: a (test, distribution, n, level) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    /// Test that produced the p-values.
    pub test: TestKind,
    /// Distribution label of the cell.
    pub distribution: String,
    /// Sample size of the cell.
    pub n: usize,
    /// Nominal level; rejection means p ≤ level.
    pub level: f64,
    /// Number of rejecting replicates.
    pub rejections: usize,
    /// Number of replicates that completed, the rate denominator.
    pub successes: usize,
    /// Empirical rejection rate.
    pub rate: f64,
    /// Binomial standard error √(r(1−r)/successes).
    pub std_error: f64,
}

/// Distribution of selected orders k for one (criterion, distribution, n) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KFrequencyEntry {
    /// Criterion that chose k on each replicate.
    pub criterion: Criterion,
    /// Distribution label of the cell.
    pub distribution: String,
    /// Sample size of the cell.
    pub n: usize,
    /// Percentage of replicates selecting k = 1.
    pub pct_k1: f64,
    /// Percentage of replicates selecting k = 3.
    pub pct_k3: f64,
    /// Percentage of replicates selecting k = 5.
    pub pct_k5: f64,
    /// Percentage of replicates selecting k > 5.
    pub pct_k_gt5: f64,
    /// Number of replicates behind the percentages.
    pub successes: usize,
}

/// Per-cell bookkeeping of completed and failed replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    /// Distribution label of the cell.
    pub distribution: String,
    /// Sample size of the cell.
    pub n: usize,
    /// Replicates attempted.
    pub replicates: usize,
    /// Replicates that errored and were excluded from every rate.
    pub failures: usize,
}

/// Aggregated output of [`run_study`].
#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    /// Schema identifier, [`STUDY_SCHEMA`].
    pub schema: String,
    /// RNG pedigree, [`GENERATOR_ID`].
    pub generator: String,
    /// The settings the study ran with, echoed for reproducibility.
    pub spec: StudySpec,
    /// One summary per (distribution, n) cell, in spec order.
    pub cells: Vec<CellSummary>,
    /// Rejection rates for every (test, distribution, n, level) cell.
    pub rejection_rates: Vec<RateEntry>,
    /// Selected-order distributions for every requested criterion and cell.
    pub k_frequencies: Vec<KFrequencyEntry>,
    /// Wall-clock runtime in seconds. Not part of any CSV output.
    pub wall_clock_seconds: f64,
}

/// Percentages of orders falling in the buckets k = 1, 3, 5 and k > 5.
///
/// Returns an error for an empty list or an even entry (candidate orders are
/// always odd).
pub fn k_frequency_table(ks: &[usize]) -> Result<[f64; 4]> {
    if ks.is_empty() {
        return Err(Error::Domain("k_frequency_table requires at least one k".into()));
    }
    let mut counts = [0usize; 4];
    for &k in ks {
        if k == 0 || k % 2 == 0 {
            return Err(Error::Domain(format!("selected orders must be odd, got {k}")));
        }
        let bucket = match k {
            1 => 0,
            3 => 1,
            5 => 2,
            _ => 3,
        };
        counts[bucket] += 1;
    }
    let total = ks.len() as f64;
    Ok([
        100.0 * counts[0] as f64 / total,
        100.0 * counts[1] as f64 / total,
        100.0 * counts[2] as f64 / total,
        100.0 * counts[3] as f64 / total,
    ])
}

/// What one replicate contributes to the aggregates.
#[derive(Debug, Clone, Default)]
struct ReplicateOutcome {
    /// (chosen k, p-value) per requested criterion, in canonical order.
    mixture: Vec<(Criterion, usize, f64)>,
    gupta_p: Option<f64>,
}

fn run_replicate(spec: &StudySpec, root: RandomStream, flat_index: u64, dist: &SimDistribution, n: usize) -> Result<ReplicateOutcome> {
    let stream = root.child(flat_index);
    let sample = draw_sample(dist, n, stream)?;
    let mut outcome = ReplicateOutcome::default();
    if spec.needs_mixture() {
        // The sample consumed `stream.rng()`; restarts re-key through
        // `stream.child(..)`, so reusing the same stream cannot collide.
        let options = EmOptions { stream, ..spec.em.clone() };
        let rows = selection_rows(&sample, spec.k_max, &options)?;
        let table = SelectionTable { rows, chosen_k: 0, criterion: Criterion::Aic };
        for criterion in spec.mixture_criteria() {
            let result = test_from_table(&table, criterion)?;
            outcome
                .mixture
                .push((criterion, result.chosen_k, result.p_value.value()));
        }
    }
    if spec.tests.contains(&TestKind::Gupta) {
        outcome.gupta_p = Some(gupta_test(&sample)?.p_value.value());
    }
    Ok(outcome)
}

/// Aborts once any cell loses more than 1% of its replicates.
fn failure_gate(
    distribution: &str,
    n: usize,
    failures: usize,
    replicates: usize,
    first_errors: &[String],
) -> Result<()> {
    if failures as f64 > 0.01 * replicates as f64 {
        return Err(Error::Diagnostics(format!(
            "cell ({distribution}, n={n}) lost {failures} of {replicates} replicates \
             (> 1%); first errors: {}",
            first_errors.join(" | ")
        )));
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn map_replicates<F>(total: u64, max_workers: Option<usize>, f: F) -> Vec<std::result::Result<ReplicateOutcome, String>>
where
    F: Fn(u64) -> std::result::Result<ReplicateOutcome, String> + Sync,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = max_workers {
        builder = builder.num_threads(workers);
    }
    let pool = builder.build().expect("worker pool construction cannot fail");
    pool.install(|| (0..total).into_par_iter().map(&f).collect())
}

#[cfg(not(feature = "parallel"))]
fn map_replicates<F>(total: u64, _max_workers: Option<usize>, f: F) -> Vec<std::result::Result<ReplicateOutcome, String>>
where
    F: Fn(u64) -> std::result::Result<ReplicateOutcome, String> + Sync,
{
    (0..total).map(f).collect()
}

/// Runs the whole study described by `spec`.
///
/// The output is deterministic given `spec.master_seed`: worker count and
/// scheduling never change a single aggregated number.
pub fn run_study(spec: &StudySpec) -> Result<StudyReport> {
    spec.validate()?;
    let started = Instant::now();
    let root = RandomStream::new(spec.master_seed, 0);
    let n_dists = spec.distributions.len() as u64;
    let n_sizes = spec.sample_sizes.len() as u64;
    let reps = spec.replicates as u64;
    let total = n_dists * n_sizes * reps;

    let outcomes = map_replicates(total, spec.max_workers, |flat| {
        let rep_cell = flat / reps;
        let di = (rep_cell / n_sizes) as usize;
        let ni = (rep_cell % n_sizes) as usize;
        run_replicate(
            spec,
            root,
            flat,
            &spec.distributions[di],
            spec.sample_sizes[ni],
        )
        .map_err(|e| e.to_string())
    });

    let criteria = spec.mixture_criteria();
    let mut cells = Vec::new();
    let mut rejection_rates = Vec::new();
    let mut k_frequencies = Vec::new();

    for (di, dist) in spec.distributions.iter().enumerate() {
        for (ni, &n) in spec.sample_sizes.iter().enumerate() {
            let base = ((di as u64) * n_sizes + ni as u64) * reps;
            let cell = &outcomes[base as usize..(base + reps) as usize];

            let mut first_errors = Vec::new();
            let mut successes = 0usize;
            let mut rejections: BTreeMap<(TestKind, usize), usize> = BTreeMap::new();
            let mut selected: BTreeMap<Criterion, Vec<usize>> = BTreeMap::new();
            for outcome in cell {
                match outcome {
                    Err(message) => {
                        if first_errors.len() < 5 {
                            first_errors.push(message.clone());
                        }
                    }
                    Ok(outcome) => {
                        successes += 1;
                        for test in &spec.tests {
                            let p = match test.criterion() {
                                Some(criterion) => {
                                    outcome
                                        .mixture
                                        .iter()
                                        .find(|(c, _, _)| *c == criterion)
                                        .expect("requested criterion is always computed")
                                        .2
                                }
                                None => outcome.gupta_p.expect("gupta requested implies gupta ran"),
                            };
                            for (li, &level) in spec.levels.iter().enumerate() {
                                if p <= level {
                                    *rejections.entry((*test, li)).or_insert(0) += 1;
                                }
                            }
                        }
                        for &(criterion, k, _) in &outcome.mixture {
                            selected.entry(criterion).or_default().push(k);
                        }
                    }
                }
            }

            let failures = spec.replicates - successes;
            failure_gate(dist.label(), n, failures, spec.replicates, &first_errors)?;
            cells.push(CellSummary {
                distribution: dist.label().to_string(),
                n,
                replicates: spec.replicates,
                failures,
            });

            for test in &spec.tests {
                for (li, &level) in spec.levels.iter().enumerate() {
                    let rejected = rejections.get(&(*test, li)).copied().unwrap_or(0);
                    let rate = rejected as f64 / successes as f64;
                    rejection_rates.push(RateEntry {
                        test: *test,
                        distribution: dist.label().to_string(),
                        n,
                        level,
                        rejections: rejected,
                        successes,
                        rate,
                        std_error: (rate * (1.0 - rate) / successes as f64).sqrt(),
                    });
                }
            }

            for &criterion in &criteria {
                let ks = selected.get(&criterion).map(Vec::as_slice).unwrap_or(&[]);
                let pct = k_frequency_table(ks)?;
                k_frequencies.push(KFrequencyEntry {
                    criterion,
                    distribution: dist.label().to_string(),
                    n,
                    pct_k1: pct[0],
                    pct_k3: pct[1],
                    pct_k5: pct[2],
                    pct_k_gt5: pct[3],
                    successes: ks.len(),
                });
            }
        }
    }

    Ok(StudyReport {
        schema: STUDY_SCHEMA.to_string(),
        generator: GENERATOR_ID.to_string(),
        spec: spec.clone(),
        cells,
        rejection_rates,
        k_frequencies,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

impl StudyReport {
    fn is_symmetric_label(&self, label: &str) -> bool {
        self.spec
            .distributions
            .iter()
            .find(|d| d.label() == label)
            .map(SimDistribution::is_symmetric)
            .unwrap_or(false)
    }

    fn rates_csv(&self, symmetric: bool) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for entry in &self.rejection_rates {
            if self.is_symmetric_label(&entry.distribution) == symmetric {
                writer.serialize(entry)?;
            }
        }
        finish_csv(writer)
    }

    fn k_csv(&self, symmetric: bool) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for entry in &self.k_frequencies {
            if self.is_symmetric_label(&entry.distribution) == symmetric {
                writer.serialize(entry)?;
            }
        }
        finish_csv(writer)
    }

    /// Rejection rates under symmetric distributions (empirical levels).
    pub fn levels_csv(&self) -> Result<String> {
        self.rates_csv(true)
    }

    /// Rejection rates under skewed distributions (empirical power).
    pub fn power_csv(&self) -> Result<String> {
        self.rates_csv(false)
    }

    /// Selected-order frequencies under symmetric distributions.
    pub fn k_frequencies_symmetric_csv(&self) -> Result<String> {
        self.k_csv(true)
    }

    /// Selected-order frequencies under skewed distributions.
    pub fn k_frequencies_skewed_csv(&self) -> Result<String> {
        self.k_csv(false)
    }

    /// The full report as pretty-printed JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the four CSV tables and the JSON report into `dir`, creating
    /// it if needed. Returns the paths written, in a fixed order.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let outputs: [(&str, String); 5] = [
            ("levels_symmetric.csv", self.levels_csv()?),
            ("power_skewed.csv", self.power_csv()?),
            ("k_frequencies_symmetric.csv", self.k_frequencies_symmetric_csv()?),
            ("k_frequencies_skewed.csv", self.k_frequencies_skewed_csv()?),
            ("report.json", self.to_json()?),
        ];
        let mut paths = Vec::new();
        for (name, contents) in outputs {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Numerical(format!("csv buffer flush failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is always utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SymNm3Params;

    fn tiny_spec() -> StudySpec {
        StudySpec {
            distributions: vec![SimDistribution::StdNormal, SimDistribution::ChiSq1],
            sample_sizes: vec![20],
            replicates: 8,
            levels: vec![0.05, 0.10],
            tests: TestKind::ALL.to_vec(),
            master_seed: 11,
            k_max: 3,
            em: EmOptions {
                max_iterations: 400,
                random_restarts: 1,
                ..EmOptions::default()
            },
            max_workers: Some(1),
        }
    }

    #[test]
    fn k_frequency_table_buckets_and_percentages() {
        let pct = k_frequency_table(&[1, 1, 3, 5, 7]).unwrap();
        assert_eq!(pct, [40.0, 20.0, 20.0, 20.0]);
        let pct = k_frequency_table(&[1, 1, 1]).unwrap();
        assert_eq!(pct, [100.0, 0.0, 0.0, 0.0]);
        let pct = k_frequency_table(&[9, 11]).unwrap();
        assert_eq!(pct, [0.0, 0.0, 0.0, 100.0]);
        assert!(k_frequency_table(&[]).is_err());
        assert!(k_frequency_table(&[1, 4]).is_err());
    }

    #[test]
    fn test_kind_labels_round_trip() {
        for kind in TestKind::ALL {
            assert_eq!(kind.label().parse::<TestKind>().unwrap(), kind);
        }
        assert_eq!("mixture-aic".parse::<TestKind>().unwrap(), TestKind::MixtureAic);
        assert_eq!("GUPTA".parse::<TestKind>().unwrap(), TestKind::Gupta);
        assert!("wilcoxon".parse::<TestKind>().is_err());
    }

    #[test]
    fn spec_validation_rejects_bad_configs() {
        let ok = tiny_spec();
        ok.validate().unwrap();

        let mut bad = tiny_spec();
        bad.distributions.clear();
        assert!(bad.validate().is_err());

        let mut bad = tiny_spec();
        bad.distributions.push(SimDistribution::StdNormal);
        assert!(bad.validate().is_err(), "duplicate distribution must be rejected");

        let mut bad = tiny_spec();
        bad.sample_sizes = vec![5];
        assert!(bad.validate().is_err(), "gupta requires n >= 7");
        bad.tests = vec![TestKind::MixtureAic];
        bad.validate().unwrap();

        let mut bad = tiny_spec();
        bad.levels = vec![0.0];
        assert!(bad.validate().is_err());
        bad.levels = vec![1.0];
        assert!(bad.validate().is_err());

        let mut bad = tiny_spec();
        bad.replicates = 0;
        assert!(bad.validate().is_err());

        let mut bad = tiny_spec();
        bad.k_max = 4;
        assert!(bad.validate().is_err());

        let mut bad = tiny_spec();
        bad.tests = vec![TestKind::Gupta, TestKind::Gupta];
        assert!(bad.validate().is_err());

        let mut bad = tiny_spec();
        bad.max_workers = Some(0);
        assert!(bad.validate().is_err());

        let mut bad = tiny_spec();
        bad.distributions = vec![SimDistribution::SymNm3(SymNm3Params {
            weights: [0.5, 0.5, 0.5],
            ..SymNm3Params::default()
        })];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn failure_gate_triggers_above_one_percent() {
        failure_gate("normal", 20, 0, 100, &[]).unwrap();
        failure_gate("normal", 20, 1, 100, &["boom".into()]).unwrap();
        let err = failure_gate("normal", 20, 2, 100, &["boom".into()]).unwrap_err();
        assert!(err.to_string().contains("normal"));
        assert!(err.to_string().contains("boom"));
    }

    #[test]
    fn smoke_study_has_consistent_shapes_and_rates() {
        let spec = tiny_spec();
        let report = run_study(&spec).unwrap();

        assert_eq!(report.schema, STUDY_SCHEMA);
        assert_eq!(report.generator, GENERATOR_ID);
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            assert_eq!(cell.replicates, 8);
            assert_eq!(cell.failures, 0);
        }
        // tests × distributions × sizes × levels
        assert_eq!(report.rejection_rates.len(), 3 * 2 * 1 * 2);
        // criteria × distributions × sizes
        assert_eq!(report.k_frequencies.len(), 2 * 2 * 1);

        for entry in &report.rejection_rates {
            assert_eq!(entry.successes, 8);
            assert_eq!(entry.rate, entry.rejections as f64 / 8.0);
            assert!((0.0..=1.0).contains(&entry.rate));
            assert!(entry.std_error.is_finite());
        }
        for entry in &report.k_frequencies {
            let total = entry.pct_k1 + entry.pct_k3 + entry.pct_k5 + entry.pct_k_gt5;
            assert!((total - 100.0).abs() < 1e-9);
            // k_max = 3 leaves the upper buckets empty.
            assert_eq!(entry.pct_k5, 0.0);
            assert_eq!(entry.pct_k_gt5, 0.0);
            assert_eq!(entry.successes, 8);
        }

        // Levels CSV holds exactly the symmetric rows, power CSV the rest.
        let levels = report.levels_csv().unwrap();
        let power = report.power_csv().unwrap();
        assert!(levels.contains("normal"));
        assert!(!levels.contains("chisq1"));
        assert!(power.contains("chisq1"));
        assert!(!power.contains("normal"));
        assert_eq!(levels.lines().count(), 1 + 6);
        assert_eq!(power.lines().count(), 1 + 6);
    }

    #[test]
    fn single_replicate_rates_are_zero_or_one() {
        let spec = StudySpec {
            distributions: vec![SimDistribution::StdNormal],
            replicates: 1,
            tests: vec![TestKind::Gupta],
            ..tiny_spec()
        };
        let report = run_study(&spec).unwrap();
        for entry in &report.rejection_rates {
            assert!(entry.rate == 0.0 || entry.rate == 1.0);
            assert_eq!(entry.std_error, 0.0);
        }
        assert!(report.k_frequencies.is_empty(), "gupta alone selects no k");
    }

    #[test]
    fn report_is_independent_of_worker_count() {
        let mut spec = tiny_spec();
        spec.replicates = 6;
        let serial = run_study(&spec).unwrap();
        spec.max_workers = Some(3);
        let parallel = run_study(&spec).unwrap();
        spec.max_workers = None;
        let free = run_study(&spec).unwrap();

        for other in [&parallel, &free] {
            assert_eq!(serial.rejection_rates, other.rejection_rates);
            assert_eq!(serial.k_frequencies, other.k_frequencies);
            assert_eq!(serial.cells, other.cells);
            assert_eq!(serial.levels_csv().unwrap(), other.levels_csv().unwrap());
            assert_eq!(serial.power_csv().unwrap(), other.power_csv().unwrap());
            assert_eq!(
                serial.k_frequencies_symmetric_csv().unwrap(),
                other.k_frequencies_symmetric_csv().unwrap()
            );
            assert_eq!(
                serial.k_frequencies_skewed_csv().unwrap(),
                other.k_frequencies_skewed_csv().unwrap()
            );
        }
    }

    #[test]
    fn rerun_with_same_seed_is_bitwise_identical() {
        let spec = StudySpec {
            replicates: 5,
            ..tiny_spec()
        };
        let a = run_study(&spec).unwrap();
        let b = run_study(&spec).unwrap();
        assert_eq!(a.levels_csv().unwrap(), b.levels_csv().unwrap());
        assert_eq!(a.power_csv().unwrap(), b.power_csv().unwrap());
        assert_eq!(
            a.k_frequencies_skewed_csv().unwrap(),
            b.k_frequencies_skewed_csv().unwrap()
        );
    }

    #[test]
    fn power_does_not_degrade_with_larger_samples() {
        // Strongly skewed data: power at n = 100 must not fall more than
        // two points below power at n = 20.
        let spec = StudySpec {
            distributions: vec![SimDistribution::ChiSq1],
            sample_sizes: vec![20, 100],
            replicates: 60,
            levels: vec![0.05],
            tests: vec![TestKind::MixtureBic],
            master_seed: 7,
            k_max: 5,
            em: EmOptions {
                max_iterations: 600,
                random_restarts: 2,
                tol: 1e-7,
                ..EmOptions::default()
            },
            max_workers: None,
        };
        let report = run_study(&spec).unwrap();
        let rate_for = |n: usize| {
            report
                .rejection_rates
                .iter()
                .find(|e| e.n == n)
                .expect("rate entry exists")
                .rate
        };
        assert!(
            rate_for(100) >= rate_for(20) - 0.02,
            "power at n=100 ({}) fell below power at n=20 ({})",
            rate_for(100),
            rate_for(20)
        );
    }

    #[test]
    fn write_files_emits_all_five_outputs() {
        let dir = std::env::temp_dir().join(format!("eqmix-study-{}", std::process::id()));
        let spec = StudySpec {
            replicates: 2,
            ..tiny_spec()
        };
        let report = run_study(&spec).unwrap();
        let paths = report.write_files(&dir).unwrap();
        assert_eq!(paths.len(), 5);
        for path in &paths {
            assert!(path.exists(), "{} missing", path.display());
        }
        let json = std::fs::read_to_string(dir.join("report.json")).unwrap();
        assert!(json.contains("\"schema\": \"eqmix-study-report/v1\""));
        assert!(json.contains("\"wall_clock_seconds\""));
        std::fs::remove_dir_all(&dir).ok();
    }
}
