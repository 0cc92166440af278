//! Command-line surface. Every flag is optional here; defaults and config
//! values are merged in afterwards, so flags always win over the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use eqmix::dataio::CsvColumn;
use eqmix::{Criterion, SimDistribution, TestKind};

#[derive(Debug, Parser)]
#[command(
    name = "eqmix",
    version,
    about = "Tests of distributional symmetry via equispaced normal mixtures",
    propagate_version = true
)]
pub struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a data file for symmetry about an unknown center.
    Test(TestArgs),
    /// Run a seeded Monte Carlo level/power study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    /// Whitespace-delimited numbers.
    Whitespace,
    /// RFC-4180 CSV; pick the column with --column.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhichTest {
    /// Likelihood-ratio mixture test only.
    Mixture,
    /// Moment-based skewness test only.
    Gupta,
    /// Both tests.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputForm {
    /// Human-readable tables.
    Text,
    /// The full analysis report as JSON.
    Json,
}

/// Rejects even or zero orders at parse time.
pub fn parse_odd_k(s: &str) -> Result<usize, String> {
    let k: usize = s.parse().map_err(|_| format!("{s:?} is not a positive integer"))?;
    if k == 0 || k % 2 == 0 {
        return Err(format!("the number of components must be odd, got {k}"));
    }
    Ok(k)
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Input data file.
    pub input: PathBuf,

    /// Input layout [default: whitespace, or csv when --column is given].
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,

    /// CSV column, by zero-based index or header name [default: 0].
    #[arg(long)]
    pub column: Option<CsvColumn>,

    /// Which test(s) to run [default: both].
    #[arg(long = "test", value_enum)]
    pub test: Option<WhichTest>,

    /// Criterion selecting the mixture order k [default: both criteria].
    #[arg(long, conflicts_with = "k")]
    pub criterion: Option<Criterion>,

    /// Fixed odd order k, bypassing selection.
    #[arg(long, value_parser = parse_odd_k)]
    pub k: Option<usize>,

    /// Largest candidate order during selection (odd) [default: 7].
    #[arg(long, value_parser = parse_odd_k)]
    pub k_max: Option<usize>,

    /// Master seed for EM restarts [default: 297716762968 (0x4551_4D49_58)].
    #[arg(long)]
    pub seed: Option<u64>,

    /// Random EM restarts beyond the deterministic one [default: 9].
    #[arg(long)]
    pub restarts: Option<usize>,

    /// Output form on stdout [default: text].
    #[arg(long, value_enum)]
    pub out: Option<OutputForm>,

    /// Points in the fitted-density grid [default: 512].
    #[arg(long)]
    pub density_points: Option<usize>,

    /// Write the fitted-density grid as CSV to this file.
    #[arg(long, value_name = "FILE")]
    pub density_out: Option<PathBuf>,

    /// Write the JSON report to this file (independent of --out).
    #[arg(long, value_name = "FILE")]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Distributions to simulate, comma-separated tags
    /// [default: normal,t5,laplace,nm3,chisq1,chisq5,chisq10,lognormal].
    #[arg(long, value_delimiter = ',')]
    pub dist: Option<Vec<SimDistribution>>,

    /// Sample sizes, comma-separated [default: 20,50,100].
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,

    /// Replicates per (distribution, n) cell [default: 1000].
    #[arg(long)]
    pub reps: Option<usize>,

    /// Nominal levels, comma-separated [default: 0.01,0.05,0.10].
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,

    /// Tests to run, comma-separated [default: mixture-aic,mixture-bic,gupta].
    #[arg(long, value_delimiter = ',')]
    pub tests: Option<Vec<TestKind>>,

    /// Master seed [default: 297716762968 (0x4551_4D49_58)].
    #[arg(long)]
    pub seed: Option<u64>,

    /// Largest candidate order (odd) [default: 7].
    #[arg(long, value_parser = parse_odd_k)]
    pub k_max: Option<usize>,

    /// NM3 parameters as m1,m2,m3,variance,w1,w2,w3
    /// [default: -2,0,2,1,0.25,0.5,0.25].
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub nm3_params: Option<Vec<f64>>,

    /// Directory for the CSV tables and JSON report [default: eqmix-study].
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Worker threads [default: all cores, capped by EQMIX_MAX_WORKERS].
    #[arg(long)]
    pub workers: Option<usize>,
}
