//! The `simulate` subcommand: assemble a study spec from flags/config, run
//! it, and write the CSV tables plus the JSON report.

use eqmix::error::{Error, Result};
use eqmix::montecarlo::{run_study, study_em_options, StudySpec};
use eqmix::rng::SymNm3Params;
use eqmix::{SimDistribution, DEFAULT_SEED};

use crate::args::SimulateArgs;
use crate::config::SimulateConfig;

/// Name of the environment variable capping worker threads.
pub const MAX_WORKERS_ENV: &str = "EQMIX_MAX_WORKERS";

fn nm3_from_seven(values: &[f64]) -> Result<SymNm3Params> {
    if values.len() != 7 {
        return Err(Error::Config(format!(
            "--nm3-params takes exactly 7 numbers (m1,m2,m3,variance,w1,w2,w3), got {}",
            values.len()
        )));
    }
    SymNm3Params {
        means: [values[0], values[1], values[2]],
        variance: values[3],
        weights: [values[4], values[5], values[6]],
    }
    .validated()
}

fn effective_workers(requested: Option<usize>) -> Result<Option<usize>> {
    let cap = match std::env::var(MAX_WORKERS_ENV) {
        Err(std::env::VarError::NotPresent) => None,
        Err(e) => return Err(Error::Config(format!("{MAX_WORKERS_ENV}: {e}"))),
        Ok(text) => Some(text.parse::<usize>().map_err(|_| {
            Error::Config(format!("{MAX_WORKERS_ENV}={text:?} is not a worker count"))
        })?),
    };
    Ok(match (requested, cap) {
        (Some(w), Some(cap)) => Some(w.min(cap)),
        (Some(w), None) => Some(w),
        (None, cap) => cap,
    })
}

fn build_spec(args: &SimulateArgs, config: &SimulateConfig) -> Result<StudySpec> {
    let defaults = StudySpec::default();

    let mut distributions = match (&args.dist, &config.dist) {
        (Some(dists), _) => dists.clone(),
        (None, Some(tags)) => tags
            .iter()
            .map(|tag| tag.parse::<SimDistribution>())
            .collect::<Result<Vec<_>>>()?,
        (None, None) => defaults.distributions.clone(),
    };
    if let Some(values) = args.nm3_params.as_deref().or(config.nm3_params.as_deref()) {
        let params = nm3_from_seven(values)?;
        for dist in &mut distributions {
            if let SimDistribution::SymNm3(p) = dist {
                *p = params;
            }
        }
    }

    Ok(StudySpec {
        distributions,
        sample_sizes: args
            .n_list
            .clone()
            .or_else(|| config.n_list.clone())
            .unwrap_or(defaults.sample_sizes),
        replicates: args.reps.or(config.reps).unwrap_or(defaults.replicates),
        levels: args
            .levels
            .clone()
            .or_else(|| config.levels.clone())
            .unwrap_or(defaults.levels),
        tests: args
            .tests
            .clone()
            .or_else(|| config.tests.clone())
            .unwrap_or(defaults.tests),
        master_seed: args.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        k_max: args.k_max.or(config.k_max).unwrap_or(defaults.k_max),
        em: study_em_options(),
        max_workers: effective_workers(args.workers.or(config.workers))?,
    })
}

pub fn run(args: SimulateArgs, config: SimulateConfig) -> Result<()> {
    let spec = build_spec(&args, &config)?;
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| "eqmix-study".into());

    let report = run_study(&spec)?;
    let paths = report.write_files(&out_dir)?;

    println!(
        "study: {} distributions x {} sizes x {} replicates, seed {} ({})",
        spec.distributions.len(),
        spec.sample_sizes.len(),
        spec.replicates,
        spec.master_seed,
        report.generator,
    );
    for cell in &report.cells {
        println!(
            "  {} n={}: {} of {} replicates failed",
            cell.distribution, cell.n, cell.failures, cell.replicates
        );
    }
    println!("finished in {:.1} s, wrote:", report.wall_clock_seconds);
    for path in paths {
        println!("  {}", path.display());
    }
    Ok(())
}
