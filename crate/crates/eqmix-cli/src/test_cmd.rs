//! The `test` subcommand: ingest a file, run the requested symmetry tests,
//! and emit the analysis report.

use std::fmt::Write as _;

use eqmix::dataio::{parse_data_file, CsvColumn, DataFormat};
use eqmix::error::{Error, Result};
use eqmix::report::{density_grid, write_density_csv, AnalysisReport, InputDigest, REPORT_SCHEMA};
use eqmix::selection::{selection_rows, Criterion, SelectionTable};
use eqmix::symmetry::{mixture_symmetry_test, test_from_table, SymmetryTestResult, TestMode};
use eqmix::{gupta_test, EmOptions, GuptaResult, RandomStream, Sample, DEFAULT_SEED, GENERATOR_ID};

use crate::args::{FormatArg, OutputForm, TestArgs, WhichTest};
use crate::config::TestConfig;

struct Resolved {
    format: DataFormat,
    which: WhichTest,
    criteria: Vec<Criterion>,
    primary: Criterion,
    fixed_k: Option<usize>,
    k_max: usize,
    seed: u64,
    restarts: usize,
    out: OutputForm,
    density_points: usize,
}

fn resolve(args: &TestArgs, config: &TestConfig) -> Result<Resolved> {
    let column = match (&args.column, &config.column) {
        (Some(column), _) => Some(column.clone()),
        (None, Some(column)) => Some(column.parse::<CsvColumn>()?),
        (None, None) => None,
    };
    let format_arg = args.format.or(config.format);
    let format = match (format_arg, column) {
        (Some(FormatArg::Whitespace), None) | (None, None) => DataFormat::Whitespace,
        (Some(FormatArg::Whitespace), Some(_)) => {
            return Err(Error::Config(
                "--column only applies to --format csv".into(),
            ))
        }
        (Some(FormatArg::Csv), None) => DataFormat::Csv(CsvColumn::Index(0)),
        (_, Some(column)) => DataFormat::Csv(column),
    };

    let fixed_k = args.k.or(config.k);
    let criterion = args.criterion.or(config.criterion);
    if fixed_k.is_some() && criterion.is_some() {
        // The clap conflict catches the flag/flag case; this covers the
        // config-file combinations.
        return Err(Error::Config(
            "--k fixes the order, so --criterion cannot also be given".into(),
        ));
    }
    let criteria = match criterion {
        Some(criterion) => vec![criterion],
        None => vec![Criterion::Aic, Criterion::Bic],
    };
    let primary = *criteria.last().expect("criteria never empty");

    Ok(Resolved {
        format,
        which: args.test.or(config.test).unwrap_or(WhichTest::Both),
        criteria,
        primary,
        fixed_k,
        k_max: args.k_max.or(config.k_max).unwrap_or(7),
        seed: args.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        restarts: args.restarts.or(config.restarts).unwrap_or(9),
        out: args.out.or(config.out).unwrap_or(OutputForm::Text),
        density_points: args.density_points.or(config.density_points).unwrap_or(512),
    })
}

fn config_echo(args: &TestArgs, resolved: &Resolved) -> serde_json::Value {
    serde_json::json!({
        "input": args.input.display().to_string(),
        "format": match &resolved.format {
            DataFormat::Whitespace => serde_json::json!("whitespace"),
            DataFormat::Csv(column) => serde_json::json!({"csv-column": column.to_string()}),
        },
        "test": match resolved.which {
            WhichTest::Mixture => "mixture",
            WhichTest::Gupta => "gupta",
            WhichTest::Both => "both",
        },
        "k": resolved.fixed_k,
        "criteria": resolved.criteria,
        "k-max": resolved.k_max,
        "seed": resolved.seed,
        "restarts": resolved.restarts,
        "density-points": resolved.density_points,
    })
}

fn run_mixture(
    sample: &Sample,
    resolved: &Resolved,
    options: &EmOptions,
) -> Result<(Vec<SymmetryTestResult>, Option<SelectionTable>)> {
    if let Some(k) = resolved.fixed_k {
        let result = mixture_symmetry_test(sample, TestMode::FixedK(k), options)?;
        return Ok((vec![result], None));
    }
    let rows = selection_rows(sample, resolved.k_max, options)?;
    let mut table = SelectionTable {
        rows,
        chosen_k: 0,
        criterion: resolved.primary,
    };
    table.chosen_k = table.chosen_for(resolved.primary)?;
    let results = resolved
        .criteria
        .iter()
        .map(|&criterion| test_from_table(&table, criterion))
        .collect::<Result<Vec<_>>>()?;
    Ok((results, Some(table)))
}

fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let digest = &report.input;
    let _ = writeln!(
        out,
        "input: n = {}  min = {:.6}  max = {:.6}  mean = {:.6}  median = {:.6}",
        digest.n, digest.min, digest.max, digest.mean, digest.median
    );

    if let Some(table) = &report.selection {
        let _ = writeln!(out);
        let _ = writeln!(out, "model selection (criterion: {})", table.criterion);
        let _ = writeln!(out, "   {:>3}  {:>12}  {:>12}  {:>12}", "k", "loglik", "aic", "bic");
        for row in &table.rows {
            let fit = &row.fits.unconstrained;
            let marker = if row.k == table.chosen_k { ">" } else { " " };
            let _ = writeln!(
                out,
                " {marker} {:>3}  {:>12.3}  {:>12.3}  {:>12.3}",
                row.k, fit.loglik, fit.aic, fit.bic
            );
        }
    }

    for result in &report.mixture_tests {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "mixture symmetry test (k = {}, chosen by {})",
            result.chosen_k,
            match result.chosen_by {
                eqmix::symmetry::ChosenBy::Aic => "aic",
                eqmix::symmetry::ChosenBy::Bic => "bic",
                eqmix::symmetry::ChosenBy::FixedK => "fixed k",
            }
        );
        let _ = writeln!(out, "  deviance   {:.3}", result.deviance);
        let _ = writeln!(out, "  df         {}", result.df);
        let _ = writeln!(out, "  p-value    {:.5}", result.p_value.value());
        if result.auto_accepted {
            let _ = writeln!(out, "  note       k = 1 is symmetric by construction");
        }
        if result.boundary {
            let _ = writeln!(
                out,
                "  note       a constrained weight is at 0; the chi-square reference is approximate"
            );
        }
    }

    if let Some(gupta) = &report.gupta {
        let _ = writeln!(out);
        let _ = writeln!(out, "gupta skewness test");
        let _ = writeln!(out, "  b1         {:.5}", gupta.b1);
        let _ = writeln!(out, "  s1         {:.5}", gupta.s1);
        let _ = writeln!(out, "  p-value    {:.5}", gupta.p_value.value());
    }
    out
}

pub fn run(args: TestArgs, config: TestConfig) -> Result<()> {
    let resolved = resolve(&args, &config)?;
    let sample = parse_data_file(&args.input, &resolved.format)?;

    let options = EmOptions {
        random_restarts: resolved.restarts,
        stream: RandomStream::new(resolved.seed, 0),
        ..EmOptions::default()
    };

    let run_mix = matches!(resolved.which, WhichTest::Mixture | WhichTest::Both);
    let run_gupta = matches!(resolved.which, WhichTest::Gupta | WhichTest::Both);

    let (mixture_tests, selection) = if run_mix {
        run_mixture(&sample, &resolved, &options)?
    } else {
        (Vec::new(), None)
    };
    let gupta: Option<GuptaResult> = if run_gupta { Some(gupta_test(&sample)?) } else { None };

    // The grid follows the primary result: the fixed-k test, or the last
    // (BIC when both criteria ran) selection-mode test.
    let grid = match mixture_tests.last() {
        Some(result) => Some(density_grid(
            &sample,
            &result.unconstrained_fit,
            &result.constrained_fit,
            resolved.density_points,
        )?),
        None => None,
    };

    let report = AnalysisReport {
        schema: REPORT_SCHEMA.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        generator: GENERATOR_ID.to_string(),
        input: InputDigest::from_sample(&sample),
        config: config_echo(&args, &resolved),
        selection,
        mixture_tests,
        gupta,
        density_grid: grid,
    };

    match resolved.out {
        OutputForm::Text => print!("{}", render_text(&report)),
        OutputForm::Json => println!("{}", report.to_json()?),
    }
    if let Some(path) = args.report_out.as_deref().or(config.report_out.as_deref()) {
        std::fs::write(path, report.to_json()?)?;
    }
    if let Some(path) = args.density_out.as_deref().or(config.density_out.as_deref()) {
        match &report.density_grid {
            Some(grid) => {
                let mut bytes = Vec::new();
                write_density_csv(grid, &mut bytes)?;
                std::fs::write(path, bytes)?;
            }
            None => {
                return Err(Error::Config(
                    "--density-out needs a mixture fit; it is unavailable with --test gupta".into(),
                ))
            }
        }
    }
    Ok(())
}
