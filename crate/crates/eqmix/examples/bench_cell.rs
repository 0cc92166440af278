//! Rough timing of one heavy study cell at full settings.
use eqmix::montecarlo::{run_study, StudySpec, TestKind};
use eqmix::SimDistribution;

fn main() {
    let spec = StudySpec {
        distributions: vec![SimDistribution::ChiSq1],
        sample_sizes: vec![100],
        replicates: 100,
        levels: vec![0.01, 0.05, 0.10],
        tests: TestKind::ALL.to_vec(),
        master_seed: 42,
        k_max: 7,
        ..StudySpec::default()
    };
    let t = std::time::Instant::now();
    let report = run_study(&spec).unwrap();
    println!(
        "100 reps chisq1 n=100: {:.2}s ({} rate rows)",
        t.elapsed().as_secs_f64(),
        report.rejection_rates.len()
    );
}
