//! EM estimation of equispaced normal mixtures.
//!
//! The E-step works entirely in log space (max-shifted exponential sums), and
//! the M-step uses the closed forms for (β, α, σ²) and the weight updates of
//! the unconstrained and mirror-symmetric variants. Multi-start fitting runs
//! one deterministic initialization plus a configurable number of seeded
//! random restarts and keeps the best log-likelihood.

use crate::error::{Error, Result};
use crate::mixture::{log_likelihood, make_grid, EquispacedGrid, MixtureParams};
use crate::rng::{uniform_open01, RandomStream, DEFAULT_SEED};
use crate::sample::Sample;
use crate::selection::information_criteria;
use crate::specfun::LN_SQRT_2PI;
use rand::Rng;
use serde::Serialize;

/// Tuning knobs for [`fit_em`].
#[derive(Debug, Clone, Serialize)]
pub struct EmOptions {
    /// Relative convergence tolerance: stop when |ℓ_{t+1} − ℓ_t| < tol·(1 + |ℓ_t|).
    pub tol: f64,
    /// Maximum number of EM iterations per restart.
    pub max_iterations: usize,
    /// Seeded random restarts run in addition to the deterministic one.
    pub random_restarts: usize,
    /// Stream from which restart initializations are derived.
    pub stream: RandomStream,
    /// Record the per-iteration log-likelihood trace in the result.
    pub capture_trace: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            tol: 1e-8,
            max_iterations: 5000,
            random_restarts: 9,
            stream: RandomStream::new(DEFAULT_SEED, 0),
            capture_trace: false,
        }
    }
}

/// Posterior component-membership probabilities ẑ_ij from one E-step.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    z: Vec<f64>, // row-major n×k
    n: usize,
    k: usize,
    col_sums: Vec<f64>,
}

impl Responsibilities {
    /// Builds responsibilities from a row-major n×k matrix, checking that
    /// entries lie in [0, 1] and every row sums to 1.
    pub fn from_rows(z: Vec<f64>, n: usize, k: usize) -> Result<Self> {
        if z.len() != n * k || n == 0 || k == 0 {
            return Err(Error::Domain(format!(
                "responsibility matrix must be {n}×{k}, got {} entries",
                z.len()
            )));
        }
        for (i, row) in z.chunks_exact(k).enumerate() {
            let mut sum = 0.0;
            for &r in row {
                if !(-1e-12..=1.0 + 1e-12).contains(&r) {
                    return Err(Error::Domain(format!(
                        "responsibility out of [0,1] in row {i}: {r}"
                    )));
                }
                sum += r;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("row {i} sums to {sum}, expected 1")));
            }
        }
        let col_sums = column_sums(&z, n, k);
        Ok(Responsibilities { z, n, k, col_sums })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.z[i * self.k..(i + 1) * self.k]
    }

    /// Column sums ẑ·_j = Σ_i ẑ_ij.
    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }
}

fn column_sums(z: &[f64], n: usize, k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k];
    for i in 0..n {
        for j in 0..k {
            sums[j] += z[i * k + j];
        }
    }
    sums
}

/// Scratch buffers reused across EM iterations.
struct Workspace {
    z: Vec<f64>,
    col_sums: Vec<f64>,
    t: Vec<f64>,
    log_w: Vec<f64>,
    nus: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, k: usize) -> Self {
        Workspace {
            z: vec![0.0; n * k],
            col_sums: vec![0.0; k],
            t: vec![0.0; k],
            log_w: vec![0.0; k],
            nus: vec![0.0; k],
        }
    }
}

/// Fills the responsibility matrix for `params` and returns the sample
/// log-likelihood at `params` (a free by-product of the same pass).
fn e_step_into(sample: &Sample, params: &MixtureParams, ws: &mut Workspace) -> Result<f64> {
    let k = params.k();
    let deltas = params.grid.deltas();
    for j in 0..k {
        ws.log_w[j] = params.weights[j].ln();
        ws.nus[j] = params.alpha + params.beta * deltas[j];
        ws.col_sums[j] = 0.0;
    }
    let inv_2s2 = 0.5 / params.sigma2;
    let ln_norm = -LN_SQRT_2PI - 0.5 * params.sigma2.ln();
    let mut loglik = 0.0;
    for (i, &x) in sample.values().iter().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..k {
            let d = x - ws.nus[j];
            let t = ws.log_w[j] - d * d * inv_2s2;
            ws.t[j] = t;
            if t > best {
                best = t;
            }
        }
        if !best.is_finite() {
            return Err(Error::Numerical(format!(
                "responsibility row underflowed at observation {i} (x = {x})"
            )));
        }
        let mut sum = 0.0;
        for j in 0..k {
            let e = (ws.t[j] - best).exp();
            ws.t[j] = e;
            sum += e;
        }
        let row = &mut ws.z[i * k..(i + 1) * k];
        for j in 0..k {
            let r = ws.t[j] / sum;
            row[j] = r;
            ws.col_sums[j] += r;
        }
        loglik += best + sum.ln() + ln_norm;
    }
    Ok(loglik)
}

/// One E-step: posterior responsibilities of each observation.
pub fn e_step(sample: &Sample, params: &MixtureParams) -> Result<Responsibilities> {
    let n = sample.len();
    let k = params.k();
    let mut ws = Workspace::new(n, k);
    e_step_into(sample, params, &mut ws)?;
    Ok(Responsibilities {
        z: ws.z,
        n,
        k,
        col_sums: ws.col_sums,
    })
}

/// Result of one M-step, with flags for the two degeneracy guards.
#[derive(Debug, Clone)]
pub struct MStepOutcome {
    pub params: MixtureParams,
    /// The β update denominator vanished (all mass in the central component);
    /// β was set to 0.
    pub beta_zeroed: bool,
    /// The σ² update fell below the floor and was clamped to it.
    pub sigma2_floored: bool,
}

fn m_step_core(
    sample: &Sample,
    z: &[f64],
    col_sums: &[f64],
    grid: &EquispacedGrid,
    constrained: bool,
    sigma2_floor: f64,
) -> Result<MStepOutcome> {
    let n = sample.len();
    let nf = n as f64;
    let k = grid.k();
    let deltas = grid.deltas();
    let xbar = sample.mean();

    let delta_bar: f64 = col_sums
        .iter()
        .zip(deltas)
        .map(|(c, d)| c * d)
        .sum::<f64>()
        / nf;

    let mut beta = 0.0;
    let mut beta_zeroed = false;
    if k > 1 {
        let den: f64 = col_sums
            .iter()
            .zip(deltas)
            .map(|(c, d)| c * (d - delta_bar) * d)
            .sum();
        let mut num = 0.0;
        for (i, &x) in sample.values().iter().enumerate() {
            let xc = x - xbar;
            let row = &z[i * k..(i + 1) * k];
            for j in 0..k {
                num += row[j] * xc * deltas[j];
            }
        }
        if den.abs() <= 1e-12 * nf {
            beta_zeroed = true;
        } else {
            beta = num / den;
        }
    }
    let alpha = xbar - beta * delta_bar;

    let mut rss = 0.0;
    for (i, &x) in sample.values().iter().enumerate() {
        let row = &z[i * k..(i + 1) * k];
        for j in 0..k {
            let d = x - alpha - beta * deltas[j];
            rss += row[j] * d * d;
        }
    }
    let mut sigma2 = rss / nf;
    let mut sigma2_floored = false;
    if sigma2 < sigma2_floor {
        sigma2 = sigma2_floor;
        sigma2_floored = true;
    }

    let mut weights = Vec::with_capacity(k);
    if constrained {
        // (ẑ·_j + ẑ·_{k−j+1}) / (2n): mirror pairs share one value, so the
        // symmetry constraint holds bitwise.
        for j in 0..k {
            weights.push((col_sums[j] + col_sums[k - 1 - j]) / (2.0 * nf));
        }
    } else {
        for c in col_sums {
            weights.push(c / nf);
        }
    }

    // β is sign-ambiguous: (β, π) and (−β, reversed π) give the same density.
    // Report the nonnegative representative.
    let mut beta_final = beta;
    if beta < 0.0 {
        beta_final = -beta;
        weights.reverse();
    }

    let params = MixtureParams::new(grid.clone(), alpha, beta_final, sigma2, weights)?;
    Ok(MStepOutcome {
        params,
        beta_zeroed,
        sigma2_floored,
    })
}

/// One M-step: closed-form updates for (β, α, σ²) and the weights.
pub fn m_step(
    sample: &Sample,
    resp: &Responsibilities,
    grid: &EquispacedGrid,
    constrained: bool,
    sigma2_floor: f64,
) -> Result<MStepOutcome> {
    if resp.n() != sample.len() || resp.k() != grid.k() {
        return Err(Error::Domain(format!(
            "responsibilities are {}×{}, expected {}×{}",
            resp.n(),
            resp.k(),
            sample.len(),
            grid.k()
        )));
    }
    m_step_core(sample, &resp.z, &resp.col_sums, grid, constrained, sigma2_floor)
}

/// Number of free parameters: (α, σ²) always; β and the free weights when
/// k > 1 (k−1 unconstrained, ⌊k/2⌋ under the symmetry constraint).
pub fn n_params(k: usize, constrained: bool) -> usize {
    if k == 1 {
        2
    } else if constrained {
        3 + k / 2
    } else {
        3 + (k - 1)
    }
}

/// A fitted mixture with its log-likelihood and information criteria.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub params: MixtureParams,
    pub loglik: f64,
    pub constrained: bool,
    pub npar: usize,
    pub aic: f64,
    pub bic: f64,
    /// M-steps performed by the winning restart.
    pub iterations: usize,
    pub converged: bool,
    /// Which restart produced the best log-likelihood.
    pub restart_index: usize,
    /// The σ² floor was hit at some iteration; such fits are excluded from
    /// model selection.
    pub sigma2_floored: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglik_trace: Option<Vec<f64>>,
}

/// Initialization for restart `restart_index`: the deterministic moment-based
/// start for index 0, and flat-Dirichlet weights with the location jittered
/// by ±0.5·MAD for later indices (falling back to ±0.5·σ̂ when the MAD is 0).
pub fn init_params(
    sample: &Sample,
    k: usize,
    constrained: bool,
    restart_index: usize,
    stream: RandomStream,
) -> Result<MixtureParams> {
    let grid = make_grid(k)?;
    init_with_grid(sample, &grid, constrained, restart_index, stream)
}

fn init_with_grid(
    sample: &Sample,
    grid: &EquispacedGrid,
    _constrained: bool,
    restart_index: usize,
    stream: RandomStream,
) -> Result<MixtureParams> {
    let k = grid.k();
    let var = sample.variance();
    if var <= 0.0 {
        return Err(Error::DegenerateSample(
            "sample variance is zero; mixture fitting is undefined".into(),
        ));
    }
    let median = sample.median();
    let sigma2 = var / k as f64;
    let beta = if k == 1 {
        0.0
    } else {
        0.5 * (sample.max() - sample.min())
    };
    let (alpha, weights) = if restart_index == 0 {
        (median, vec![1.0 / k as f64; k])
    } else {
        let mut rng = stream.child(restart_index as u64).rng();
        let mut w: Vec<f64> = (0..k).map(|_| -uniform_open01(&mut rng).ln()).collect();
        let total: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= total;
        }
        let mad = sample.mad();
        let scale = if mad > 0.0 { mad } else { var.sqrt() };
        let u = 2.0 * rng.random::<f64>() - 1.0;
        (median + 0.5 * scale * u, w)
    };
    MixtureParams::new(grid.clone(), alpha, beta, sigma2, weights)
}

fn run_restart(
    sample: &Sample,
    grid: &EquispacedGrid,
    constrained: bool,
    options: &EmOptions,
    restart_index: usize,
    sigma2_floor: f64,
) -> Result<FitResult> {
    let start = init_with_grid(sample, grid, constrained, restart_index, options.stream)?;
    run_from(sample, grid, start, constrained, options, restart_index, sigma2_floor)
}

/// Runs the E/M loop from an explicit starting point. Exposed to the
/// symmetry-test module, which warm-starts fits from each other's solutions.
pub(crate) fn run_from(
    sample: &Sample,
    grid: &EquispacedGrid,
    start: MixtureParams,
    constrained: bool,
    options: &EmOptions,
    restart_index: usize,
    sigma2_floor: f64,
) -> Result<FitResult> {
    let n = sample.len();
    let k = grid.k();
    let mut params = start;
    let mut ws = Workspace::new(n, k);
    let mut trace: Option<Vec<f64>> = options.capture_trace.then(Vec::new);
    let mut prev = f64::NEG_INFINITY;
    let mut loglik = f64::NEG_INFINITY;
    let mut converged = false;
    let mut floored = false;
    let mut iterations = 0;
    for t in 0..options.max_iterations {
        let ll = e_step_into(sample, &params, &mut ws)?;
        if !ll.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite log-likelihood ({ll}) at iteration {t}"
            )));
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(ll);
        }
        if t > 0 && (ll - prev).abs() < options.tol * (1.0 + prev.abs()) {
            loglik = ll;
            converged = true;
            break;
        }
        prev = ll;
        let out = m_step_core(sample, &ws.z, &ws.col_sums, grid, constrained, sigma2_floor)?;
        params = out.params;
        floored |= out.sigma2_floored;
        iterations = t + 1;
    }
    if !converged {
        loglik = log_likelihood(sample, &params)?;
        if let Some(tr) = trace.as_mut() {
            tr.push(loglik);
        }
    }
    if !loglik.is_finite() {
        return Err(Error::Numerical(format!("non-finite log-likelihood ({loglik})")));
    }
    let npar = n_params(k, constrained);
    let (aic, bic) = information_criteria(loglik, npar, n);
    Ok(FitResult {
        params,
        loglik,
        constrained,
        npar,
        aic,
        bic,
        iterations,
        converged,
        restart_index,
        sigma2_floored: floored,
        loglik_trace: trace,
    })
}

pub(crate) fn sigma2_floor_for(sample: &Sample) -> f64 {
    1e-8 * sample.variance()
}

/// Fits a k-component mixture by multi-start EM and returns the best restart.
///
/// For k = 1 the optimum is independent of initialization, so a single
/// restart is run. Restarts whose likelihood degenerates are skipped; if all
/// of them degenerate an estimation error is returned.
pub fn fit_em(
    sample: &Sample,
    k: usize,
    constrained: bool,
    options: &EmOptions,
) -> Result<FitResult> {
    let grid = make_grid(k)?;
    if sample.variance() <= 0.0 {
        return Err(Error::DegenerateSample(
            "sample variance is zero; mixture fitting is undefined".into(),
        ));
    }
    let sigma2_floor = sigma2_floor_for(sample);
    let restarts = if k == 1 { 1 } else { 1 + options.random_restarts };
    let mut best: Option<FitResult> = None;
    let mut last_failure: Option<Error> = None;
    for r in 0..restarts {
        match run_restart(sample, &grid, constrained, options, r, sigma2_floor) {
            Ok(fit) => {
                if best.as_ref().map_or(true, |b| fit.loglik > b.loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => last_failure = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::Estimation(format!(
            "all {restarts} restarts degenerated (last failure: {})",
            last_failure.map_or_else(|| "none recorded".into(), |e| e.to_string())
        ))
    })
}

/// Unconstrained and constrained fits of the same model, suitable for a
/// likelihood-ratio comparison.
#[derive(Debug, Clone, Serialize)]
pub struct PairedFit {
    pub unconstrained: FitResult,
    pub constrained: FitResult,
}

/// Averages mirror weight pairs, producing the symmetric projection of
/// `params` (used to warm-start constrained fits).
fn symmetrized(params: &MixtureParams) -> Result<MixtureParams> {
    let k = params.k();
    let w = &params.weights;
    let weights = (0..k).map(|j| 0.5 * (w[j] + w[k - 1 - j])).collect();
    MixtureParams::new(
        params.grid.clone(),
        params.alpha,
        params.beta,
        params.sigma2,
        weights,
    )
}

/// Fits the unconstrained and constrained models at the same k with a shared
/// initialization schedule.
///
/// Two extra runs defend the likelihood-ratio comparison against local
/// optima: the constrained fit is also warm-started from the symmetrized
/// unconstrained solution, and if the constrained fit still wins, the
/// unconstrained model is refit from the constrained solution (EM
/// monotonicity then guarantees a nonnegative deviance up to convergence
/// slack). Warm-start runs carry restart_index = random_restarts + 1.
pub fn fit_pair(sample: &Sample, k: usize, options: &EmOptions) -> Result<PairedFit> {
    let unc = fit_em(sample, k, false, options)?;
    if k == 1 {
        // A single component has no weights to constrain: both hypotheses
        // coincide and share the fit.
        let mut con = unc.clone();
        con.constrained = true;
        return Ok(PairedFit {
            unconstrained: unc,
            constrained: con,
        });
    }
    let mut unc = unc;
    let mut con = fit_em(sample, k, true, options)?;
    let grid = make_grid(k)?;
    let floor = sigma2_floor_for(sample);
    let warm_index = options.random_restarts + 1;
    if let Ok(warm) = run_from(
        sample,
        &grid,
        symmetrized(&unc.params)?,
        true,
        options,
        warm_index,
        floor,
    ) {
        if warm.loglik > con.loglik {
            con = warm;
        }
    }
    if con.loglik > unc.loglik {
        if let Ok(escalated) = run_from(
            sample,
            &grid,
            con.params.clone(),
            false,
            options,
            warm_index,
            floor,
        ) {
            if escalated.loglik > unc.loglik {
                unc = escalated;
            }
        }
    }
    Ok(PairedFit {
        unconstrained: unc,
        constrained: con,
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_sample(min_n: usize) -> impl Strategy<Value = Sample> {
        proptest::collection::vec(-25.0..25.0f64, min_n..80)
            .prop_filter("needs positive variance", |v| {
                let s = Sample::new(v.clone()).unwrap();
                s.variance() > 1e-6
            })
            .prop_map(|v| Sample::new(v).unwrap())
    }

    fn arb_params(k: usize) -> impl Strategy<Value = MixtureParams> {
        (
            -5.0..5.0f64,
            0.0..4.0f64,
            0.05..9.0f64,
            proptest::collection::vec(0.05..1.0f64, k),
        )
            .prop_map(move |(alpha, beta, sigma2, raw_w)| {
                let total: f64 = raw_w.iter().sum();
                let weights = raw_w.iter().map(|w| w / total).collect();
                MixtureParams::new(make_grid(k).unwrap(), alpha, beta, sigma2, weights).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn e_step_rows_sum_to_one(s in arb_sample(5), p in arb_params(5)) {
            let r = e_step(&s, &p).unwrap();
            for i in 0..s.len() {
                let sum: f64 = r.row(i).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
            let total: f64 = r.col_sums().iter().sum();
            prop_assert!((total - s.len() as f64).abs() < 1e-9);
        }

        #[test]
        fn m_step_outputs_valid_params(
            s in arb_sample(6),
            p in arb_params(3),
            constrained in proptest::bool::ANY,
        ) {
            let grid = make_grid(3).unwrap();
            let r = e_step(&s, &p).unwrap();
            let out = m_step(&s, &r, &grid, constrained, 1e-12).unwrap();
            let w = &out.params.weights;
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|wi| *wi >= 0.0));
            prop_assert!(out.params.beta >= 0.0);
            if constrained {
                for j in 0..3 {
                    prop_assert_eq!(w[j], w[3 - 1 - j]);
                }
            }
        }

        #[test]
        fn em_traces_are_monotone(s in arb_sample(12), seed in 0u64..1000) {
            let options = EmOptions {
                max_iterations: 150,
                random_restarts: 1,
                capture_trace: true,
                stream: RandomStream::new(seed, 0),
                ..EmOptions::default()
            };
            let fit = fit_em(&s, 3, false, &options).unwrap();
            if !fit.sigma2_floored {
                let trace = fit.loglik_trace.as_ref().unwrap();
                for w in trace.windows(2) {
                    prop_assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
                }
            }
        }
    }
}
