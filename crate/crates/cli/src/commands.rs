use std::path::{Path, PathBuf};

use hyheat::analytic;
use hyheat::large_deviation::{direct_sup, growth_backends};
use hyheat::montecarlo::{estimate_moment_exponent, estimate_sample_exponent, moment_estimators, simulate_norm_series, EstimateReport};
use hyheat::rng::stream_rng;
use hyheat::Generator;
use rand::Rng;
use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::output::{create_run_dir, p_label, write_csv, write_json};

/// Absolute tolerance on `|direct − eigen|` in `verify`.
pub const AGREEMENT_TOLERANCE: f64 = 1e-6;

fn verdict_word(v: &analytic::StabilityVerdict) -> &'static str {
    match v.verdict {
        analytic::Verdict::Stable => "stable",
        analytic::Verdict::Unstable => "unstable",
        analytic::Verdict::Boundary => "boundary (indeterminate)",
    }
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    command: &'static str,
    config: &'a ResolvedConfig,
    analysis: analytic::ExponentReport,
}

pub fn analyze(cfg: &ResolvedConfig, out_root: &Path) -> Result<PathBuf, CliError> {
    let model = cfg.build_model()?;
    let backends = growth_backends();
    let backend = backends.get(&cfg.estimator.lambda_backend)?;
    let analysis = analytic::analyze(&model, &cfg.estimator.p, backend)?;

    let dir = create_run_dir(out_root, "analyze")?;
    println!("stationary distribution: {:?}", analysis.stationary);
    if model.is_noiseless() {
        println!("heat exponent: {} (any u0: <= {})", analysis.heat_exponent, analysis.heat_exponent_upper_bound);
    }
    println!(
        "sample exponent: {} -> almost surely {} (any u0: <= {})",
        analysis.sample_exponent,
        verdict_word(&analysis.sample_verdict),
        analysis.sample_exponent_upper_bound
    );
    for m in &analysis.moments {
        println!(
            "p = {}: moment exponent {} -> moment {} (pi lower bound {})",
            m.p,
            m.exponent,
            verdict_word(&m.verdict),
            m.lower_bound_pi
        );
    }
    if let Some(note) = &cfg.note {
        println!("note: {note}");
    }
    write_json(&dir.join("report.json"), &AnalyzeReport { command: "analyze", config: cfg, analysis })?;
    Ok(dir)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    command: &'static str,
    config: &'a ResolvedConfig,
    sample: EstimateReport,
    moments: Vec<EstimateReport>,
    heavy_tail_warnings: usize,
}

#[derive(Serialize)]
struct PathRow {
    tau_k: f64,
    state_k: usize,
}

#[derive(Serialize)]
struct MomentRow {
    t: f64,
    log_moment: f64,
    se: f64,
}

pub fn simulate(cfg: &ResolvedConfig, out_root: &Path, strict: bool) -> Result<PathBuf, CliError> {
    let model = cfg.build_model()?;
    let estimators = moment_estimators();
    let estimator = estimators.get(&cfg.estimator.moment_estimator)?;
    let est = cfg.estimator_config();
    est.validate(model.n_states())?;

    let sample = estimate_sample_exponent(&model, &est)?;
    let moments = cfg
        .estimator
        .p
        .iter()
        .map(|&p| estimate_moment_exponent(&model, p, &est, estimator))
        .collect::<hyheat::Result<Vec<_>>>()?;
    let (path, series) = simulate_norm_series(&model, &est, 0)?;

    let dir = create_run_dir(out_root, "simulate")?;
    write_csv(
        &dir.join("path.csv"),
        path.jump_times().iter().zip(path.states()).map(|(&tau_k, &s)| PathRow { tau_k, state_k: s + 1 }),
    )?;
    write_csv(&dir.join("norm_series.csv"), &series)?;
    for m in &moments {
        if let hyheat::montecarlo::EstimateKind::MomentExponent { p } = m.kind {
            write_csv(
                &dir.join(format!("log_moment_p{}.csv", p_label(p))),
                m.curve.iter().map(|c| MomentRow { t: c.t, log_moment: c.log_moment, se: c.se }),
            )?;
        }
    }

    println!(
        "sample exponent: {:.6} +/- {:.6} (closed form {:.6}, z = {:.2})",
        sample.estimate, sample.standard_error, sample.reference, sample.z_score
    );
    let mut warnings = Vec::new();
    for (m, p) in moments.iter().zip(&cfg.estimator.p) {
        println!(
            "p = {p}: moment exponent {:.6} +/- {:.6} (closed form {:.6}, z = {:.2})",
            m.estimate, m.standard_error, m.reference, m.z_score
        );
        if let Some(w) = m.heavy_tail {
            let msg = format!(
                "p = {p}: heavy-tailed samples (excess kurtosis {:.1} at t = {} exceeds {}); the moment estimate is unreliable",
                w.max_excess_kurtosis, w.at_t, w.threshold
            );
            eprintln!("warning: {msg}");
            warnings.push(msg);
        }
    }
    let report = SimulateReport { command: "simulate", config: cfg, sample, moments, heavy_tail_warnings: warnings.len() };
    write_json(&dir.join("report.json"), &report)?;
    if strict && !warnings.is_empty() {
        return Err(CliError::StrictWarning(format!("{} (run directory {})", warnings.join("; "), dir.display())));
    }
    Ok(dir)
}

#[derive(Debug, Clone, Serialize)]
struct DualityRow {
    trial: usize,
    lambda_direct: f64,
    lambda_eigen: f64,
    gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Failure {
    trial: usize,
    generator: Vec<Vec<f64>>,
    weights: Vec<f64>,
    lambda_direct: f64,
    lambda_eigen: f64,
    gap: f64,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    command: &'static str,
    config: Option<&'a ResolvedConfig>,
    random_trials: Option<usize>,
    seed: u64,
    eigen_backend: &'a str,
    tolerance: f64,
    trials: usize,
    max_gap: f64,
    failures: Vec<Failure>,
}

/// Random trial `k`: an irreducible generator on 2 to 5 states and weights
/// uniform on `[−3, 3]`, drawn from stream `k` of `seed`.
fn random_trial(seed: u64, k: usize) -> (Generator, Vec<f64>) {
    let mut rng = stream_rng(seed, k as u64);
    let n = rng.random_range(2..=5);
    let g = Generator::random_irreducible(n, 5.0, 0.3, &mut rng);
    let w = (0..n).map(|_| rng.random_range(-3.0..=3.0)).collect();
    (g, w)
}

pub fn verify(
    cfg: Option<&ResolvedConfig>,
    random_trials: Option<usize>,
    seed: u64,
    eigen_backend: &str,
    out_root: &Path,
) -> Result<PathBuf, CliError> {
    if eigen_backend == "variational" {
        return Err(CliError::Usage("verify compares the variational route against an eigenvalue backend; choose another --lambda-backend".into()));
    }
    let backends = growth_backends();
    let backend = backends.get(eigen_backend)?;
    let cases: Vec<(Generator, Vec<f64>)> = match (random_trials, cfg) {
        (Some(k), _) => (0..k).map(|i| random_trial(seed, i)).collect(),
        (None, Some(c)) => {
            let model = c.build_model()?;
            c.estimator
                .p
                .iter()
                .map(|&p| Ok((model.generator().clone(), analytic::moment_weights(&model, p)?)))
                .collect::<hyheat::Result<_>>()?
        }
        (None, None) => return Err(CliError::Usage("verify needs --preset, --config or --random-trials".into())),
    };

    let mut rows = Vec::with_capacity(cases.len());
    let mut failures = Vec::new();
    for (trial, (g, w)) in cases.iter().enumerate() {
        let lambda_eigen = backend.growth_rate(g, w)?;
        let lambda_direct = direct_sup(g, w)?.lambda;
        let gap = (lambda_direct - lambda_eigen).abs();
        if !(gap <= AGREEMENT_TOLERANCE) {
            failures.push(Failure { trial, generator: g.rows(), weights: w.clone(), lambda_direct, lambda_eigen, gap });
        }
        rows.push(DualityRow { trial, lambda_direct, lambda_eigen, gap });
    }
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);

    let dir = create_run_dir(out_root, "verify")?;
    write_csv(&dir.join("duality.csv"), &rows)?;
    let report = VerifyReport {
        command: "verify",
        config: if random_trials.is_some() { None } else { cfg },
        random_trials,
        seed,
        eigen_backend,
        tolerance: AGREEMENT_TOLERANCE,
        trials: rows.len(),
        max_gap,
        failures: failures.clone(),
    };
    write_json(&dir.join("report.json"), &report)?;
    println!("{} trials, max |direct - eigen| = {max_gap:.3e}", rows.len());
    if random_trials.is_none() {
        for r in &rows {
            println!("trial {}: direct {} eigen {} gap {:.3e}", r.trial, r.lambda_direct, r.lambda_eigen, r.gap);
        }
    }
    if let Some(f) = failures.first() {
        return Err(CliError::Agreement(format!(
            "{} of {} trials exceed {AGREEMENT_TOLERANCE:e}; first: trial {} generator {:?} weights {:?} direct {} eigen {} gap {:.3e} (run directory {})",
            failures.len(),
            rows.len(),
            f.trial,
            f.generator,
            f.weights,
            f.lambda_direct,
            f.lambda_eigen,
            f.gap,
            dir.display()
        )));
    }
    Ok(dir)
}
