//! Simulation estimators of the sample and moment Lyapunov exponents.
//!
//! Path `m` of a run always draws from `stream_rng(seed, m)`, and per-path
//! results are collected in index order, so a report depends only on the
//! configuration and never on thread scheduling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, ExponentMode};
use crate::error::{Error, Result};
use crate::hybrid::{HybridHeatModel, PathSolution};
use crate::large_deviation::PowerIterationBackend;
use crate::numeric::{mean, ols_slope, variance};
use crate::registry::{Registry, Strategy};
use crate::rng::stream_rng;

/// Bootstrap draws use a stream no path index can reach.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub horizon: f64,
    pub n_paths: usize,
    /// Increasing evaluation times in `(0, horizon]`.
    pub grid: Vec<f64>,
    pub seed: u64,
    /// 0-based initial state of the chain.
    pub start_state: usize,
    pub bootstrap_resamples: usize,
    /// Fraction of grid points, counted from the end, used in the slope fit.
    pub fit_fraction: f64,
    /// Excess kurtosis above which a moment estimate is flagged.
    pub kurtosis_threshold: f64,
}

impl EstimatorConfig {
    /// Defaults with a uniform grid of 100 points.
    pub fn new(horizon: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            n_paths,
            grid: uniform_grid(horizon, 100),
            seed,
            start_state: 0,
            bootstrap_resamples: 200,
            fit_fraction: 0.5,
            kurtosis_threshold: 100.0,
        }
    }

    pub fn with_grid_points(mut self, points: usize) -> Self {
        self.grid = uniform_grid(self.horizon, points);
        self
    }

    pub fn validate(&self, n_states: usize) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidArgument("evaluation grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("evaluation grid must be strictly increasing".into()));
        }
        if let Some(&t) = self.grid.iter().find(|&&t| !(t > 0.0 && t <= self.horizon)) {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        if self.start_state >= n_states {
            return Err(Error::StateOutOfRange { state: self.start_state, n_states });
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("fit_fraction must lie in (0, 1], got {}", self.fit_fraction)));
        }
        Ok(())
    }

    /// The grid with the horizon appended if it is missing.
    fn grid_to_horizon(&self) -> Vec<f64> {
        let mut g = self.grid.clone();
        if g.last().is_none_or(|&t| t < self.horizon) {
            g.push(self.horizon);
        }
        g
    }
}

/// `points` equally spaced times ending at `horizon`.
pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|k| horizon * k as f64 / points as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimateKind {
    SampleExponent,
    MomentExponent { p: f64 },
}

/// Point on the estimated curve `t ↦ log E‖u(t)‖^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub log_moment: f64,
    /// Delta-method standard error of `log_moment`.
    pub se: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeavyTailWarning {
    pub max_excess_kurtosis: f64,
    pub at_t: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub kind: EstimateKind,
    pub estimator: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub reference: f64,
    /// `(estimate − reference) / standard_error`.
    pub z_score: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Per-path `(1/T) log ‖u(T)‖` (sample runs only).
    pub per_path: Vec<f64>,
    /// Per-time log-moment estimates (moment runs only).
    pub curve: Vec<CurvePoint>,
    /// First and last grid time of the slope fit (moment runs only).
    pub fit_window: Option<(f64, f64)>,
    pub heavy_tail: Option<HeavyTailWarning>,
}

impl EstimateReport {
    pub fn within(&self, n_se: f64) -> bool {
        (self.estimate - self.reference).abs() <= n_se * self.standard_error
    }
}

fn z_score(estimate: f64, reference: f64, se: f64) -> f64 {
    let d = estimate - reference;
    if d == 0.0 {
        0.0
    } else {
        d / se
    }
}

/// Runs `f` once per path with that path's own stream, in parallel, and
/// returns the results in path order.
fn per_path<T, F>(config: &EstimatorConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|m| f(&mut stream_rng(config.seed, m)))
        .collect()
}

/// Mean over paths of the endpoint value `(1/T) log ‖u(T)‖`.
pub fn estimate_sample_exponent(model: &HybridHeatModel, config: &EstimatorConfig) -> Result<EstimateReport> {
    config.validate(model.n_states())?;
    let horizon = [config.horizon];
    let values = per_path(config, |rng| {
        let sol = PathSolution::simulate(model, config.start_state, &horizon, rng)?;
        Ok(sol.solution_norm(config.horizon)?.log_norm / config.horizon)
    })?;
    let estimate = mean(&values);
    let se = if values.len() > 1 { (variance(&values) / values.len() as f64).sqrt() } else { 0.0 };
    let reference = analytic::sample_exponent(model, ExponentMode::Exact)?;
    Ok(EstimateReport {
        kind: EstimateKind::SampleExponent,
        estimator: "endpoint".into(),
        estimate,
        standard_error: se,
        reference,
        z_score: z_score(estimate, reference, se),
        horizon: config.horizon,
        n_paths: config.n_paths,
        seed: config.seed,
        per_path: values,
        curve: Vec::new(),
        fit_window: None,
        heavy_tail: None,
    })
}

/// Per-path samples of `log ‖u(t)‖^p` (or of a conditional expectation of
/// it) on a time grid.
pub trait MomentEstimator: Strategy {
    /// One log-value per grid time for a single simulated path.
    fn path_log_values(
        &self,
        model: &HybridHeatModel,
        start_state: usize,
        grid: &[f64],
        p: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>>;
}

/// Samples only the chain and integrates the Brownian factor out exactly:
/// `E[‖u(t)‖^p | r] = ‖v(t)‖^p exp{p(p−1)/2 · Q(t)}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConditionalGaussian;

impl Strategy for ConditionalGaussian {
    fn name(&self) -> &'static str {
        "conditional-gaussian"
    }
    fn description(&self) -> &'static str {
        "samples the chain only; the Brownian factor's p-th moment is applied in closed form"
    }
}

impl MomentEstimator for ConditionalGaussian {
    fn path_log_values(
        &self,
        model: &HybridHeatModel,
        start_state: usize,
        grid: &[f64],
        p: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>> {
        let horizon = *grid.last().expect("validated grid");
        let path = model.generator().simulate_path(start_state, horizon, rng)?;
        grid.iter().map(|&t| model.log_conditional_moment(&path, p, t)).collect()
    }
}

/// Samples chain and Brownian motion and uses `p log ‖u(t)‖` directly.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullSample;

impl Strategy for FullSample {
    fn name(&self) -> &'static str {
        "full-sample"
    }
    fn description(&self) -> &'static str {
        "samples chain and Brownian motion; uses the realized solution norm"
    }
}

impl MomentEstimator for FullSample {
    fn path_log_values(
        &self,
        model: &HybridHeatModel,
        start_state: usize,
        grid: &[f64],
        p: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>> {
        let sol = PathSolution::simulate(model, start_state, grid, rng)?;
        grid.iter().map(|&t| Ok(p * sol.solution_norm(t)?.log_norm)).collect()
    }
}

/// Registry of moment estimators; `conditional-gaussian` is the default.
pub fn moment_estimators() -> Registry<dyn MomentEstimator> {
    let mut r: Registry<dyn MomentEstimator> = Registry::new("moment estimator");
    r.register(Box::new(ConditionalGaussian)).register(Box::new(FullSample));
    r
}

/// Column `k` of the path-by-time log-value table rescaled by its maximum:
/// `x_m = exp(ℓ_mk − max_m ℓ_mk)`. Returns the values and the shift.
fn scaled_column(table: &[Vec<f64>], k: usize) -> (Vec<f64>, f64) {
    let shift = table.iter().map(|row| row[k]).fold(f64::NEG_INFINITY, f64::max);
    (table.iter().map(|row| (row[k] - shift).exp()).collect(), shift)
}

fn excess_kurtosis(x: &[f64]) -> f64 {
    let m = mean(x);
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(a, b), v| {
        let d2 = (v - m) * (v - m);
        (a + d2, b + d2 * d2)
    });
    if m2 == 0.0 {
        return 0.0;
    }
    x.len() as f64 * m4 / (m2 * m2) - 3.0
}

/// Slope of `log E‖u(t)‖^p` over the last `fit_fraction` of the grid, with a
/// path-level bootstrap standard error.
pub fn estimate_moment_exponent(
    model: &HybridHeatModel,
    p: f64,
    config: &EstimatorConfig,
    estimator: &dyn MomentEstimator,
) -> Result<EstimateReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::NonpositiveP(p));
    }
    config.validate(model.n_states())?;
    let grid = &config.grid;
    let table = per_path(config, |rng| estimator.path_log_values(model, config.start_state, grid, p, rng))?;
    let m = table.len();
    let n_fit = ((grid.len() as f64 * config.fit_fraction).ceil() as usize).clamp(1, grid.len());
    let first = grid.len() - n_fit;

    let mut curve = Vec::with_capacity(grid.len());
    let mut columns = Vec::with_capacity(n_fit);
    for (k, &t) in grid.iter().enumerate() {
        let (x, shift) = scaled_column(&table, k);
        let mx = mean(&x);
        let se = if m > 1 { (variance(&x) / m as f64).sqrt() / mx } else { 0.0 };
        curve.push(CurvePoint { t, log_moment: shift + mx.ln(), se, excess_kurtosis: excess_kurtosis(&x) });
        if k >= first {
            columns.push((x, shift));
        }
    }
    let fit_t = &grid[first..];
    let fit_y: Vec<f64> = curve[first..].iter().map(|c| c.log_moment).collect();
    let estimate = if n_fit > 1 { ols_slope(fit_t, &fit_y).0 } else { fit_y[0] / fit_t[0] };

    let standard_error = if m > 1 && n_fit > 1 && config.bootstrap_resamples > 1 {
        let mut rng = stream_rng(config.seed, BOOTSTRAP_STREAM);
        let mut slopes = Vec::with_capacity(config.bootstrap_resamples);
        let mut counts = vec![0u32; m];
        for _ in 0..config.bootstrap_resamples {
            counts.iter_mut().for_each(|c| *c = 0);
            for _ in 0..m {
                counts[rng.random_range(0..m)] += 1;
            }
            let y: Vec<f64> = columns
                .iter()
                .map(|(x, shift)| {
                    let s: f64 = x.iter().zip(&counts).map(|(v, &c)| v * c as f64).sum();
                    shift + (s / m as f64).ln()
                })
                .collect();
            slopes.push(ols_slope(fit_t, &y).0);
        }
        variance(&slopes).sqrt()
    } else {
        0.0
    };

    let heavy_tail = curve[first..]
        .iter()
        .max_by(|a, b| a.excess_kurtosis.total_cmp(&b.excess_kurtosis))
        .filter(|c| c.excess_kurtosis > config.kurtosis_threshold)
        .map(|c| HeavyTailWarning {
            max_excess_kurtosis: c.excess_kurtosis,
            at_t: c.t,
            threshold: config.kurtosis_threshold,
        });
    let reference = analytic::moment_exponent(model, p, ExponentMode::Exact, &PowerIterationBackend::default())?;
    Ok(EstimateReport {
        kind: EstimateKind::MomentExponent { p },
        estimator: estimator.name().to_string(),
        estimate,
        standard_error,
        reference,
        z_score: z_score(estimate, reference, standard_error),
        horizon: config.horizon,
        n_paths: config.n_paths,
        seed: config.seed,
        per_path: Vec::new(),
        curve,
        fit_window: Some((fit_t[0], *fit_t.last().unwrap())),
        heavy_tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub horizon: f64,
    pub estimate: f64,
    pub standard_error: f64,
    pub reference: f64,
    pub gap: f64,
}

/// Runs the sample estimator (`p = None`) or the moment estimator at each
/// horizon. The grid of `config` is replaced by a uniform grid with the same
/// number of points ending at each horizon.
pub fn convergence_table(
    model: &HybridHeatModel,
    p: Option<f64>,
    horizons: &[f64],
    config: &EstimatorConfig,
    estimator: &dyn MomentEstimator,
) -> Result<Vec<ConvergenceRow>> {
    horizons
        .iter()
        .map(|&h| {
            let mut c = config.clone();
            c.horizon = h;
            c.grid = uniform_grid(h, config.grid.len().max(1));
            let r = match p {
                None => estimate_sample_exponent(model, &c)?,
                Some(p) => estimate_moment_exponent(model, p, &c, estimator)?,
            };
            Ok(ConvergenceRow {
                horizon: h,
                estimate: r.estimate,
                standard_error: r.standard_error,
                reference: r.reference,
                gap: (r.estimate - r.reference).abs(),
            })
        })
        .collect()
}

/// One realization on the configured grid (plus the horizon), drawn from
/// stream `path_index`: its jump skeleton and norm time series.
pub fn simulate_norm_series(
    model: &HybridHeatModel,
    config: &EstimatorConfig,
    path_index: u64,
) -> Result<(crate::ctmc::MarkovPath, Vec<crate::hybrid::NormSample>)> {
    config.validate(model.n_states())?;
    let grid = config.grid_to_horizon();
    let mut rng = stream_rng(config.seed, path_index);
    let sol = PathSolution::simulate(model, config.start_state, &grid, &mut rng)?;
    let series = sol.norm_series(&grid)?;
    Ok((sol.path().clone(), series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::Generator;
    use crate::large_deviation::growth_oracle;
    use crate::spectral::{InitialData, SpectralBasis};
    use std::f64::consts::PI;

    fn single(alpha: f64, beta: f64) -> HybridHeatModel {
        HybridHeatModel::scalar_noise(
            Generator::single(),
            SpectralBasis::interval(PI, 4).unwrap(),
            InitialData::single_mode(1, 4).unwrap(),
            vec![alpha],
            vec![beta],
        )
        .unwrap()
    }

    fn mild_two_state() -> HybridHeatModel {
        HybridHeatModel::scalar_noise(
            Generator::two_state(2.0, 1.0).unwrap(),
            SpectralBasis::interval(PI, 4).unwrap(),
            InitialData::single_mode(1, 4).unwrap(),
            vec![0.6, 0.2],
            vec![0.4, 0.2],
        )
        .unwrap()
    }

    #[test]
    fn noiseless_single_state_has_zero_variance() {
        let r = estimate_sample_exponent(&single(0.1, 0.0), &EstimatorConfig::new(5.0, 20, 1)).unwrap();
        assert!(r.per_path.iter().all(|v| (v + 0.9).abs() < 1e-14));
        assert!(r.standard_error < 1e-14);
        assert_eq!(r.z_score, 0.0);
    }

    #[test]
    fn unstable_scalar_sample_exponent() {
        let r = estimate_sample_exponent(&single(2.0, 1.0), &EstimatorConfig::new(100.0, 200, 7)).unwrap();
        assert!(r.within(3.0), "{} ± {}", r.estimate, r.standard_error);
        assert!((r.reference - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reports_are_reproducible() {
        let m = mild_two_state();
        let c = EstimatorConfig::new(10.0, 50, 42).with_grid_points(10);
        let a = estimate_moment_exponent(&m, 2.0, &c, &ConditionalGaussian).unwrap();
        let b = estimate_moment_exponent(&m, 2.0, &c, &ConditionalGaussian).unwrap();
        assert_eq!(a, b);
        let s1 = estimate_sample_exponent(&m, &c).unwrap();
        let s2 = estimate_sample_exponent(&m, &c).unwrap();
        assert_eq!(s1, s2);
        let c2 = EstimatorConfig { seed: 43, ..c };
        assert_ne!(estimate_sample_exponent(&m, &c2).unwrap().estimate, s1.estimate);
    }

    #[test]
    fn noiseless_moment_slope_is_p_times_heat_exponent() {
        let m = single(0.1, 0.0);
        let c = EstimatorConfig::new(10.0, 30, 3).with_grid_points(20);
        let r = estimate_moment_exponent(&m, 3.0, &c, &ConditionalGaussian).unwrap();
        assert!((r.estimate + 2.7).abs() < 1e-12);
        assert!(r.standard_error < 1e-12);
        assert!(r.heavy_tail.is_none());
    }

    #[test]
    fn scalar_moment_slope() {
        let m = single(2.0, 1.0);
        let c = EstimatorConfig::new(20.0, 4000, 5).with_grid_points(20);
        let r = estimate_moment_exponent(&m, 2.0, &c, &ConditionalGaussian).unwrap();
        // The chain has one state, so the conditional form is exact.
        assert!((r.estimate - 3.0).abs() < 1e-10);
        let mild = single(0.5, 0.3);
        let c = EstimatorConfig::new(4.0, 4000, 5).with_grid_points(8);
        let full = estimate_moment_exponent(&mild, 2.0, &c, &FullSample).unwrap();
        assert!((full.reference + 0.91).abs() < 1e-12);
        assert!(full.standard_error > 0.0);
        assert!(full.within(3.0), "{} ± {}", full.estimate, full.standard_error);
    }

    #[test]
    fn estimator_forms_agree() {
        let m = mild_two_state();
        let c = EstimatorConfig::new(8.0, 4000, 9).with_grid_points(8);
        let a = estimate_moment_exponent(&m, 1.5, &c, &ConditionalGaussian).unwrap();
        let b = estimate_moment_exponent(&m, 1.5, &c, &FullSample).unwrap();
        let se = a.standard_error.hypot(b.standard_error);
        assert!((a.estimate - b.estimate).abs() <= 3.0 * se, "{} vs {} (se {se})", a.estimate, b.estimate);
        assert!(a.standard_error < b.standard_error);
    }

    #[test]
    fn curve_matches_growth_oracle() {
        let m = mild_two_state();
        let p = 2.0;
        let c = EstimatorConfig::new(6.0, 4000, 11).with_grid_points(6);
        let r = estimate_moment_exponent(&m, p, &c, &ConditionalGaussian).unwrap();
        let g = analytic::moment_weights(&m, p).unwrap();
        let oracle = growth_oracle(m.generator(), &g, &c.grid).unwrap();
        for (pt, o) in r.curve.iter().zip(&oracle) {
            let expected = -p * 1.0 * o.t + o.t * o.rate[c.start_state];
            assert!((pt.log_moment - expected).abs() <= 3.0 * pt.se, "t={}: {} vs {expected} (se {})", pt.t, pt.log_moment, pt.se);
        }
    }

    #[test]
    fn standard_error_scales_with_paths() {
        let m = mild_two_state();
        let se = |n| estimate_sample_exponent(&m, &EstimatorConfig::new(5.0, n, 2)).unwrap().standard_error;
        let (a, b, c) = (se(100), se(1000), se(10000));
        for ratio in [a / b, b / c] {
            assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn heavy_tails_are_flagged() {
        let m = single(0.0, 2.0);
        let c = EstimatorConfig::new(10.0, 2000, 1).with_grid_points(10);
        let r = estimate_moment_exponent(&m, 2.0, &c, &FullSample).unwrap();
        assert!(r.heavy_tail.is_some());
    }

    #[test]
    fn invalid_configs() {
        let m = single(0.1, 0.0);
        let mut c = EstimatorConfig::new(1.0, 0, 0);
        assert!(estimate_sample_exponent(&m, &c).is_err());
        c.n_paths = 1;
        c.grid = vec![0.5, 2.0];
        assert!(matches!(estimate_sample_exponent(&m, &c), Err(Error::TimeOutOfRange { .. })));
        c.grid = vec![0.5];
        c.start_state = 1;
        assert!(matches!(estimate_sample_exponent(&m, &c), Err(Error::StateOutOfRange { .. })));
        c.start_state = 0;
        assert!(matches!(estimate_moment_exponent(&m, 0.0, &c, &ConditionalGaussian), Err(Error::NonpositiveP(_))));
    }

    #[test]
    fn noiseless_convergence_gap_is_zero() {
        let m = single(0.1, 0.0);
        let c = EstimatorConfig::new(1.0, 5, 0).with_grid_points(4);
        let rows = convergence_table(&m, None, &[1.0, 10.0, 100.0], &c, &ConditionalGaussian).unwrap();
        assert!(rows.iter().all(|r| r.gap < 1e-14));
        let rows = convergence_table(&m, Some(2.0), &[1.0, 10.0], &c, &ConditionalGaussian).unwrap();
        assert!(rows.iter().all(|r| r.gap < 1e-12));
    }

    #[test]
    fn registry_defaults_to_conditional_form() {
        let r = moment_estimators();
        assert_eq!(r.default_name(), "conditional-gaussian");
        assert!(r.get("full-sample").is_ok());
    }
}
