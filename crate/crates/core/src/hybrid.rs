//! Pathwise solution of the Markov-switching stochastic heat equation
//!
//! ```text
//! ∂u/∂t = Δu + α(r(t)) u + Σ_j β_j(r(t)) u Ḃ_j(t),   u = 0 on ∂O,   u(0) = u⁰
//! ```
//!
//! Along one realization of the chain `r` and the Brownian motions `B_j` the
//! solution is known in closed form. With
//!
//! ```text
//! A(t) = ∫₀ᵗ α(r) ds,   Q(t) = ∫₀ᵗ σ²(r) ds,   M(t) = Σ_j ∫₀ᵗ β_j(r) dB_j,   σ_i² = Σ_j β_ij²
//! ```
//!
//! each Galerkin mode is `z_n(t) = u_n⁰ exp{−λ_n t + A − Q/2 + M}` and the field
//! factorizes as `u(t) = S(t)·v(t)` with `S = exp{−Q/2 + M}` and `v` the
//! noiseless switching solution. Nothing here is time-stepped: `A` and `Q` are
//! exact on the jump skeleton and the stochastic integral is a finite sum of
//! Gaussian increments over intervals on which the integrand is constant.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::ctmc::{Generator, MarkovPath, StationaryDistribution};
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::spectral::{InitialData, SpectralBasis};

/// Full model: chain, spectrum, initial data and per-state coefficients.
#[derive(Debug, Clone)]
pub struct HybridHeatModel {
    generator: Generator,
    stationary: StationaryDistribution,
    basis: SpectralBasis,
    initial: InitialData,
    alpha: Vec<f64>,
    beta: Vec<Vec<f64>>,
    n_channels: usize,
}

impl HybridHeatModel {
    /// `beta[i][j]` is the coefficient of channel `j` in state `i`; every row
    /// must have the same length `m` (`m = 0` gives the noiseless equation).
    pub fn new(
        generator: Generator,
        basis: SpectralBasis,
        initial: InitialData,
        alpha: Vec<f64>,
        beta: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = generator.n_states();
        if alpha.len() != n {
            return Err(Error::DimensionMismatch { what: "alpha", expected: n, found: alpha.len() });
        }
        if beta.len() != n {
            return Err(Error::DimensionMismatch { what: "beta", expected: n, found: beta.len() });
        }
        let n_channels = beta[0].len();
        if let Some(row) = beta.iter().find(|r| r.len() != n_channels) {
            return Err(Error::DimensionMismatch {
                what: "beta row",
                expected: n_channels,
                found: row.len(),
            });
        }
        if alpha.iter().chain(beta.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("alpha and beta must be finite".into()));
        }
        if initial.coefficients().len() != basis.n_modes() {
            return Err(Error::DimensionMismatch {
                what: "initial coefficients",
                expected: basis.n_modes(),
                found: initial.coefficients().len(),
            });
        }
        let stationary = generator.stationary_distribution()?;
        Ok(Self { generator, stationary, basis, initial, alpha, beta, n_channels })
    }

    /// Noiseless model (`m = 0`).
    pub fn deterministic(
        generator: Generator,
        basis: SpectralBasis,
        initial: InitialData,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        let n = generator.n_states();
        Self::new(generator, basis, initial, alpha, vec![Vec::new(); n])
    }

    /// Scalar-noise model with `beta[i]` the single channel's coefficient.
    pub fn scalar_noise(
        generator: Generator,
        basis: SpectralBasis,
        initial: InitialData,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        Self::new(generator, basis, initial, alpha, beta.into_iter().map(|b| vec![b]).collect())
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn stationary(&self) -> &StationaryDistribution {
        &self.stationary
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn n_states(&self) -> usize {
        self.generator.n_states()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// `σ_i² = Σ_j β_ij²`.
    pub fn sigma_sq(&self) -> Vec<f64> {
        self.beta.iter().map(|r| r.iter().map(|b| b * b).sum()).collect()
    }

    /// True when every noise coefficient is zero.
    pub fn is_noiseless(&self) -> bool {
        self.beta.iter().flatten().all(|b| *b == 0.0)
    }

    /// `log ‖v(t)‖` for the noiseless switching solution along `path`.
    pub fn log_deterministic_norm(&self, path: &MarkovPath, t: f64) -> Result<f64> {
        let a = self.drift_integral(path, t)?;
        Ok(self.log_spectral_sum(t) + a)
    }

    /// `‖v(t)‖` with its truncation-tail bound.
    pub fn deterministic_norm(&self, path: &MarkovPath, t: f64) -> Result<NormValue> {
        let a = self.drift_integral(path, t)?;
        Ok(self.norm_value(t, a))
    }

    /// `E[‖u(t)‖^p | r]` in log form: the Brownian factor integrates out to
    /// `exp{p(p−1)/2 · Q(t)}` given the chain path.
    pub fn log_conditional_moment(&self, path: &MarkovPath, p: f64, t: f64) -> Result<f64> {
        let log_v = self.log_deterministic_norm(path, t)?;
        let q = if t == 0.0 { 0.0 } else { path.path_integral(&self.sigma_sq(), t)? };
        Ok(p * log_v + 0.5 * p * (p - 1.0) * q)
    }

    /// `∫₀ᵗ α(r(s)) ds`, with `t = 0` allowed.
    fn drift_integral(&self, path: &MarkovPath, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        path.path_integral(&self.alpha, t)
    }

    /// `½ log Σ_n exp(−2λ_n t)(u_n⁰)²`.
    fn log_spectral_sum(&self, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .basis
            .eigenvalues()
            .iter()
            .zip(self.initial.coefficients())
            .filter(|(_, c)| **c != 0.0)
            .map(|(l, c)| 2.0 * (c.abs().ln() - l * t))
            .collect();
        0.5 * log_sum_exp(&terms)
    }

    /// Norm `exp(log_spectral_sum + shift)` where `shift` is `A(t)` or
    /// `A(t) − Q(t)/2 + M(t)`.
    fn norm_value(&self, t: f64, shift: f64) -> NormValue {
        let log_norm = self.log_spectral_sum(t) + shift;
        let tail = self.initial.tail_norm();
        let tail_bound = if tail == 0.0 {
            0.0
        } else {
            (tail.ln() - self.basis.next_eigenvalue() * t + shift).exp()
        };
        NormValue { log_norm, tail_bound }
    }
}

/// A norm value kept in log form, plus the bound on the mode-truncation tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormValue {
    pub log_norm: f64,
    pub tail_bound: f64,
}

impl NormValue {
    pub fn value(&self) -> f64 {
        self.log_norm.exp()
    }
}

/// Brownian increments aligned with the chain's jumps and a declared
/// evaluation grid.
///
/// The breakpoints are `{0} ∪ jump times ∪ grid`, truncated at the last grid
/// time. Each channel gets one independent `N(0, Δt)` increment per interval
/// between consecutive breakpoints, so the coefficient of every increment is
/// constant and the stochastic integral is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingNoise {
    breakpoints: Vec<f64>,
    increments: Vec<Vec<f64>>,
    n_channels: usize,
}

impl DrivingNoise {
    pub fn sample<R: Rng + ?Sized>(
        path: &MarkovPath,
        grid: &[f64],
        n_channels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        validate_grid(grid, path.horizon())?;
        let end = *grid.last().unwrap();
        let mut breakpoints: Vec<f64> = path
            .jump_times()
            .iter()
            .copied()
            .filter(|&t| t <= end)
            .chain(grid.iter().copied())
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let increments = breakpoints
            .windows(2)
            .map(|w| {
                let sd = (w[1] - w[0]).sqrt();
                (0..n_channels)
                    .map(|_| sd * Distribution::<f64>::sample(&StandardNormal, rng))
                    .collect()
            })
            .collect();
        Ok(Self { breakpoints, increments, n_channels })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `increments()[k][j]` is `B_j(b_{k+1}) − B_j(b_k)`.
    pub fn increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }
}

fn validate_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("evaluation grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("evaluation grid must be strictly increasing".into()));
    }
    if let Some(&t) = grid.iter().find(|&&t| !(t >= 0.0 && t <= horizon)) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    Ok(())
}

/// One realization `(r, B)` of the model with cumulative integrals cached at
/// every noise breakpoint.
#[derive(Debug, Clone)]
pub struct PathSolution<'a> {
    model: &'a HybridHeatModel,
    path: MarkovPath,
    noise: DrivingNoise,
    drift: Vec<f64>,
    quad_var: Vec<f64>,
    martingale: Vec<f64>,
}

impl<'a> PathSolution<'a> {
    pub fn new(model: &'a HybridHeatModel, path: MarkovPath, noise: DrivingNoise) -> Result<Self> {
        if noise.n_channels() != model.n_channels() {
            return Err(Error::DimensionMismatch {
                what: "noise channels",
                expected: model.n_channels(),
                found: noise.n_channels(),
            });
        }
        let sigma_sq = model.sigma_sq();
        let bp = noise.breakpoints();
        let mut drift = Vec::with_capacity(bp.len());
        let mut quad_var = Vec::with_capacity(bp.len());
        let mut martingale = Vec::with_capacity(bp.len());
        let (mut a, mut q, mut m) = (0.0, 0.0, 0.0);
        drift.push(a);
        quad_var.push(q);
        martingale.push(m);
        for (w, db) in bp.windows(2).zip(noise.increments()) {
            // Breakpoints include every jump, so the state is constant here.
            let state = path.state_at(w[0]);
            let dt = w[1] - w[0];
            a += model.alpha[state] * dt;
            q += sigma_sq[state] * dt;
            m += model.beta[state].iter().zip(db).map(|(b, d)| b * d).sum::<f64>();
            drift.push(a);
            quad_var.push(q);
            martingale.push(m);
        }
        Ok(Self { model, path, noise, drift, quad_var, martingale })
    }

    /// Simulates the chain from `start_state` up to the last grid time and
    /// draws matching Brownian increments, all from `rng`.
    pub fn simulate<R: Rng + ?Sized>(
        model: &'a HybridHeatModel,
        start_state: usize,
        grid: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        let horizon = *grid
            .last()
            .ok_or_else(|| Error::InvalidArgument("evaluation grid is empty".into()))?;
        let path = model.generator().simulate_path(start_state, horizon, rng)?;
        let noise = DrivingNoise::sample(&path, grid, model.n_channels(), rng)?;
        Self::new(model, path, noise)
    }

    pub fn model(&self) -> &HybridHeatModel {
        self.model
    }

    pub fn path(&self) -> &MarkovPath {
        &self.path
    }

    pub fn noise(&self) -> &DrivingNoise {
        &self.noise
    }

    fn index(&self, t: f64) -> Result<usize> {
        let bp = self.noise.breakpoints();
        match bp.binary_search_by(|b| b.total_cmp(&t)) {
            Ok(i) => Ok(i),
            Err(_) => Err(Error::TimeNotOnGrid { t }),
        }
    }

    /// `(A(t), Q(t), M(t))`.
    pub fn integrals(&self, t: f64) -> Result<(f64, f64, f64)> {
        let i = self.index(t)?;
        Ok((self.drift[i], self.quad_var[i], self.martingale[i]))
    }

    /// `log S(t) = −Q(t)/2 + M(t)`.
    pub fn log_stochastic_factor(&self, t: f64) -> Result<f64> {
        let (_, q, m) = self.integrals(t)?;
        Ok(-0.5 * q + m)
    }

    pub fn stochastic_factor(&self, t: f64) -> Result<f64> {
        Ok(self.log_stochastic_factor(t)?.exp())
    }

    /// `‖v(t)‖` along this path.
    pub fn deterministic_norm(&self, t: f64) -> Result<NormValue> {
        let (a, _, _) = self.integrals(t)?;
        Ok(self.model.norm_value(t, a))
    }

    /// `‖u(t)‖ = S(t)·‖v(t)‖`.
    pub fn solution_norm(&self, t: f64) -> Result<NormValue> {
        let (a, q, m) = self.integrals(t)?;
        Ok(self.model.norm_value(t, a - 0.5 * q + m))
    }

    /// `z_n(t)` for 1-based `n`.
    pub fn mode_coefficient(&self, n: usize, t: f64) -> Result<f64> {
        let lambda = self.model.basis.eigenvalue(n)?;
        let c = self.model.initial.coefficients()[n - 1];
        if c == 0.0 {
            return Ok(0.0);
        }
        let (a, q, m) = self.integrals(t)?;
        Ok(c * (-lambda * t + a - 0.5 * q + m).exp())
    }

    /// `u(t, x)` at each point of `xs`, truncated at the basis size.
    pub fn evaluate_field(&self, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
        let length = self.model.basis.length().ok_or(Error::NoEigenfunctions)?;
        if let Some(&x) = xs.iter().find(|&&x| !(x > 0.0 && x < length)) {
            return Err(Error::PointOutsideDomain { x, length });
        }
        let coeffs: Vec<f64> = (1..=self.model.basis.n_modes())
            .map(|n| self.mode_coefficient(n, t))
            .collect::<Result<_>>()?;
        xs.iter()
            .map(|&x| {
                coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(i, c)| Ok(c * self.model.basis.eigenfunction(i + 1, x)?))
                    .sum()
            })
            .collect()
    }

    /// Norm time series at the given grid times.
    pub fn norm_series(&self, grid: &[f64]) -> Result<Vec<NormSample>> {
        grid.iter()
            .map(|&t| {
                let u = self.solution_norm(t)?;
                let v = self.deterministic_norm(t)?;
                Ok(NormSample {
                    t,
                    norm: u.value(),
                    log_norm: u.log_norm,
                    log_deterministic_norm: v.log_norm,
                    log_factor: self.log_stochastic_factor(t)?,
                    tail_bound: u.tail_bound,
                })
            })
            .collect()
    }
}

impl PathSolution<'_> {
    /// Euler–Maruyama integration of the Galerkin system
    /// `dz_n = (−λ_n + α(r)) z_n dt + Σ_j β_j(r) z_n dB_j`, driven by this
    /// realization's increments. Each step merges `stride` consecutive noise
    /// intervals and freezes the state at the step start. Returns `‖z(T)‖` at
    /// the last breakpoint. Only meant as an independent check of the closed
    /// form.
    pub fn euler_maruyama_norm(&self, stride: usize) -> Result<f64> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        let model = self.model;
        let bp = self.noise.breakpoints();
        let inc = self.noise.increments();
        let mut z = model.initial.coefficients().to_vec();
        let mut k = 0;
        while k < inc.len() {
            let end = (k + stride).min(inc.len());
            let state = self.path.state_at(bp[k]);
            let dt = bp[end] - bp[k];
            let noise: f64 = model.beta[state]
                .iter()
                .enumerate()
                .map(|(j, b)| b * inc[k..end].iter().map(|d| d[j]).sum::<f64>())
                .sum();
            for (zn, lambda) in z.iter_mut().zip(model.basis.eigenvalues()) {
                *zn *= 1.0 + (-lambda + model.alpha[state]) * dt + noise;
            }
            k = end;
        }
        Ok(z.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

/// One row of a norm time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSample {
    pub t: f64,
    pub norm: f64,
    pub log_norm: f64,
    pub log_deterministic_norm: f64,
    pub log_factor: f64,
    pub tail_bound: f64,
}
