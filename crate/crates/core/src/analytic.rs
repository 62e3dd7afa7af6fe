//! Closed-form Lyapunov exponents and stability predicates.
//!
//! For deterministic `u⁰ ≠ 0` with leading mode `n₀` the almost-sure exponent
//! is `−(λ_{n₀} − Σ_i π_i(α_i − σ_i²/2))`, and the p-th moment exponent is
//! `−pλ_{n₀} + Λ(g)` with `g_i = pα_i + p(p−1)σ_i²/2` and `Λ` the variational
//! growth rate of the chain. Replacing `λ_{n₀}` by `λ_1` gives bounds valid for
//! any initial data.

use serde::Serialize;

use crate::ctmc::Generator;
use crate::error::{Error, Result};
use crate::hybrid::HybridHeatModel;
use crate::large_deviation::GrowthRateBackend;

/// Margins closer to zero than this are reported as indeterminate.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Which eigenvalue enters the exponent formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExponentMode {
    /// `λ_{n₀}`: the exact limit for this deterministic initial datum.
    #[serde(rename = "exact-for-deterministic-u0")]
    Exact,
    /// `λ_1`: an upper bound for every initial datum.
    #[serde(rename = "upper-bound-any-u0")]
    UpperBound,
}

fn reference_eigenvalue(model: &HybridHeatModel, mode: ExponentMode) -> f64 {
    match mode {
        ExponentMode::Exact => model.basis().eigenvalues()[model.initial().leading_index() - 1],
        ExponentMode::UpperBound => model.basis().eigenvalues()[0],
    }
}

/// Exponent of the noiseless switching equation (noise coefficients ignored).
pub fn heat_sample_exponent(model: &HybridHeatModel, mode: ExponentMode) -> Result<f64> {
    let mean_alpha = model.stationary().expectation(model.alpha());
    Ok(-(reference_eigenvalue(model, mode) - mean_alpha))
}

/// Almost-sure exponent `−(λ − Σ π_i(α_i − σ_i²/2))`.
pub fn sample_exponent(model: &HybridHeatModel, mode: ExponentMode) -> Result<f64> {
    let effective: Vec<f64> = model
        .alpha()
        .iter()
        .zip(model.sigma_sq())
        .map(|(a, s)| a - 0.5 * s)
        .collect();
    Ok(-(reference_eigenvalue(model, mode) - model.stationary().expectation(&effective)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Stable,
    Unstable,
    Boundary,
}

/// Verdict with the signed margin of the defining strict inequality
/// (positive means stable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub margin: f64,
}

impl StabilityVerdict {
    pub fn from_margin(margin: f64) -> Self {
        let verdict = if margin.abs() <= BOUNDARY_TOLERANCE {
            Verdict::Boundary
        } else if margin > 0.0 {
            Verdict::Stable
        } else {
            Verdict::Unstable
        };
        Self { verdict, margin }
    }

    /// Stability verdict for an exponent: stable iff the exponent is negative.
    pub fn from_exponent(exponent: f64) -> Self {
        Self::from_margin(-exponent)
    }

    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

/// Almost-sure stability of the two-state scalar-noise equation on `(0, π)`
/// with `u⁰ = e_1`, drift `(a, b)` and noise `(c, d)`:
///
/// ```text
/// (aγ_21 + bγ_12)/(γ_12 + γ_21) < 1 + (c²γ_21 + d²γ_12)/(2(γ_12 + γ_21))
/// ```
pub fn two_state_stability(a: f64, b: f64, c: f64, d: f64, gamma12: f64, gamma21: f64) -> Result<StabilityVerdict> {
    if !(gamma12 > 0.0 && gamma21 > 0.0) {
        return Err(Error::NonpositiveRates { gamma12, gamma21 });
    }
    let total = gamma12 + gamma21;
    let lhs = (a * gamma21 + b * gamma12) / total;
    let rhs = 1.0 + (c * c * gamma21 + d * d * gamma12) / (2.0 * total);
    Ok(StabilityVerdict::from_margin(rhs - lhs))
}

/// Tilting weights `g_i = pα_i + p(p−1)σ_i²/2`.
pub fn moment_weights(model: &HybridHeatModel, p: f64) -> Result<Vec<f64>> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::NonpositiveP(p));
    }
    Ok(model
        .alpha()
        .iter()
        .zip(model.sigma_sq())
        .map(|(a, s)| p * a + 0.5 * p * (p - 1.0) * s)
        .collect())
}

/// p-th moment exponent `−pλ + Λ(g)`, with `Λ` from `backend`.
pub fn moment_exponent(
    model: &HybridHeatModel,
    p: f64,
    mode: ExponentMode,
    backend: &dyn GrowthRateBackend,
) -> Result<f64> {
    let g = moment_weights(model, p)?;
    let lambda = backend.growth_rate(model.generator(), &g)?;
    Ok(-p * reference_eigenvalue(model, mode) + lambda)
}

/// Lower bound `−pλ_{n₀} + Σ g_i π_i` obtained by taking `μ = π` in the
/// supremum (where the rate function vanishes).
pub fn moment_lower_bound_pi(model: &HybridHeatModel, p: f64) -> Result<f64> {
    let g = moment_weights(model, p)?;
    Ok(-p * reference_eigenvalue(model, ExponentMode::Exact) + model.stationary().expectation(&g))
}

/// Right-hand side of the sufficient explosion condition
/// `a + b > (q² − 2q^{3/2} + 2q − 2q^{1/2} + 1)/(3q + 1)` for the two-state
/// chain with rates `γ_12 = 1`, `γ_21 = q`, tested at `μ = (1/2, 1/2)`.
pub fn switching_explosion_threshold(q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::NonpositiveQ(q));
    }
    let s = q.sqrt();
    Ok((q * q - 2.0 * q * s + 2.0 * q - 2.0 * s + 1.0) / (3.0 * q + 1.0))
}

/// Closed-form exponents and verdicts for one p.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEntry {
    pub p: f64,
    pub weights: Vec<f64>,
    pub growth_rate: f64,
    pub exponent: f64,
    pub exponent_upper_bound: f64,
    pub lower_bound_pi: f64,
    pub verdict: StabilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub stationary: Vec<f64>,
    pub leading_index: usize,
    pub leading_eigenvalue: f64,
    pub first_eigenvalue: f64,
    pub heat_exponent: f64,
    pub heat_exponent_upper_bound: f64,
    pub sample_exponent: f64,
    pub sample_exponent_upper_bound: f64,
    pub sample_verdict: StabilityVerdict,
    pub sample_verdict_any_u0: StabilityVerdict,
    pub growth_backend: String,
    pub moments: Vec<MomentEntry>,
}

/// Every closed-form quantity for `model` and each requested `p`.
pub fn analyze(model: &HybridHeatModel, ps: &[f64], backend: &dyn GrowthRateBackend) -> Result<ExponentReport> {
    let sample = sample_exponent(model, ExponentMode::Exact)?;
    let sample_bound = sample_exponent(model, ExponentMode::UpperBound)?;
    let moments = ps
        .iter()
        .map(|&p| {
            let weights = moment_weights(model, p)?;
            let growth_rate = backend.growth_rate(model.generator(), &weights)?;
            let exponent = -p * reference_eigenvalue(model, ExponentMode::Exact) + growth_rate;
            Ok(MomentEntry {
                p,
                exponent,
                exponent_upper_bound: -p * reference_eigenvalue(model, ExponentMode::UpperBound) + growth_rate,
                lower_bound_pi: moment_lower_bound_pi(model, p)?,
                verdict: StabilityVerdict::from_exponent(exponent),
                weights,
                growth_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExponentReport {
        stationary: model.stationary().pi.clone(),
        leading_index: model.initial().leading_index(),
        leading_eigenvalue: reference_eigenvalue(model, ExponentMode::Exact),
        first_eigenvalue: reference_eigenvalue(model, ExponentMode::UpperBound),
        heat_exponent: heat_sample_exponent(model, ExponentMode::Exact)?,
        heat_exponent_upper_bound: heat_sample_exponent(model, ExponentMode::UpperBound)?,
        sample_exponent: sample,
        sample_exponent_upper_bound: sample_bound,
        sample_verdict: StabilityVerdict::from_exponent(sample),
        sample_verdict_any_u0: StabilityVerdict::from_exponent(sample_bound),
        growth_backend: backend.name().to_string(),
        moments,
    })
}

/// Two-state model on `(0, π)` with `u⁰ = e_1`, drift `(a, b)`, scalar noise
/// `(c, d)`.
pub fn two_state_model(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    gamma12: f64,
    gamma21: f64,
    n_modes: usize,
) -> Result<HybridHeatModel> {
    HybridHeatModel::scalar_noise(
        Generator::two_state(gamma12, gamma21)?,
        crate::spectral::SpectralBasis::interval(std::f64::consts::PI, n_modes)?,
        crate::spectral::InitialData::single_mode(1, n_modes)?,
        vec![a, b],
        vec![c, d],
    )
}
