//! Large deviations of the chain's occupation measure.
//!
//! The growth rate `Λ(g) = lim (1/t) log E exp ∫₀ᵗ g(r(s)) ds` has three
//! independent descriptions, each implemented here:
//!
//! * the variational form `sup_μ {⟨g, μ⟩ − I(μ)}` with the rate function `I`
//!   ([`rate`], [`variational`]);
//! * the principal eigenvalue of the tilted generator `Γ + diag(g)`
//!   ([`eigen`]);
//! * the finite-horizon values `(1/t) log E_i exp ∫₀ᵗ g` from the matrix
//!   exponential ([`oracle`]).
//!
//! The first two are exposed as interchangeable [`GrowthRateBackend`]s.

pub mod eigen;
pub mod oracle;
pub mod rate;
pub mod variational;

pub use eigen::{dense_eigenvalue, power_iteration, PerronRoot, PowerIterationOptions};
pub use oracle::{growth_oracle, GrowthPoint};
pub use rate::{rate_function, rate_function_with, RateFunctionEvaluation, RateOptions};
pub use variational::{cross_check, direct_sup, DirectSup, VariationalResult};

use crate::ctmc::Generator;
use crate::error::Result;
use crate::registry::{Registry, Strategy};

/// A way of computing `Λ(g)` for a chain and per-state weights.
pub trait GrowthRateBackend: Strategy {
    fn growth_rate(&self, generator: &Generator, weights: &[f64]) -> Result<f64>;
}

/// Shifted power iteration with a Collatz–Wielandt stopping rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerIterationBackend {
    pub options: PowerIterationOptions,
}

impl Strategy for PowerIterationBackend {
    fn name(&self) -> &'static str {
        "power-iteration"
    }
    fn description(&self) -> &'static str {
        "Perron root of the shifted tilted generator by power iteration"
    }
}

impl GrowthRateBackend for PowerIterationBackend {
    fn growth_rate(&self, generator: &Generator, weights: &[f64]) -> Result<f64> {
        Ok(power_iteration(generator, weights, self.options)?.value)
    }
}

/// Largest real part among all eigenvalues from a dense Schur decomposition.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseEigenBackend;

impl Strategy for DenseEigenBackend {
    fn name(&self) -> &'static str {
        "dense-eigen"
    }
    fn description(&self) -> &'static str {
        "dominant eigenvalue of the tilted generator by dense eigensolve"
    }
}

impl GrowthRateBackend for DenseEigenBackend {
    fn growth_rate(&self, generator: &Generator, weights: &[f64]) -> Result<f64> {
        dense_eigenvalue(generator, weights)
    }
}

/// Direct maximization of `⟨g, μ⟩ − I(μ)` over the simplex.
#[derive(Debug, Clone, Copy, Default)]
pub struct VariationalBackend;

impl Strategy for VariationalBackend {
    fn name(&self) -> &'static str {
        "variational"
    }
    fn description(&self) -> &'static str {
        "supremum of <g, mu> - I(mu) with an inner Newton solve and an outer BFGS search"
    }
}

impl GrowthRateBackend for VariationalBackend {
    fn growth_rate(&self, generator: &Generator, weights: &[f64]) -> Result<f64> {
        Ok(direct_sup(generator, weights)?.lambda)
    }
}

/// Registry with every built-in backend; `power-iteration` is the default.
pub fn growth_backends() -> Registry<dyn GrowthRateBackend> {
    let mut r: Registry<dyn GrowthRateBackend> = Registry::new("growth-rate backend");
    r.register(Box::new(PowerIterationBackend::default()))
        .register(Box::new(DenseEigenBackend))
        .register(Box::new(VariationalBackend));
    r
}

/// Tilted principal eigenvalue with the default backend.
pub fn tilted_principal_eigenvalue(generator: &Generator, weights: &[f64]) -> Result<f64> {
    PowerIterationBackend::default().growth_rate(generator, weights)
}

/// `Λ(g)` by the direct route, cross-checked against the default eigenvalue
/// backend.
pub fn variational_sup(generator: &Generator, weights: &[f64]) -> Result<VariationalResult> {
    let eigen = tilted_principal_eigenvalue(generator, weights)?;
    cross_check(generator, weights, eigen)
}
