//! Dirichlet Laplacian eigenstructure and projection of initial data.
//!
//! On the interval `(0, L)` the eigenpairs of `−∂²/∂x²` with zero boundary
//! values are `λ_n = (nπ/L)²`, `e_n(x) = √(2/L) sin(nπx/L)`. Other domains
//! enter only through a user-supplied list of `(λ_n, u_n⁰)` pairs, since
//! every exponent formula depends on the spectrum through those numbers.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Relative cutoff below which a coefficient counts as zero when locating
/// the leading mode.
pub const LEADING_COEFFICIENT_THRESHOLD: f64 = 1e-12;

pub const DEFAULT_N_MODES: usize = 64;

pub const MIN_DEFAULT_QUAD_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Interval { length: f64 },
    UserSupplied,
}

/// Truncated Dirichlet eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    domain: Domain,
}

impl SpectralBasis {
    /// Analytic basis on `(0, length)` with the first `n_modes` modes.
    pub fn interval(length: f64, n_modes: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidLength(length));
        }
        if n_modes == 0 {
            return Err(Error::InvalidArgument("n_modes must be at least 1".into()));
        }
        let eigenvalues = (1..=n_modes).map(|n| (n as f64 * PI / length).powi(2)).collect();
        Ok(Self { eigenvalues, domain: Domain::Interval { length } })
    }

    /// Basis known only through its eigenvalues (general domains).
    pub fn user_supplied(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("at least one eigenvalue is required".into()));
        }
        if eigenvalues.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("eigenvalues must be positive and finite".into()));
        }
        if eigenvalues.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("eigenvalues must be strictly increasing".into()));
        }
        Ok(Self { eigenvalues, domain: Domain::UserSupplied })
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `λ_n` for 1-based `n`.
    pub fn eigenvalue(&self, n: usize) -> Result<f64> {
        self.check_mode(n)?;
        Ok(self.eigenvalues[n - 1])
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Length of the interval domain, if any.
    pub fn length(&self) -> Option<f64> {
        match self.domain {
            Domain::Interval { length } => Some(length),
            Domain::UserSupplied => None,
        }
    }

    /// First eigenvalue beyond the truncation, or the last retained one when
    /// the spectrum is user-supplied (a valid but looser bound).
    pub fn next_eigenvalue(&self) -> f64 {
        match self.domain {
            Domain::Interval { length } => ((self.n_modes() + 1) as f64 * PI / length).powi(2),
            Domain::UserSupplied => *self.eigenvalues.last().unwrap(),
        }
    }

    /// `e_n(x)` for 1-based `n`.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        self.check_mode(n)?;
        match self.domain {
            Domain::Interval { length } => {
                Ok((2.0 / length).sqrt() * (n as f64 * PI * x / length).sin())
            }
            Domain::UserSupplied => Err(Error::NoEigenfunctions),
        }
    }

    fn check_mode(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_modes() {
            return Err(Error::ModeOutOfRange { n, n_modes: self.n_modes() });
        }
        Ok(())
    }

    /// Projects `u0` onto the basis by Gauss–Legendre quadrature with
    /// `quad_nodes` nodes, which must be at least `2·n_modes + 1`.
    pub fn project_initial<F: Fn(f64) -> f64>(&self, u0: F, quad_nodes: usize) -> Result<InitialData> {
        let length = self.length().ok_or(Error::NoEigenfunctions)?;
        let min = 2 * self.n_modes() + 1;
        if quad_nodes < min {
            return Err(Error::TooFewQuadratureNodes { nodes: quad_nodes, modes: self.n_modes(), min });
        }
        let (xs, ws) = gauss_legendre_on(quad_nodes, 0.0, length);
        let values: Vec<f64> = xs.iter().map(|&x| u0(x)).collect();
        let norm_sq: f64 = values.iter().zip(&ws).map(|(v, w)| w * v * v).sum();
        let scale = (2.0 / length).sqrt();
        let coefficients = (1..=self.n_modes())
            .map(|n| {
                let k = n as f64 * PI / length;
                xs.iter()
                    .zip(&ws)
                    .zip(&values)
                    .map(|((x, w), v)| w * v * scale * (k * x).sin())
                    .sum()
            })
            .collect();
        InitialData::new(coefficients, Some(norm_sq.sqrt()))
    }

    /// Default quadrature size for this basis: `4·n_modes`, but never fewer
    /// than [`MIN_DEFAULT_QUAD_NODES`] so that a handful of modes is still
    /// projected to near machine precision.
    pub fn default_quad_nodes(&self) -> usize {
        (4 * self.n_modes()).max(MIN_DEFAULT_QUAD_NODES)
    }
}

/// Coefficients `u_n⁰ = ⟨u⁰, e_n⟩` of deterministic initial data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialData {
    coefficients: Vec<f64>,
    leading_index: usize,
    norm: Option<f64>,
}

impl InitialData {
    /// Wraps precomputed coefficients. `norm` is `‖u⁰‖` when known
    /// (it feeds the truncation-tail bound).
    pub fn new(coefficients: Vec<f64>, norm: Option<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("initial coefficients must be finite".into()));
        }
        let max = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            return Err(Error::AllCoefficientsBelowThreshold);
        }
        let leading_index = coefficients
            .iter()
            .position(|c| c.abs() > LEADING_COEFFICIENT_THRESHOLD * max)
            .map(|i| i + 1)
            .ok_or(Error::AllCoefficientsBelowThreshold)?;
        Ok(Self { coefficients, leading_index, norm })
    }

    /// Exactly the `n`-th eigenfunction (1-based) among `n_modes`.
    pub fn single_mode(n: usize, n_modes: usize) -> Result<Self> {
        if n == 0 || n > n_modes {
            return Err(Error::ModeOutOfRange { n, n_modes });
        }
        let mut c = vec![0.0; n_modes];
        c[n - 1] = 1.0;
        Self::new(c, Some(1.0))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `n₀`, the 1-based index of the first coefficient above threshold.
    pub fn leading_index(&self) -> usize {
        self.leading_index
    }

    pub fn norm(&self) -> Option<f64> {
        self.norm
    }

    /// `(Σ_{n ≤ N} (u_n⁰)²)^{1/2}`.
    pub fn truncated_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `(Σ_{n > N} (u_n⁰)²)^{1/2}` estimated from the full norm; zero when
    /// the norm is unknown.
    pub fn tail_norm(&self) -> f64 {
        match self.norm {
            Some(n) => (n * n - self.truncated_norm().powi(2)).max(0.0).sqrt(),
            None => 0.0,
        }
    }
}
