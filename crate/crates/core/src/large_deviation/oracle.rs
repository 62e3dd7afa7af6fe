//! Finite-horizon growth of `E_i[exp ∫₀ᵗ g(r(s)) ds]`.
//!
//! By Feynman–Kac the vector `y_i(t) = E_i[exp ∫₀ᵗ g(r(s)) ds]` solves
//! `y' = (Γ + diag(g)) y`, `y(0) = 1`, so `y(t) = exp(tM)·1`. The exponential
//! is formed by scaling and squaring with a running log-scale, which keeps it
//! finite far beyond the overflow point of `exp(tΛ)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ctmc::Generator;
use crate::error::{Error, Result};
use crate::large_deviation::eigen::tilted_matrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub t: f64,
    /// `(1/t) log E_i[exp ∫₀ᵗ g(r(s)) ds]` for each starting state `i`.
    pub rate: Vec<f64>,
}

pub fn growth_oracle(generator: &Generator, weights: &[f64], t_grid: &[f64]) -> Result<Vec<GrowthPoint>> {
    let m = tilted_matrix(generator, weights)?;
    if t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be positive and increasing".into()));
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (e, log_scale) = scaled_exp(&(&m * t));
            let y = e * DVector::from_element(m.nrows(), 1.0);
            GrowthPoint { t, rate: y.iter().map(|v| (v.ln() + log_scale) / t).collect() }
        })
        .collect())
}

/// `exp(a) = exp(log_scale)·E`, by a degree-18 Taylor polynomial on
/// `a/2^s` (with `‖a‖₁/2^s ≤ 1/2`) followed by `s` renormalized squarings.
pub fn scaled_exp(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = a.nrows();
    let norm = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut e = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=18 {
        term = &term * &b / k as f64;
        e += &term;
    }
    let mut log_scale = 0.0;
    for _ in 0..s {
        e = &e * &e;
        log_scale *= 2.0;
        let m = e.amax();
        if m > 0.0 {
            e /= m;
            log_scale += m.ln();
        }
    }
    (e, log_scale)
}
