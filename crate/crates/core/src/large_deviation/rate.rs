//! Donsker–Varadhan rate function of a finite-state chain,
//!
//! ```text
//! I(μ) = −inf_{u > 0} Σ_{i,j} μ_i γ_ij u_j / u_i .
//! ```
//!
//! With `u = exp(w)` the objective `F(w) = Σ_{i,j} μ_i γ_ij exp(w_j − w_i)` is a
//! sum of exponentials of linear forms, hence convex; it is invariant under
//! `w ↦ w + c·1`, so `w_0` is pinned to zero.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::ctmc::Generator;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy)]
pub struct RateOptions {
    pub multistarts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { multistarts: 8, seed: 0x5eed_1a7e, max_iter: 500 }
    }
}

/// Value of `I(μ)` with the minimizing `u` (normalized so `u_1 = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFunctionEvaluation {
    pub mu: Vec<f64>,
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// `I(μ)` with default options.
pub fn rate_function(generator: &Generator, mu: &[f64]) -> Result<RateFunctionEvaluation> {
    rate_function_with(generator, mu, RateOptions::default())
}

pub fn rate_function_with(
    generator: &Generator,
    mu: &[f64],
    opts: RateOptions,
) -> Result<RateFunctionEvaluation> {
    check_probability(generator.n_states(), mu)?;
    let n = generator.n_states();
    let pi = generator.stationary_distribution()?.pi;
    let mut best: Option<InnerSolution> = None;
    let mut iterations = 0;
    for k in 0..opts.multistarts.max(1) {
        let w0: Vec<f64> = if k == 0 {
            vec![0.0; n]
        } else {
            let mut rng = stream_rng(opts.seed, k as u64);
            (0..n)
                .map(|i| {
                    if i == 0 {
                        0.0
                    } else {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (pi[i] / pi[0]).ln() + z
                    }
                })
                .collect()
        };
        let sol = minimize_log_objective(generator, mu, w0, opts.max_iter);
        iterations += sol.iterations;
        if best.as_ref().is_none_or(|b| sol.value < b.value) {
            best = Some(sol);
        }
    }
    let best = best.expect("at least one start");
    Ok(RateFunctionEvaluation {
        mu: mu.to_vec(),
        value: -best.value,
        minimizer: best.w.iter().map(|w| w.exp()).collect(),
        iterations,
        grad_norm: best.grad_norm,
    })
}

pub(crate) fn check_probability(n: usize, mu: &[f64]) -> Result<()> {
    if mu.len() != n {
        return Err(Error::DimensionMismatch { what: "mu", expected: n, found: mu.len() });
    }
    if mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::InvalidArgument("mu must have nonnegative finite entries".into()));
    }
    let s: f64 = mu.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("mu must sum to 1, sums to {s}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub(crate) struct InnerSolution {
    pub w: Vec<f64>,
    /// `F(w) = Σ μ_i γ_ij exp(w_j − w_i)` at the returned point.
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Off-diagonal terms `E_ij = μ_i γ_ij exp(w_j − w_i)` and the objective
/// value (which also carries the constant `Σ μ_i γ_ii`).
fn terms(generator: &Generator, mu: &[f64], w: &[f64]) -> (DMatrix<f64>, f64) {
    let n = mu.len();
    let mut e = DMatrix::zeros(n, n);
    let mut value = 0.0;
    for i in 0..n {
        if mu[i] == 0.0 {
            continue;
        }
        value += mu[i] * generator.rate(i, i);
        for j in 0..n {
            let r = generator.rate(i, j);
            if i != j && r > 0.0 {
                let v = mu[i] * r * (w[j] - w[i]).exp();
                e[(i, j)] = v;
                value += v;
            }
        }
    }
    (e, value)
}

/// Gradient of `F` in the free coordinates `w_1..w_{n-1}`.
fn gradient(e: &DMatrix<f64>) -> Vec<f64> {
    let n = e.nrows();
    (1..n).map(|k| e.column(k).sum() - e.row(k).sum()).collect()
}

/// Damped Newton on the convex objective. The Hessian is the weighted
/// Laplacian of the symmetrized terms `E_kl + E_lk`, restricted to the free
/// coordinates.
pub(crate) fn minimize_log_objective(
    generator: &Generator,
    mu: &[f64],
    w0: Vec<f64>,
    max_iter: usize,
) -> InnerSolution {
    let n = mu.len();
    let tol = 1e-14 * generator.scale().max(1e-300);
    let mut w = w0;
    let (mut e, mut f) = terms(generator, mu, &w);
    let mut g = gradient(&e);
    let mut iterations = 0;
    if n == 1 {
        return InnerSolution { w, value: f, grad_norm: 0.0, iterations };
    }
    while iterations < max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gnorm <= tol {
            break;
        }
        iterations += 1;
        let m = n - 1;
        let mut h = DMatrix::zeros(m, m);
        for k in 1..n {
            for l in 1..n {
                h[(k - 1, l - 1)] = if k == l {
                    e.column(k).sum() + e.row(k).sum()
                } else {
                    -(e[(k, l)] + e[(l, k)])
                };
            }
        }
        let trace = h.trace().abs().max(1e-300);
        let rhs = DVector::from_iterator(m, g.iter().map(|x| -x));
        let mut damping = 1e-12 * trace;
        let d = loop {
            let mut hd = h.clone();
            for k in 0..m {
                hd[(k, k)] += damping;
            }
            if let Some(ch) = hd.cholesky() {
                break ch.solve(&rhs);
            }
            damping *= 100.0;
            if damping > 1e6 * trace {
                break rhs.clone() / trace;
            }
        };
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut step = 1.0;
        let mut progressed = false;
        for _ in 0..60 {
            let mut wn = w.clone();
            for k in 1..n {
                wn[k] += step * d[k - 1];
            }
            let (en, fnew) = terms(generator, mu, &wn);
            let gn = gradient(&en);
            let gnorm_new = gn.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let armijo = fnew <= f + 1e-4 * step * slope;
            // Near the optimum the decrease drops below rounding; accept
            // steps that keep the value and shrink the gradient.
            let flat = fnew <= f + 4.0 * f64::EPSILON * f.abs() && gnorm_new < gnorm;
            if fnew.is_finite() && (armijo || flat) {
                progressed = f - fnew > 4.0 * f64::EPSILON * f.abs() || gnorm_new < 0.5 * gnorm;
                w = wn;
                e = en;
                f = fnew;
                g = gn;
                break;
            }
            step *= 0.5;
        }
        if !progressed {
            break;
        }
    }
    let grad_norm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    InnerSolution { w, value: f, grad_norm, iterations }
}
