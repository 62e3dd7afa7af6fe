//! Direct maximization of `⟨g, μ⟩ − I(μ)` over the probability simplex.
//!
//! Writing the rate function through its inner infimum,
//!
//! ```text
//! J(μ) = ⟨g, μ⟩ − I(μ) = min_w Σ_i μ_i G_i(w),   G_i(w) = g_i + Σ_j γ_ij exp(w_j − w_i),
//! ```
//!
//! so by the envelope theorem `∂J/∂μ_i = G_i(w*(μ))`. The simplex is
//! parametrized by `μ = softmax(v)` with `v_0 = 0` and `−J` is minimized by
//! BFGS, warm-starting the inner problem from the previous `w*`.

use serde::Serialize;

use crate::ctmc::Generator;
use crate::error::{Error, Result};
use crate::large_deviation::rate::{minimize_log_objective, rate_function};
use crate::numeric::{dot, softmax};
use crate::optimize::{bfgs, BfgsOptions};

/// Entries of `μ` are floored here while optimizing so the inner problem
/// keeps a finite minimizer.
const MU_FLOOR: f64 = 1e-14;

/// Initial logit given to a vertex when starting near it.
const VERTEX_LOGIT: f64 = 8.0;

/// Outcome of the direct route.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectSup {
    pub lambda: f64,
    pub maximizer_mu: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Both routes to `Λ(g) = sup_μ {⟨g, μ⟩ − I(μ)}` and their disagreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalResult {
    pub lambda: f64,
    pub maximizer_mu: Vec<f64>,
    pub eigen_lambda: f64,
    pub agreement_gap: f64,
    pub iterations: usize,
}

/// Maximizes `⟨g, μ⟩ − I(μ)` directly, with multistart from `π` and from
/// near each vertex of the simplex.
pub fn direct_sup(generator: &Generator, weights: &[f64]) -> Result<DirectSup> {
    let n = generator.n_states();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { what: "weights", expected: n, found: weights.len() });
    }
    if n == 1 {
        return Ok(DirectSup { lambda: weights[0], maximizer_mu: vec![1.0], iterations: 0, grad_norm: 0.0 });
    }
    let pi = generator.stationary_distribution()?.pi;
    let mut starts: Vec<Vec<f64>> = vec![pi.iter().map(|p| (p / pi[0]).ln()).skip(1).collect()];
    for vertex in 0..n {
        starts.push(
            (1..n)
                .map(|k| if k == vertex { VERTEX_LOGIT } else if vertex == 0 { -VERTEX_LOGIT } else { 0.0 })
                .collect(),
        );
    }

    let mut finishes: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    for v0 in starts {
        let mut w = vec![0.0; n];
        let objective = |v: &[f64]| -> (f64, Vec<f64>) {
            let mu = floored_softmax(v);
            let sol = minimize_log_objective(generator, &mu, w.clone(), 200);
            w.clone_from(&sol.w);
            let big_g: Vec<f64> = (0..n)
                .map(|i| {
                    weights[i]
                        + (0..n)
                            .map(|j| generator.rate(i, j) * (sol.w[j] - sol.w[i]).exp())
                            .sum::<f64>()
                })
                .collect();
            let j_val = dot(&mu, &big_g);
            let grad = (1..n).map(|k| -mu[k] * (big_g[k] - j_val)).collect();
            (-j_val, grad)
        };
        let m = bfgs(objective, v0, BfgsOptions { max_iter: 400, grad_tol: 1e-11 });
        iterations += m.iterations;
        finishes.push((-m.value, m.x, m.grad_norm));
    }

    let best = finishes.iter().map(|f| f.0).fold(f64::NEG_INFINITY, f64::max);
    // Ties: prefer the highest-entropy maximizer.
    let (_, v, grad_norm) = finishes
        .into_iter()
        .filter(|f| f.0 >= best - 1e-9 * (1.0 + best.abs()))
        .max_by(|a, b| entropy(&full_softmax(&a.1)).total_cmp(&entropy(&full_softmax(&b.1))))
        .expect("at least one finish");
    let mu = full_softmax(&v);
    let rate = rate_function(generator, &mu)?;
    Ok(DirectSup { lambda: dot(weights, &mu) - rate.value, maximizer_mu: mu, iterations, grad_norm })
}

fn full_softmax(v: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(v.len() + 1);
    z.push(0.0);
    z.extend_from_slice(v);
    softmax(&z)
}

fn floored_softmax(v: &[f64]) -> Vec<f64> {
    let mu: Vec<f64> = full_softmax(v).into_iter().map(|m| m.max(MU_FLOOR)).collect();
    let s: f64 = mu.iter().sum();
    mu.into_iter().map(|m| m / s).collect()
}

fn entropy(mu: &[f64]) -> f64 {
    -mu.iter().filter(|m| **m > 0.0).map(|m| m * m.ln()).sum::<f64>()
}

/// Runs the direct route and cross-checks it against `eigen_lambda`, the
/// principal eigenvalue from an independent backend.
pub fn cross_check(generator: &Generator, weights: &[f64], eigen_lambda: f64) -> Result<VariationalResult> {
    let d = direct_sup(generator, weights)?;
    let gap = (d.lambda - eigen_lambda).abs();
    if !(gap <= 1e-6 * (1.0 + d.lambda.abs())) {
        return Err(Error::AgreementFailure { direct: d.lambda, eigen: eigen_lambda, gap });
    }
    Ok(VariationalResult {
        lambda: d.lambda,
        maximizer_mu: d.maximizer_mu,
        eigen_lambda,
        agreement_gap: gap,
        iterations: d.iterations,
    })
}
