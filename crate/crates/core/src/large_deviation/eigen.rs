//! Principal eigenvalue of the tilted generator `Γ + diag(g)`.
//!
//! The tilted matrix has nonnegative off-diagonal entries and an irreducible
//! pattern, so its eigenvalue of largest real part is real and simple. Adding
//! `c·I` with `c = max_i(−γ_ii + |g_i|) + 1` gives a nonnegative matrix with a
//! positive diagonal, i.e. a primitive one, on which power iteration
//! converges to the Perron root.

use nalgebra::DMatrix;

use crate::ctmc::Generator;
use crate::error::{Error, Result};

pub(crate) fn tilted_matrix(generator: &Generator, weights: &[f64]) -> Result<DMatrix<f64>> {
    let n = generator.n_states();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { what: "weights", expected: n, found: weights.len() });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    let mut m = generator.matrix().clone();
    for i in 0..n {
        m[(i, i)] += weights[i];
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterationOptions {
    /// Stop once the Collatz–Wielandt bracket is narrower than `tol` times
    /// the shifted Perron root.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronRoot {
    pub value: f64,
    /// Right Perron vector, normalized to unit maximum.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Dominant eigenvalue of `Γ + diag(g)` by shifted power iteration.
///
/// At every step `min_i (Bx)_i/x_i ≤ ρ(B) ≤ max_i (Bx)_i/x_i` for the shifted
/// matrix `B`; iteration stops when this bracket is tight.
pub fn power_iteration(
    generator: &Generator,
    weights: &[f64],
    opts: PowerIterationOptions,
) -> Result<PerronRoot> {
    let mut b = tilted_matrix(generator, weights)?;
    let n = b.nrows();
    if n == 1 {
        return Ok(PerronRoot { value: b[(0, 0)], vector: vec![1.0], iterations: 0 });
    }
    let shift = (0..n)
        .map(|i| generator.exit_rate(i) + weights[i].abs())
        .fold(0.0, f64::max)
        + 1.0;
    for i in 0..n {
        b[(i, i)] += shift;
    }
    let mut x = nalgebra::DVector::from_element(n, 1.0);
    let mut width = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let y = &b * &x;
        let (lo, hi) = x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| b / a)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
        width = hi - lo;
        let scale = y.amax();
        x = y / scale;
        if width <= opts.tol * hi.abs().max(1.0) {
            return Ok(PerronRoot {
                value: 0.5 * (lo + hi) - shift,
                vector: x.iter().copied().collect(),
                iterations: it,
            });
        }
    }
    Err(Error::PowerIterationStalled { iterations: opts.max_iter, width })
}

/// Dominant eigenvalue by a dense nonsymmetric eigensolve (Schur form).
pub fn dense_eigenvalue(generator: &Generator, weights: &[f64]) -> Result<f64> {
    let m = tilted_matrix(generator, weights)?;
    let ev = m.complex_eigenvalues();
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}
