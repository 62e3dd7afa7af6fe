//! Finite-state continuous-time Markov chains.
//!
//! A chain is described by its generator (Q-matrix) `Γ = (γ_ij)`: off-diagonal
//! entries are jump rates, rows sum to zero. Realizations are kept as jump
//! skeletons (jump times plus visited states), so every time integral of a
//! function of the state is computed exactly from the skeleton.
//!
//! States are 0-based throughout the API.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};

/// Validated, irreducible generator of a finite-state chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    rates: DMatrix<f64>,
}

impl Generator {
    /// Validates a row-major rate matrix.
    ///
    /// Checks, in order: squareness, finiteness, nonnegative off-diagonal
    /// rates, zero row sums (relative to the largest rate), and strong
    /// connectivity of the positive-rate digraph.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::NotSquare { rows: 0, bad_row: 0, len: 0 });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { rows: n, bad_row: i, len: row.len() });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let scale = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j && v < 0.0 {
                    return Err(Error::NegativeOffDiagonal { row: i, col: j, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > 1e-12 * scale {
                return Err(Error::RowSumNonzero { row: i, sum });
            }
        }
        let rates = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        check_irreducible(&rates)?;
        Ok(Self { rates })
    }

    /// Builds a generator from off-diagonal rates, filling the diagonal so
    /// rows sum to zero. Diagonal entries of `rows` are ignored.
    pub fn from_off_diagonal(rows: &[Vec<f64>]) -> Result<Self> {
        let mut full: Vec<Vec<f64>> = rows.to_vec();
        for (i, row) in full.iter_mut().enumerate() {
            if i < row.len() {
                row[i] = 0.0;
                let s: f64 = row.iter().sum();
                row[i] = -s;
            }
        }
        Self::new(&full)
    }

    /// Two-state chain jumping 1→2 at rate `gamma12` and 2→1 at rate `gamma21`.
    pub fn two_state(gamma12: f64, gamma21: f64) -> Result<Self> {
        Self::new(&[vec![-gamma12, gamma12], vec![gamma21, -gamma21]])
    }

    /// The degenerate one-state chain.
    pub fn single() -> Self {
        Self { rates: DMatrix::zeros(1, 1) }
    }

    /// Draws a random irreducible generator: each off-diagonal rate is zero
    /// with probability `sparsity`, otherwise uniform on `(0, max_rate)`.
    /// Draws are repeated until the result is irreducible.
    pub fn random_irreducible<R: Rng + ?Sized>(
        n: usize,
        max_rate: f64,
        sparsity: f64,
        rng: &mut R,
    ) -> Self {
        assert!(n >= 1 && max_rate > 0.0);
        loop {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j || rng.random::<f64>() < sparsity {
                                0.0
                            } else {
                                max_rate * (1.0 - rng.random::<f64>())
                            }
                        })
                        .collect()
                })
                .collect();
            if let Ok(g) = Self::from_off_diagonal(&rows) {
                return g;
            }
        }
    }

    pub fn n_states(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    /// Total exit rate `−γ_ii` of state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rates[(i, i)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    /// Largest absolute rate, the scale used by the validation tolerances.
    pub fn scale(&self) -> f64 {
        self.rates.amax()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.rates.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Unique stationary distribution `π` with `πΓ = 0`, `Σπ = 1`.
    ///
    /// One column of `Γ` is replaced by the normalization constraint and the
    /// resulting dense system is solved by LU with partial pivoting.
    pub fn stationary_distribution(&self) -> Result<StationaryDistribution> {
        let n = self.n_states();
        if n == 1 {
            return Ok(StationaryDistribution { pi: vec![1.0] });
        }
        // Rows of Γᵀ are the equations Σ_i π_i γ_ij = 0; the last is redundant.
        let mut a = self.rates.transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or(Error::SingularSystem)?;
        if pi.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::SingularSystem);
        }
        let s = pi.sum();
        Ok(StationaryDistribution { pi: pi.iter().map(|p| p / s).collect() })
    }

    /// Simulates one hold-and-jump realization on `[0, horizon]`.
    pub fn simulate_path<R: Rng + ?Sized>(
        &self,
        start_state: usize,
        horizon: f64,
        rng: &mut R,
    ) -> Result<MarkovPath> {
        let n = self.n_states();
        if start_state >= n {
            return Err(Error::StateOutOfRange { state: start_state, n_states: n });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        let mut jump_times = vec![0.0];
        let mut states = vec![start_state];
        let mut t = 0.0;
        let mut state = start_state;
        loop {
            let q = self.exit_rate(state);
            if q <= 0.0 {
                break;
            }
            // Exp::new only fails for negative or NaN rates.
            t += Exp::new(q).expect("positive exit rate").sample(rng);
            if t > horizon {
                break;
            }
            let mut u = rng.random::<f64>() * q;
            let mut next = state;
            for j in 0..n {
                if j == state {
                    continue;
                }
                let r = self.rate(state, j);
                if r <= 0.0 {
                    continue;
                }
                next = j;
                if u < r {
                    break;
                }
                u -= r;
            }
            state = next;
            jump_times.push(t);
            states.push(state);
        }
        Ok(MarkovPath { jump_times, states, horizon })
    }
}

fn check_irreducible(rates: &DMatrix<f64>) -> Result<()> {
    let n = rates.nrows();
    let reach = |forward: bool| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let r = if forward { rates[(i, j)] } else { rates[(j, i)] };
                if i != j && r > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    if let Some(j) = reach(true).iter().position(|s| !s) {
        return Err(Error::NotIrreducible { from: 0, to: j });
    }
    if let Some(j) = reach(false).iter().position(|s| !s) {
        return Err(Error::NotIrreducible { from: j, to: 0 });
    }
    Ok(())
}

/// Stationary distribution of an irreducible chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
}

impl StationaryDistribution {
    /// `Σ_i π_i f_i`.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.pi.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    /// `‖πΓ‖_∞`.
    pub fn residual(&self, g: &Generator) -> f64 {
        let n = g.n_states();
        (0..n)
            .map(|j| (0..n).map(|i| self.pi[i] * g.rate(i, j)).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Jump skeleton of one chain realization on `[0, horizon]`.
///
/// `r(t) = states[k]` for `jump_times[k] <= t < jump_times[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPath {
    jump_times: Vec<f64>,
    states: Vec<usize>,
    horizon: f64,
}

impl MarkovPath {
    /// Builds a path from an explicit skeleton, checking its invariants.
    pub fn new(jump_times: Vec<f64>, states: Vec<usize>, horizon: f64, n_states: usize) -> Result<Self> {
        if jump_times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                what: "states",
                expected: jump_times.len(),
                found: states.len(),
            });
        }
        if jump_times.first() != Some(&0.0) {
            return Err(Error::InvalidArgument("path must start at time 0".into()));
        }
        if !(horizon > 0.0) || jump_times.last().is_some_and(|&t| t > horizon) {
            return Err(Error::InvalidArgument("jump times must lie in [0, horizon]".into()));
        }
        if jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("jump times must be strictly increasing".into()));
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("consecutive states must differ".into()));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= n_states) {
            return Err(Error::StateOutOfRange { state: s, n_states });
        }
        Ok(Self { jump_times, states, horizon })
    }

    /// A path that stays in `state` on `[0, horizon]`.
    pub fn constant(state: usize, horizon: f64) -> Self {
        Self { jump_times: vec![0.0], states: vec![state], horizon }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len() - 1
    }

    pub fn state_at(&self, t: f64) -> usize {
        let k = self.jump_times.partition_point(|&tau| tau <= t);
        self.states[k.saturating_sub(1)]
    }

    /// Segments `(start, end, state)` covering `[0, t]`.
    pub fn segments(&self, t: f64) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let k = self.jump_times.len();
        (0..k).filter_map(move |i| {
            let start = self.jump_times[i];
            if i > 0 && start >= t {
                return None;
            }
            let end = if i + 1 < k { self.jump_times[i + 1].min(t) } else { t };
            Some((start, end, self.states[i]))
        })
    }

    /// Time spent in each state during `[0, t]`.
    pub fn occupation_times(&self, t: f64, n_states: usize) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let mut times = vec![0.0; n_states];
        for (a, b, s) in self.segments(t) {
            *times.get_mut(s).ok_or(Error::StateOutOfRange { state: s, n_states })? += b - a;
        }
        Ok(times)
    }

    /// Occupation measure `L_t(i) = (1/t) ∫₀ᵗ 1{r(s) = i} ds`.
    pub fn occupation_measure(&self, t: f64, n_states: usize) -> Result<OccupationMeasure> {
        let times = self.occupation_times(t, n_states)?;
        Ok(OccupationMeasure { weights: times.iter().map(|x| x / t).collect(), t })
    }

    /// `∫₀ᵗ f(r(s)) ds`, exact on the skeleton.
    pub fn path_integral(&self, f: &[f64], t: f64) -> Result<f64> {
        let times = self.occupation_times(t, f.len())?;
        Ok(times.iter().zip(f).map(|(a, b)| a * b).sum())
    }

    /// Durations of completed sojourns, grouped by state. The final sojourn
    /// is censored by the horizon and left out.
    pub fn holding_times(&self, n_states: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); n_states];
        for (w, &s) in self.jump_times.windows(2).zip(&self.states) {
            out[s].push(w[1] - w[0]);
        }
        out
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok(())
    }
}

/// Fraction of `[0, t]` spent in each state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationMeasure {
    pub weights: Vec<f64>,
    pub t: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn three_state() -> Generator {
        Generator::new(&[vec![-2.0, 1.0, 1.0], vec![3.0, -4.0, 1.0], vec![1.0, 1.0, -2.0]]).unwrap()
    }

    #[test]
    fn validates_three_state_generator() {
        assert_eq!(three_state().n_states(), 3);
        assert_eq!(Generator::new(&[vec![0.0]]).unwrap().n_states(), 1);
    }

    #[test]
    fn rejects_bad_generators() {
        assert_eq!(
            Generator::new(&[vec![-1.0, 1.0], vec![0.0, 0.0]]),
            Err(Error::NotIrreducible { from: 1, to: 0 })
        );
        assert!(matches!(
            Generator::new(&[vec![1.0, -1.0], vec![1.0, -1.0]]),
            Err(Error::NegativeOffDiagonal { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            Generator::new(&[vec![-1.0, 1.5], vec![1.0, -1.0]]),
            Err(Error::RowSumNonzero { row: 0, .. })
        ));
        assert!(matches!(Generator::new(&[vec![-1.0, 1.0]]), Err(Error::NotSquare { .. })));
        assert!(matches!(Generator::new(&[]), Err(Error::NotSquare { .. })));
        assert!(matches!(
            Generator::new(&[vec![f64::NAN, 1.0], vec![1.0, -1.0]]),
            Err(Error::NonFinite { row: 0, col: 0 })
        ));
    }

    #[test]
    fn stationary_distribution_of_three_state_chain() {
        let pi = three_state().stationary_distribution().unwrap().pi;
        for (a, b) in pi.iter().zip([7.0 / 15.0, 1.0 / 5.0, 1.0 / 3.0]) {
            assert!((a - b).abs() <= 1e-12, "{pi:?}");
        }
    }

    #[test]
    fn stationary_distribution_two_state() {
        let pi = Generator::two_state(4.0, 2.0).unwrap().stationary_distribution().unwrap().pi;
        assert_relative_eq!(pi[0], 2.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(pi[1], 4.0 / 6.0, epsilon = 1e-14);
        let pi = Generator::two_state(1.0, 1.0).unwrap().stationary_distribution().unwrap().pi;
        assert_relative_eq!(pi[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn single_state_path_has_no_jumps() {
        let path = Generator::single().simulate_path(0, 50.0, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(path.n_jumps(), 0);
        assert_eq!(path.state_at(49.0), 0);
        assert_eq!(path.occupation_measure(17.0, 1).unwrap().weights, vec![1.0]);
    }

    #[test]
    fn simulation_is_deterministic_given_seed() {
        let g = three_state();
        let a = g.simulate_path(0, 100.0, &mut stream_rng(42, 3)).unwrap();
        let b = g.simulate_path(0, 100.0, &mut stream_rng(42, 3)).unwrap();
        assert_eq!(a, b);
        let c = g.simulate_path(0, 100.0, &mut stream_rng(42, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn simulated_path_respects_invariants() {
        let g = three_state();
        let p = g.simulate_path(2, 30.0, &mut stream_rng(7, 0)).unwrap();
        let rebuilt =
            MarkovPath::new(p.jump_times().to_vec(), p.states().to_vec(), p.horizon(), 3).unwrap();
        assert_eq!(rebuilt, p);
        assert_eq!(p.states()[0], 2);
    }

    #[test]
    fn mean_holding_time_matches_exit_rate() {
        // Exponential(1) holding times: mean 1, standard deviation 1.
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let p = g.simulate_path(0, 1e4, &mut stream_rng(2024, 0)).unwrap();
        for hs in p.holding_times(2) {
            let m = crate::numeric::mean(&hs);
            let se = 1.0 / (hs.len() as f64).sqrt();
            assert!((m - 1.0).abs() < 3.0 * se, "mean {m} se {se}");
        }
    }

    #[test]
    fn occupation_of_half_split_path() {
        let p = MarkovPath::new(vec![0.0, 2.0], vec![0, 1], 4.0, 2).unwrap();
        let w = p.occupation_measure(4.0, 2).unwrap().weights;
        assert_eq!(w, vec![0.5, 0.5]);
        assert_eq!(p.state_at(1.999), 0);
        assert_eq!(p.state_at(2.0), 1);
    }

    #[test]
    fn path_integral_of_two_segment_path() {
        let p = MarkovPath::new(vec![0.0, 1.0], vec![0, 1], 3.0, 2).unwrap();
        assert_eq!(p.path_integral(&[5.0, -1.0], 3.0).unwrap(), 3.0);
        assert_eq!(p.path_integral(&[2.0, 2.0], 3.0).unwrap(), 6.0);
        assert!(matches!(p.path_integral(&[1.0, 1.0], 3.5), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(p.occupation_measure(0.0, 2), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn ergodic_average_of_alpha_on_three_state_chain() {
        // Σ π_j α_j = 7/15·0.1 + 1/5·1.5 + 1/3·0.2 = 31/75.
        let g = three_state();
        let alpha = [0.1, 1.5, 0.2];
        let t = 1e4;
        let samples: Vec<f64> = (0..20)
            .map(|k| {
                let p = g.simulate_path(0, t, &mut stream_rng(99, k)).unwrap();
                p.path_integral(&alpha, t).unwrap() / t
            })
            .collect();
        let m = crate::numeric::mean(&samples);
        let se = (crate::numeric::variance(&samples) / samples.len() as f64).sqrt();
        assert!((m - 31.0 / 75.0).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn long_path_occupation_near_pi() {
        let g = three_state();
        let pi = g.stationary_distribution().unwrap().pi;
        let t = 1e4;
        let ws: Vec<Vec<f64>> = (0..20)
            .map(|k| {
                g.simulate_path(1, t, &mut stream_rng(5, k))
                    .unwrap()
                    .occupation_measure(t, 3)
                    .unwrap()
                    .weights
            })
            .collect();
        for i in 0..3 {
            let xs: Vec<f64> = ws.iter().map(|w| w[i]).collect();
            let m = crate::numeric::mean(&xs);
            let se = (crate::numeric::variance(&xs) / xs.len() as f64).sqrt();
            assert!((m - pi[i]).abs() < 3.0 * se, "state {i}: {m} vs {}", pi[i]);
        }
    }
}
