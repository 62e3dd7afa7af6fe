//! Lyapunov exponents of heat equations with Markov-switching coefficients.
//!
//! The model is the Dirichlet heat equation on a bounded domain whose drift
//! `α` and multiplicative noise coefficients `β_j` jump according to a
//! finite-state continuous-time Markov chain. Its solution is explicit along
//! every realization, which gives closed forms for the almost-sure exponent
//! and, through the large deviations of the chain's occupation measure, for
//! the p-th moment exponents.
//!
//! * [`ctmc`]: generators, stationary laws, path simulation, occupation measures
//! * [`spectral`]: Dirichlet eigenbasis and projection of initial data
//! * [`hybrid`]: pathwise closed-form solution
//! * [`analytic`]: closed-form exponents and stability predicates
//! * [`large_deviation`]: rate function, variational growth rate, tilted eigenvalue
//! * [`montecarlo`]: simulation estimators of both exponents

// Range checks are written `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod ctmc;
pub mod error;
pub mod hybrid;
pub mod large_deviation;
pub mod montecarlo;
pub mod numeric;
pub mod optimize;
pub mod quadrature;
pub mod registry;
pub mod rng;
pub mod spectral;

pub use ctmc::{Generator, MarkovPath, OccupationMeasure, StationaryDistribution};
pub use error::{Error, Result};
pub use hybrid::{DrivingNoise, HybridHeatModel, NormValue, PathSolution};
pub use registry::{Registry, Strategy};
pub use spectral::{InitialData, SpectralBasis};
