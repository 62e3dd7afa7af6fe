use thiserror::Error;

/// Errors raised by the hyheat library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("generator must be a non-empty square matrix, got {rows} rows with row {bad_row} of length {len}")]
    NotSquare { rows: usize, bad_row: usize, len: usize },
    #[error("generator entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("negative off-diagonal rate {value} at ({row}, {col})")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("row {row} of the generator sums to {sum}, expected 0")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("generator is not irreducible: state {to} is unreachable from state {from}")]
    NotIrreducible { from: usize, to: usize },
    #[error("stationary system is singular")]
    SingularSystem,
    #[error("state index {state} out of range for {n_states} states")]
    StateOutOfRange { state: usize, n_states: usize },
    #[error("time {t} outside (0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("time {t} is not on the declared evaluation grid")]
    TimeNotOnGrid { t: f64 },
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("domain length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{nodes} quadrature nodes are too few for {modes} modes (need at least {min})")]
    TooFewQuadratureNodes { nodes: usize, modes: usize, min: usize },
    #[error("all initial-data coefficients are below threshold")]
    AllCoefficientsBelowThreshold,
    #[error("initial data is zero; Lyapunov exponents are undefined")]
    ZeroInitialData,
    #[error("mode {n} out of range 1..={n_modes}")]
    ModeOutOfRange { n: usize, n_modes: usize },
    #[error("grid point x = {x} lies outside the open domain (0, {length})")]
    PointOutsideDomain { x: f64, length: f64 },
    #[error("eigenfunctions are unavailable for user-supplied eigenpairs")]
    NoEigenfunctions,
    #[error("moment order p must be positive, got {0}")]
    NonpositiveP(f64),
    #[error("q must be positive, got {0}")]
    NonpositiveQ(f64),
    #[error("switching rates must be positive, got gamma12 = {gamma12}, gamma21 = {gamma21}")]
    NonpositiveRates { gamma12: f64, gamma21: f64 },
    #[error("power iteration stalled after {iterations} iterations (bracket width {width:e})")]
    PowerIterationStalled { iterations: usize, width: f64 },
    #[error("direct sup {direct} and eigenvalue {eigen} disagree by {gap:e}")]
    AgreementFailure { direct: f64, eigen: f64, gap: f64 },
    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy { kind: &'static str, name: String, available: String },
}

pub type Result<T> = std::result::Result<T, Error>;
