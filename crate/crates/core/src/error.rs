//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("coupling graph is disconnected")]
    DisconnectedGraph,
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("self-loop on node {i}")]
    SelfLoop { i: usize },
    #[error("index {index} out of range for {n} resonators")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("negative rate {value} for {what}")]
    NegativeRate { what: &'static str, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("pattern {pattern} on a {rows}x{cols} lattice activates forbidden diagonal terms")]
    OddSideForbidden {
        pattern: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("resolvent (i w I - A) is singular at w = {omega}")]
    SingularResolvent { omega: f64 },
    #[error("A matrix is time-dependent; use the RWA pipeline or the time-domain oracle")]
    TimeDependentA,
    #[error("normal modes unresolved: max linewidth {kappa} exceeds splitting/5 = {limit}")]
    UnresolvedModes { kappa: f64, limit: f64 },
    #[error("no resonant assignment: {0}")]
    NoResonantTone(String),
    #[error("RWA validity violated: amplitude {eps} >= minimum level splitting {limit}")]
    ValidityViolation { eps: f64, limit: f64 },
    #[error("effective A matrix is singular")]
    SingularAeff,
    #[error("unknown device class `{0}`")]
    UnknownDevice(String),
    #[error("pattern pairs overlap on mode {mode}")]
    OverlappingPairs { mode: usize },
    #[error("ratio {ratio} unreachable: requires gamma^2/R >= kappa_int^2 ({detail})")]
    RatioUnreachable { ratio: f64, detail: String },
    #[error("coupling regime violated: {0}")]
    RegimeViolation(String),
    #[error("port mismatch between stages: {0}")]
    PortMismatch(String),
    #[error("stage not at its generalized critical coupling point: eps = {eps}, eps_gcc = {expected}")]
    NotAtGcc { eps: f64, expected: f64 },
    #[error("stage not at a 50-50 point: eps = {eps}, nearest 50-50 amplitudes {minus} / {plus}")]
    NotAt5050 { eps: f64, minus: f64, plus: f64 },
    #[error("degenerate unperturbed spectrum: modes {i} and {j} within tolerance")]
    DegenerateSpectrum { i: usize, j: usize },
    #[error("integrator step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("analysis window too short: {0}")]
    InsufficientWindow(String),
    #[error("exhaustive Hadamard search limited to N <= {limit}, got N = {n}")]
    SearchLimitExceeded { n: usize, limit: usize },
    #[error("optimizer failed to converge: best residual {residual}")]
    NoConvergence { residual: f64 },
    #[error("device file error: {0}")]
    Schema(String),
}

impl Error {
    /// Guard failures get a dedicated CLI exit code.
    pub fn is_validity_guard(&self) -> bool {
        matches!(
            self,
            Error::ValidityViolation { .. } | Error::UnresolvedModes { .. }
        )
    }
}
