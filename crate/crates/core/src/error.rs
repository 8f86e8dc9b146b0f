use thiserror::Error;

/// Errors produced by scenario construction and protocol evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("operator is not hermitian (max |A - A†| entry = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("observable is not dichotomic: max |Q² - I| entry = {deviation:.3e}")]
    NotDichotomic { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized (norm deviation {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("not a valid density matrix: {reason}")]
    InvalidDensityMatrix { reason: String },

    #[error("operation requires a pure state; got a density matrix")]
    PureStateRequired,

    #[error("times must be ordered: {0}")]
    BadTimeOrder(String),

    #[error("⟨D²⟩ vanishes in this state; the ±-basis mapping is undefined")]
    StationaryState,

    #[error("coefficients must satisfy |a1|² + |a2|² = 1 (got {got:.6})")]
    CoefficientsNotNormalized { got: f64 },

    #[error("ancilla amplitudes must share a phase (relative phase {phase:.3e} rad)")]
    PhaseMismatch { phase: f64 },

    #[error("|α|² = |β|²: the biased-ancilla readout carries no correlator information")]
    ZeroInformationPoint,

    #[error("projector set at time index {time_index} is invalid: {reason}")]
    InvalidGrid { time_index: usize, reason: String },

    #[error("history set is not decoherent (max off-diagonal |D| = {max_off:.3e} > tol {tol:.1e})")]
    NotDecoherent { max_off: f64, tol: f64 },

    #[error("history has zero probability; record projector undefined")]
    ZeroProbability,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
