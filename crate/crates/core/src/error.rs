use thiserror::Error;

/// Errors surfaced by transforms, the background solver and the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("grid size mismatch: expected {expected_nx}x{expected_ny}, got {got_nx}x{got_ny}")]
    GridMismatch {
        expected_nx: usize,
        expected_ny: usize,
        got_nx: usize,
        got_ny: usize,
    },

    #[error("non-finite value detected at t = {t}")]
    NanDetected { t: f64 },

    #[error("CFL guard violated at t = {t}: dt * speed = {dt_speed:.3e} exceeds limit {limit:.3e}")]
    CflViolation { t: f64, dt_speed: f64, limit: f64 },

    #[error("smallness condition ||d_x rho||_H2 < 1/4 violated at t = {t} (value {value:.3e})")]
    SmallnessViolation { t: f64, value: f64 },

    #[error("weight 1 + d_x rho non-positive (min {min_weight:.3e}); weighted energy undefined")]
    WeightNonPositive { min_weight: f64 },

    #[error("coefficient array length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decay fit: {0}")]
    FitError(String),

    #[error("missing cached time derivatives; evaluate the right-hand side first")]
    MissingRhsCache,

    #[error("missing forcing samples for the Duhamel quadrature")]
    MissingForcing,

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
