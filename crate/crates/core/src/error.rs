use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("pole proximity: |{factor}| = {magnitude:e}")]
    PoleProximity { factor: &'static str, magnitude: f64 },
    #[error("singular point: {0}")]
    Singularity(String),
    #[error("newton iteration did not converge after {iterations} steps (last |d| = {last_residual:e})")]
    Divergence {
        iterations: usize,
        last_residual: f64,
        trace: Vec<Complex64>,
    },
    #[error("contour passes within {min_abs:e} of a root")]
    ContourTooClose { min_abs: f64 },
    #[error("winding number {value} is not within 1e-3 of an integer")]
    Uncertified { value: f64 },
    #[error("ill-conditioned basis: condition number {0:e}")]
    IllConditioned(f64),
    #[error("initial data outside the modal span: relative residual {0:e}")]
    OutOfSpan(f64),
    #[error("mode with Im lambda^2 <= 0 cannot be used for modal evolution: lambda = {0}")]
    ResonanceMode(Complex64),
    #[error("packet does not fit: 2n = {two_n} >= x_max = {x_max}")]
    PacketTruncation { two_n: f64, x_max: f64 },
    #[error("source tail on R1 too large: {0:e}")]
    TailTooLarge(f64),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("eigen iteration breakdown: {0}")]
    Breakdown(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
