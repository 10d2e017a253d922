use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resource limit: {what} needs {requested} > cap {cap}")]
    ResourceLimit { what: &'static str, requested: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate triangle {triangle} (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("mesh has no interior nodes")]
    EmptyInterior,

    /// The interior block `K_II - lambda M_II` is numerically singular, i.e.
    /// `lambda` sits on the discrete Dirichlet spectrum.
    #[error("lambda = {lambda} hits the discrete Dirichlet spectrum (pivot ratio {pivot_ratio:e}, condition estimate {condition:e})")]
    SpectrumHit { lambda: f64, pivot_ratio: f64, condition: f64 },

    #[error("vector is not discrete-harmonic: interior residual {residual:e} exceeds {tolerance:e}")]
    NotHarmonic { residual: f64, tolerance: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("singular matrix")]
    Singular,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("matrix exponential overflow (norm {norm:e}); use a smaller t")]
    ExpOverflow { norm: f64 },

    #[error("operators live on different meshes")]
    MeshMismatch,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
