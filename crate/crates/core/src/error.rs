use thiserror::Error;

/// Which membership condition a bracket failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Jacobi,
    H1,
    H3,
    H4,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Condition::Jacobi => "jacobi_residual",
            Condition::H1 => "h1_residual",
            Condition::H3 => "h3_residual",
            Condition::H4 => "h4_kernel_dim",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index ({i}, {j}, {k}) out of range for total dimension {dim}")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        dim: usize,
    },

    #[error("bracket of a basis vector with itself must vanish, got mu(e{i}, e{i}) != 0")]
    NotSkew { i: usize },

    #[error("bracket is not in the homogeneous space variety: {condition} = {residual:e}")]
    NotMember { condition: Condition, residual: f64 },

    #[error("operation requires trivial isotropy (q = 0), got q = {q}")]
    IsotropyNotSupported { q: usize },

    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("step size underflow at t = {t} (step {step:e}) without meeting the blowup criteria")]
    StiffnessFailure { t: f64, step: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepLimit { t: f64, max_steps: usize },

    #[error("membership drift at t = {t}: {condition} = {residual:e} (relative)")]
    DriftFailure {
        t: f64,
        condition: Condition,
        residual: f64,
    },

    #[error("blowup fit needs at least 10 tail samples spanning two decades of |mu|, got {samples} samples over {decades:.2} decades")]
    InsufficientTail { samples: usize, decades: f64 },

    #[error("{0}")]
    NotApplicable(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
