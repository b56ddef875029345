use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {dim} exceeds the materialization cap {cap}; use the matrix-free matvec path")]
    ResourceLimit { dim: usize, cap: usize },

    #[error("gap closes at {location} (gap {gap:.3e})")]
    GapClosing { location: String, gap: f64 },

    #[error("plaquette flux {flux:.6} reached the admissibility bound on a {n1}x{n2} grid; refine the grid")]
    Refinement { flux: f64, n1: usize, n2: usize },

    #[error("degenerate link variable (|det| = {magnitude:.3e}) at {location}; refine the grid or enlarge the subset")]
    DegenerateLink { magnitude: f64, location: String },

    #[error("Chern sum {raw_sum} is not quantized (distance {distance:.3e} from nearest integer)")]
    Quantization { raw_sum: f64, distance: f64 },

    #[error("not found: {0}")]
    NotFound(String),
}

impl Error {
    /// Errors that signal a numerical-quality failure rather than bad input.
    pub fn is_numerical_quality(&self) -> bool {
        matches!(
            self,
            Error::GapClosing { .. }
                | Error::Refinement { .. }
                | Error::DegenerateLink { .. }
                | Error::Quantization { .. }
        )
    }
}
