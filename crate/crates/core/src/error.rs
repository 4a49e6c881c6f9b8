use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrices in a Kraus list (or file) have inconsistent or non-square shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// Operands live in different Hilbert-space dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A Kraus list fails the trace-preserving / complete-positivity checks.
    #[error("invalid channel: completeness residual {residual:.3e}, Choi min eigenvalue {choi_min_eigenvalue:.3e}")]
    InvalidChannel {
        residual: f64,
        choi_min_eigenvalue: f64,
    },

    /// A matrix expected to be unitary is not.
    #[error("matrix is not unitary: max deviation {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// No optimizer start converged; carries the best value found.
    #[error("optimizer failed to converge in any start; best value {best:.12}")]
    OptimizerStall { best: f64 },

    /// alpha0 is undefined because the channel is not distinguishable (theta = 0).
    #[error("alpha0 is undefined: f1 = {f1} means theta = 0")]
    UndefinedAlpha0 { f1: f64 },

    /// The Lemma-2 geometry degenerates (cos(alpha0) = 1 leaves no b' direction).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The requested state-pair transform does not exist.
    #[error("infeasible transform: source fidelity {source_fidelity:.12} exceeds target overlap {target_overlap:.12}")]
    InfeasibleTransform {
        source_fidelity: f64,
        target_overlap: f64,
    },

    /// Protocol synthesis failed an internal feasibility or purity check.
    #[error("protocol synthesis error: {0}")]
    Synthesis(String),

    /// A quantity that must decrease across protocol rounds did not.
    #[error("numerical stall: {0}")]
    NumericalStall(String),

    /// The channel is not (sequentially) perfectly distinguishable from the identity.
    #[error("not distinguishable: f1 = {f1}")]
    NotDistinguishable { f1: f64 },

    /// A channel or plan file failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// A reported value exceeded its mathematical range by more than tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
