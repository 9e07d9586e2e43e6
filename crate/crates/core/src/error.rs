use thiserror::Error;

/// Errors raised by lattice construction, operator algebra and the bound engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown lattice family `{0}`")]
    UnknownFamily(String),

    #[error("lattice size parameter must be positive")]
    EmptyLattice,

    #[error("Hilbert space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: u128, cap: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("decay exponent {alpha} must exceed the lattice dimension {dim}")]
    DecayTooSlow { alpha: f64, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operator is not self-adjoint (residual {0:.3e})")]
    NotSelfAdjoint(f64),

    #[error("operator must be even, found {0}")]
    NotEven(&'static str),

    #[error("operator acts outside its declared support")]
    SupportViolation,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("integrator step underflow on [{from}, {to}]")]
    StepUnderflow { from: f64, to: f64 },

    #[error("time {t} outside the interval [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("spectral window boundary {0} lies on the spectrum")]
    WindowHitsSpectrum(f64),

    #[error("spectral window selects no eigenvalue")]
    EmptyWindow,

    #[error("spectral window selects the whole spectrum: no complement")]
    NoComplement,

    #[error("gap {gap} at s = {s} is below the required {required}")]
    GapCollapse { s: f64, gap: f64, required: f64 },

    #[error("projector family is discontinuous at s = {0}")]
    Discontinuous(f64),

    #[error("quadrature budget {budget:.3e} exceeds tolerance {tol:.3e}")]
    QuadratureBudget { budget: f64, tol: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("fit needs at least 3 usable distances, found {0}")]
    TooFewPoints(usize),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("eigendecomposition did not converge")]
    EigenFailure,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
