use faer::c64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure mode of the embedding pipeline.
///
/// Messages name the mathematical condition that failed so that CLI users
/// can tell an unlucky random instance from a malformed input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("{matrix} is not symmetric (relative asymmetry {asymmetry:.3e} > {tolerance:.1e})")]
    AsymmetricInput {
        matrix: &'static str,
        asymmetry: f64,
        tolerance: f64,
    },

    #[error(
        "{block} is numerically singular (rcond {rcond:.3e} < {threshold:.1e}); \
         the pencil is not guaranteed to be regular"
    )]
    SingularBlock {
        block: &'static str,
        rcond: f64,
        threshold: f64,
    },

    #[error("degenerate spectrum: {0} (finite eigenvalues must be simple and nonzero)")]
    DegenerateSpectrum(String),

    #[error("eigendata not closed under complex conjugation: {0}")]
    NotConjugateClosed(String),

    #[error("zero eigenvalue {0} cannot be represented (eigenvalues must be nonzero)")]
    ZeroEigenvalue(c64),

    #[error("repeated eigenvalue {0} (eigenvalues must be simple)")]
    DuplicateEigenvalue(c64),

    #[error("malformed eigenvalue block structure: {0}")]
    MalformedBlocks(String),

    #[error("no finite eigenvalue matches the requested value {0}")]
    NoMatch(c64),

    #[error("replaced and retained eigenvalues are not disjoint: {0}")]
    Overlap(String),

    #[error("{what} is numerically rank deficient (rank {rank} < {expected})")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        expected: usize,
    },

    #[error("{what} is numerically singular (rcond {rcond:.3e} < {threshold:.1e})")]
    Singular {
        what: &'static str,
        rcond: f64,
        threshold: f64,
    },

    #[error(
        "updated system is not well defined: {what} is numerically singular \
         (rcond {rcond:.3e} < {threshold:.1e})"
    )]
    IllDefined {
        what: &'static str,
        rcond: f64,
        threshold: f64,
    },

    #[error("T⁻¹ = diag(Γ₁₁, 0) + X_φᵀ Φ X_φ is singular (rcond {rcond:.3e})")]
    SingularT { rcond: f64 },

    #[error("condition {condition} violated (residual {residual:.3e} > {tolerance:.1e})")]
    ConditionViolated {
        condition: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("optimizer found no feasible parameter matrix (every trial was singular or ill defined)")]
    NoFeasiblePoint,

    #[error("could not generate a pencil with a simple nonzero spectrum after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("requested eigenvalue structure is infeasible: {0}")]
    StructureInfeasible(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
