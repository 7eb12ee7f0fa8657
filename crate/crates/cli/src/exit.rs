use spilloverfree::Error;
use thiserror::Error as ThisError;

/// Failures of a CLI run: library errors plus the checks the CLI itself makes.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFICATION_FAILED: i32 = 40;
pub const EXIT_ARTIFACT_MISMATCH: i32 = 41;

/// Exit status per error class. Usage errors (from argument parsing) exit 2.
pub fn exit_code(e: &CliError) -> i32 {
    match e {
        CliError::VerificationFailed(_) => EXIT_VERIFICATION_FAILED,
        CliError::ArtifactMismatch(_) => EXIT_ARTIFACT_MISMATCH,
        CliError::Core(e) => match e {
            Error::DimensionMismatch(_) => 10,
            Error::NonFinite(_) => 11,
            Error::AsymmetricInput { .. } => 12,
            Error::SingularBlock { .. } => 13,
            Error::DegenerateSpectrum(_) => 14,
            Error::NotConjugateClosed(_) => 15,
            Error::ZeroEigenvalue(_) => 16,
            Error::DuplicateEigenvalue(_) => 17,
            Error::MalformedBlocks(_) => 18,
            Error::NoMatch(_) => 19,
            Error::Overlap(_) => 20,
            Error::RankDeficient { .. } => 21,
            Error::Singular { .. } => 22,
            Error::IllDefined { .. } => 23,
            Error::SingularT { .. } => 24,
            Error::NoFeasiblePoint => 25,
            Error::GenerationFailed { .. } => 26,
            Error::StructureInfeasible(_) => 27,
            Error::Parse { .. } => 28,
            Error::Io(_) => 29,
            Error::InvalidConfig(_) => 30,
            Error::ConditionViolated { .. } => 31,
        },
    }
}
