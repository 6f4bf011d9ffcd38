use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("negative power {value} at subcarrier {index}")]
    NegativePower { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sidelobe region is empty")]
    EmptySidelobeRegion,

    #[error("waveform envelope is identically zero")]
    ZeroWaveform,

    #[error("initial selection {case} violates the minimum interval constraint (L = {min_gap})")]
    InitialSelectionInfeasible { case: &'static str, min_gap: usize },

    #[error("no binary selection satisfies the assignment constraints")]
    NoFeasibleBinarization,

    #[error("subproblem infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("outer iteration {outer}: {source}")]
    AtIteration { outer: usize, source: Box<Error> },

    #[error("trial {trial}: {source}")]
    AtTrial { trial: usize, source: Box<Error> },
}

impl Error {
    pub fn at_iteration(self, outer: usize) -> Self {
        Error::AtIteration {
            outer,
            source: Box::new(self),
        }
    }

    pub fn at_trial(self, trial: usize) -> Self {
        Error::AtTrial {
            trial,
            source: Box::new(self),
        }
    }

    /// Innermost error, with iteration/trial context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } | Error::AtTrial { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(
            self.root(),
            Error::Infeasible(_)
                | Error::NoFeasibleBinarization
                | Error::InitialSelectionInfeasible { .. }
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidConfig(_) | Error::EmptySidelobeRegion
        )
    }
}
