use thiserror::Error;

use crate::dataset::FormatError;
use crate::greechie::GreechieError;
use crate::kolmo::LpError;
use crate::pers::PersError;
use crate::prob::ProbError;
use crate::synth::SynthError;

/// Top-level error for command-line workflows.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Greechie(#[from] GreechieError),
    #[error(transparent)]
    Pers(#[from] PersError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} triple(s) hit a solver failure")]
    TripleSolverFailures(usize),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => EXIT_USAGE,
            Error::Lp(LpError::SolverFailure(_))
            | Error::Greechie(GreechieError::SolverFailure(_))
            | Error::TripleSolverFailures(_) => EXIT_SOLVER,
            _ => EXIT_DATA,
        }
    }
}
