//! Scenario files, artifact formats and the command-line front end for
//! `gainsynth-core`.

pub mod artifacts;
pub mod cli;
pub mod scenario;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("certificate verification failed: {0}")]
    Certificate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 2,
            Error::Config(_) | Error::Io(_) => 3,
            Error::Certificate(_) => 4,
        }
    }
}
