//! Minimax synthesis over an observer: game construction, value iteration,
//! controller extraction, certificates and the level-by-level pipeline.

mod certificate;
mod controller;
mod game;
mod pipeline;

pub use certificate::{
    certify, controller_digest, observer_digest, plant_digest, sha256_hex, verify_certificate,
    Certificate, CertificateFailure,
};
pub use controller::{extract_controller, ControllerDfm};
pub use game::{
    backup, build_game, value_iteration, GameGraph, GameMove, Sweep, ValueFunction, ValueIteration,
};
pub use pipeline::{
    synthesize_level, synthesize_pipeline, Attempt, AttemptOutcome, LevelReport, PipelineConfig,
    PipelineOutcome, Synthesis,
};

use crate::abstraction::AbstractionError;
use crate::gain::GainError;
use crate::machine::MachineError;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error("configuration error: {0}")]
    Config(&'static str),
    #[error("malformed observer: {0}")]
    Malformed(&'static str),
    #[error("value iteration diverged; no controller exists at this bound")]
    Infeasible,
    #[error("invalid certificate: {0}")]
    InvalidCertificate(CertificateFailure),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}
