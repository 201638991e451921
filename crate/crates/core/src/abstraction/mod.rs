//! Finite-state observer abstractions of a [`Plant1D`](crate::plant::Plant1D)
//! over a doubling sequence of uniform partitions, their error-gain bounds,
//! and sampled checks of the approximation conditions.

mod checks;
mod observer;
mod partition;

pub use checks::{
    check_behavioral_inclusion, check_condition_b, check_eventual_exactness,
    check_eventual_exactness_restricted, ConditionBReport, ConditionBViolation, EventualExactness, InclusionReport,
    TraceFailure, TraceSample,
};
pub use observer::{
    build_observer, delta_gain_bound, delta_gain_bound_weighted, lift_trace, DeltaBound,
    LiftedStep, ObserverEdge, ObserverMachine, ObserverParts, ObserverState,
};
pub use partition::{build_partition, CellRange, Partition};

use crate::gain::{GainError, Valuation};
use crate::plant::{Control, PlantError};
use crate::rational::{int, Rational};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AbstractionError {
    #[error("configuration error: {0}")]
    Config(&'static str),
    #[error("empty interval")]
    EmptyInterval,
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error("plant state escaped the refined observer range at t={t}")]
    Soundness { t: usize },
    #[error("observer has no transition for the observed output at t={t}")]
    MissingTransition { t: usize },
    #[error("malformed observer: {0}")]
    Malformed(&'static str),
}

/// Performance objective over the reference channel (trivial here) and the
/// performance output `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub rho: Valuation<()>,
    pub mu: Valuation<u8>,
}

impl Objective {
    /// `rho = 0`, `mu(v) = v`: count the steps spent outside the band.
    pub fn band_indicator() -> Self {
        Self {
            rho: Valuation::constant([()], int(0)),
            mu: Valuation::from_fn([0u8, 1], |v| int(i64::from(*v))),
        }
    }

    pub fn rho(&self) -> Result<Rational, GainError> {
        self.rho.get(&())
    }
}

/// Valuations of the error channel: `rho` over controls (the `z` signal),
/// `mu` over the mismatch indicator `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaSpec {
    pub rho: Valuation<Control>,
    pub mu: Valuation<u8>,
}

impl DeltaSpec {
    /// `rho = 1` on every control, `mu(w) = w`.
    pub fn mismatch_density(controls: usize) -> Self {
        Self {
            rho: Valuation::constant((0..controls).map(|u| Control(u as u8)), int(1)),
            mu: Valuation::from_fn([0u8, 1], |w| int(i64::from(*w))),
        }
    }
}
