//! Closed-loop runs of the plant with a synthesized controller, and
//! empirical checks of the performance objective and the certificate bound.

use alloc::vec::Vec;

use crate::abstraction::{DeltaSpec, ObserverMachine, Objective};
use crate::gain::GainError;
use crate::plant::{Control, Plant1D, PlantError, Sensor};
use crate::rational::{int, Rational};
use crate::synthesis::{Certificate, ControllerDfm};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimulationError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error("controller has no move for the reading at t={t}")]
    Undefined { t: usize },
    #[error("plant state escaped the controller's knowledge at t={t}")]
    Soundness { t: usize },
    #[error("controller was not extracted from this observer")]
    Mismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedLoopRow {
    pub t: usize,
    pub x: Rational,
    pub y: Sensor,
    /// Control chosen at `t`; it moves the plant to the next row.
    pub u: Control,
    pub v: u8,
    /// Mismatch between `y` and the observer's prediction.
    pub w: u8,
    pub state: usize,
    /// `sum_{s <= t} rho - mu(v(s))`.
    pub partial_sum: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedLoopTrajectory {
    pub rows: Vec<ClosedLoopRow>,
}

/// Runs `steps` plant transitions from `x0`; the result has `steps + 1` rows.
pub fn closed_loop_sim(
    plant: &Plant1D,
    obs: &ObserverMachine,
    k: &ControllerDfm,
    objective: &Objective,
    x0: Rational,
    steps: usize,
) -> Result<ClosedLoopTrajectory, SimulationError> {
    if k.range(k.initial()) != obs.state(obs.initial()).range {
        return Err(SimulationError::Mismatch);
    }
    if !plant.full_range().contains(x0) {
        return Err(PlantError::Domain.into());
    }
    let rho = objective.rho()?;
    let mut rows = Vec::with_capacity(steps + 1);
    let (mut x, mut q, mut sum) = (x0, k.initial(), int(0));
    for t in 0..=steps {
        let s = k.observer_state(q);
        let y = plant.sensor(x);
        let refined = obs.refined_range(s, y).ok_or(SimulationError::Soundness { t })?;
        if !obs.partition().range_interval(refined).contains(x) {
            return Err(SimulationError::Soundness { t });
        }
        let (next, u) = k.step(q, y).ok_or(SimulationError::Undefined { t })?;
        let v = plant.performance(x);
        sum += rho - objective.mu.get(&v)?;
        rows.push(ClosedLoopRow {
            t,
            x,
            y,
            u,
            v,
            w: obs.mismatch(s, y),
            state: q,
            partial_sum: sum,
        });
        if t < steps {
            x = plant.step(x, u)?;
            q = next;
        }
    }
    Ok(ClosedLoopTrajectory { rows })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectiveReport {
    pub min_partial_sum: Rational,
    /// Last row with `v != 0`.
    pub last_violation: Option<usize>,
}

/// Minimum over the recorded partial sums of `rho - mu(v)`.
pub fn empirical_objective_check(v: &[u8], objective: &Objective) -> Result<ObjectiveReport, GainError> {
    let rho = objective.rho()?;
    let mut sum = int(0);
    let mut min = int(0);
    for &x in v {
        sum += rho - objective.mu.get(&x)?;
        min = min.min(sum);
    }
    Ok(ObjectiveReport {
        min_partial_sum: min,
        last_violation: v.iter().rposition(|&x| x != 0),
    })
}

/// First row where
/// `sum mu(v) - rho > B + tau * sum (mu_d(w) - gamma * rho_d(u))`, if any.
pub fn certificate_violation(
    traj: &ClosedLoopTrajectory,
    cert: &Certificate,
    objective: &Objective,
    delta: &DeltaSpec,
) -> Result<Option<usize>, GainError> {
    let rho = objective.rho()?;
    let (mut lhs, mut credit) = (int(0), int(0));
    for row in &traj.rows {
        lhs += objective.mu.get(&row.v)? - rho;
        credit += delta.mu.get(&row.w)? - cert.gamma_bound * delta.rho.get(&row.u)?;
        if lhs > cert.value_bound + cert.tau * credit {
            return Ok(Some(row.t));
        }
    }
    Ok(None)
}
