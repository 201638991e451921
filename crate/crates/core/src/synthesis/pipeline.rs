use alloc::vec;
use alloc::vec::Vec;

use super::{
    build_game, certify, extract_controller, value_iteration, Certificate, ControllerDfm, GameGraph,
    Sweep, SynthesisError, ValueFunction, ValueIteration,
};
use crate::abstraction::{
    build_observer, build_partition, delta_gain_bound_weighted, DeltaSpec, ObserverMachine, Objective,
};
use crate::plant::{Plant1D, DRAIN, PUMP};
use crate::plant::Control;
use crate::rational::{int, Gain, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub base: usize,
    pub max_level: u32,
    /// Tried in order at each level until one converges.
    pub taus: Vec<Rational>,
    pub tie_order: Vec<Control>,
    pub sweep: Sweep,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            base: 6,
            max_level: 4,
            taus: vec![int(1)],
            tie_order: vec![PUMP, DRAIN],
            sweep: Sweep::Jacobi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attempt {
    pub tau: Rational,
    pub outcome: AttemptOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttemptOutcome {
    Converged { initial_value: Rational, iterations: usize },
    Diverged { node: usize, iterations: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelReport {
    pub level: u32,
    pub observer_states: usize,
    pub delta_bound: Gain,
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub level: u32,
    pub gamma_bound: Rational,
    pub tau: Rational,
    pub observer: ObserverMachine,
    pub game: GameGraph,
    pub values: ValueFunction,
    pub controller: ControllerDfm,
    pub certificate: Certificate,
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub levels: Vec<LevelReport>,
    pub success: Option<Synthesis>,
}

/// Synthesis at one level against the observer's own error bound.
pub fn synthesize_level(
    plant: &Plant1D,
    objective: &Objective,
    delta: &DeltaSpec,
    level: u32,
    config: &PipelineConfig,
) -> Result<(LevelReport, Option<Synthesis>), SynthesisError> {
    if config.taus.is_empty() {
        return Err(SynthesisError::Config("at least one tau is required"));
    }
    let observer = build_observer(plant, &build_partition(plant, config.base, level)?)?;
    let (delta_bound, _) = delta_gain_bound_weighted(&observer, delta)?;
    let mut report = LevelReport {
        level,
        observer_states: observer.state_count(),
        delta_bound,
        attempts: Vec::new(),
    };
    let Gain::Finite(gamma) = delta_bound else {
        return Ok((report, None));
    };
    for &tau in &config.taus {
        let game = build_game(&observer, objective, delta, gamma, tau)?;
        match value_iteration(&game, config.sweep) {
            ValueIteration::Diverged { node, iterations, .. } => report.attempts.push(Attempt {
                tau,
                outcome: AttemptOutcome::Diverged { node, iterations },
            }),
            ValueIteration::Converged(values) => {
                report.attempts.push(Attempt {
                    tau,
                    outcome: AttemptOutcome::Converged {
                        initial_value: values.value(observer.initial()),
                        iterations: values.iterations,
                    },
                });
                let controller = extract_controller(&observer, &game, &values, &config.tie_order)?;
                let certificate =
                    certify(plant, &observer, &controller, &values, objective, delta, gamma, tau)?;
                return Ok((
                    report,
                    Some(Synthesis {
                        level,
                        gamma_bound: gamma,
                        tau,
                        observer,
                        game,
                        values,
                        controller,
                        certificate,
                    }),
                ));
            }
        }
    }
    Ok((report, None))
}

/// Refines level by level and stops at the first level where synthesis
/// succeeds.
pub fn synthesize_pipeline(
    plant: &Plant1D,
    objective: &Objective,
    delta: &DeltaSpec,
    config: &PipelineConfig,
) -> Result<PipelineOutcome, SynthesisError> {
    if config.max_level < 1 {
        return Err(SynthesisError::Config("max level must be at least 1"));
    }
    let mut levels = Vec::new();
    for level in 1..=config.max_level {
        let (report, success) = synthesize_level(plant, objective, delta, level, config)?;
        levels.push(report);
        if success.is_some() {
            return Ok(PipelineOutcome { levels, success });
        }
    }
    Ok(PipelineOutcome { levels, success: None })
}
