use alloc::vec;
use alloc::vec::Vec;

use super::{lift_trace, AbstractionError, ObserverEdge, ObserverMachine, Objective};
use crate::gain::scc;
use crate::plant::{Control, Plant1D};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceSample {
    pub x0: Rational,
    pub inputs: Vec<Control>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFailure {
    pub sample: usize,
    pub t: usize,
    pub cause: AbstractionError,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InclusionReport {
    pub traces: usize,
    pub steps: usize,
    pub failure: Option<TraceFailure>,
}

impl InclusionReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Lifts every sampled plant run into the observer. A run fails if the
/// observer rejects a reading, or the true state leaves the refined range.
pub fn check_behavioral_inclusion(
    obs: &ObserverMachine,
    plant: &Plant1D,
    samples: &[TraceSample],
) -> InclusionReport {
    let mut report = InclusionReport {
        traces: 0,
        steps: 0,
        failure: None,
    };
    for (i, sample) in samples.iter().enumerate() {
        match lift_trace(obs, plant, sample.x0, &sample.inputs) {
            Ok(rows) => {
                if let Some(r) = rows.iter().find(|r| !obs.state(r.state).ambiguous && r.w != 0) {
                    report.failure = Some(TraceFailure {
                        sample: i,
                        t: r.t,
                        cause: AbstractionError::Soundness { t: r.t },
                    });
                    return report;
                }
                report.traces += 1;
                report.steps += rows.len();
            }
            Err(cause) => {
                let t = match cause {
                    AbstractionError::Soundness { t } | AbstractionError::MissingTransition { t } => t,
                    _ => 0,
                };
                report.failure = Some(TraceFailure { sample: i, t, cause });
                return report;
            }
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionBViolation {
    pub sample: usize,
    pub t: usize,
    pub v: u8,
    pub vhat_fine: u8,
    pub vhat_coarse: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionBReport {
    pub traces: usize,
    pub steps: usize,
    pub violation: Option<ConditionBViolation>,
}

impl ConditionBReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks that the finer observer bounds the true performance at least as
/// tightly as the coarser one:
/// `rho - mu(v) >= rho - mu(vhat_fine) >= rho - mu(vhat_coarse)` at every step.
pub fn check_condition_b(
    coarse: &ObserverMachine,
    fine: &ObserverMachine,
    plant: &Plant1D,
    objective: &Objective,
    samples: &[TraceSample],
) -> Result<ConditionBReport, AbstractionError> {
    if !coarse.partition().is_refined_by(fine.partition())
        || coarse.threshold() != fine.threshold()
        || coarse.band() != fine.band()
    {
        return Err(AbstractionError::Config("observers are not built on nested partitions"));
    }
    let rho = objective.rho()?;
    let mut report = ConditionBReport {
        traces: 0,
        steps: 0,
        violation: None,
    };
    for (i, sample) in samples.iter().enumerate() {
        let lo = lift_trace(coarse, plant, sample.x0, &sample.inputs)?;
        let hi = lift_trace(fine, plant, sample.x0, &sample.inputs)?;
        for (c, f) in lo.iter().zip(&hi) {
            let truth = rho - objective.mu.get(&f.v)?;
            let mid = rho - objective.mu.get(&f.vhat)?;
            let low = rho - objective.mu.get(&c.vhat)?;
            if !(truth >= mid && mid >= low) {
                report.violation = Some(ConditionBViolation {
                    sample: i,
                    t: f.t,
                    v: f.v,
                    vhat_fine: f.vhat,
                    vhat_coarse: c.vhat,
                });
                return Ok(report);
            }
        }
        report.traces += 1;
        report.steps += hi.len();
    }
    Ok(report)
}

/// Step bound after which every observer state is decided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventualExactness {
    pub t_star: usize,
    pub reachable_states: usize,
    pub cycle_states: usize,
}

/// Sufficient condition for eventual exactness over all observer runs.
pub fn check_eventual_exactness(obs: &ObserverMachine) -> Option<EventualExactness> {
    check_eventual_exactness_restricted(obs, |_| true)
}

/// Same check over the runs that use only edges accepted by `allowed`, such
/// as the closed loop under a fixed policy.
///
/// Holds when no undecided state is reachable from a cycle; then undecided
/// states occur only on acyclic prefixes and `t_star` is one past the latest
/// step at which one can be visited.
pub fn check_eventual_exactness_restricted(
    obs: &ObserverMachine,
    allowed: impl Fn(&ObserverEdge) -> bool,
) -> Option<EventualExactness> {
    let n = obs.state_count();
    let edges: Vec<(usize, usize, usize)> = obs
        .edges()
        .filter(|e| allowed(e))
        .map(|e| (e.state, e.next, 0))
        .collect();
    let mut out = vec![Vec::new(); n];
    for &(s, t, _) in &edges {
        out[s].push(t);
    }

    let mut reachable = vec![false; n];
    let mut stack = vec![obs.initial()];
    reachable[obs.initial()] = true;
    while let Some(s) = stack.pop() {
        for &t in &out[s] {
            if !reachable[t] {
                reachable[t] = true;
                stack.push(t);
            }
        }
    }

    let comp = scc(n, &edges);
    let mut comp_size = vec![0usize; n];
    for s in 0..n {
        comp_size[comp[s]] += 1;
    }
    let on_cycle: Vec<bool> = (0..n)
        .map(|s| comp_size[comp[s]] > 1 || out[s].contains(&s))
        .collect();

    // Everything reachable from a reachable cycle must be decided.
    let mut after_cycle = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&s| reachable[s] && on_cycle[s]).collect();
    for &s in &stack {
        after_cycle[s] = true;
    }
    while let Some(s) = stack.pop() {
        for &t in &out[s] {
            if !after_cycle[t] {
                after_cycle[t] = true;
                stack.push(t);
            }
        }
    }
    if (0..n).any(|s| after_cycle[s] && !obs.is_decided(s)) {
        return None;
    }

    // The remaining reachable states form a DAG; longest path from the
    // initial state to an undecided state, counted in steps.
    let prefix: Vec<bool> = (0..n).map(|s| reachable[s] && !after_cycle[s]).collect();
    let mut latest: Vec<Option<usize>> = vec![None; n];
    let mut order: Vec<usize> = (0..n).filter(|&s| prefix[s]).collect();
    // Tarjan numbers components sinks first, so descending order is topological.
    order.sort_by_key(|&s| core::cmp::Reverse(comp[s]));
    let mut depth: Vec<Option<usize>> = vec![None; n];
    if prefix[obs.initial()] {
        depth[obs.initial()] = Some(0);
    }
    for &s in &order {
        let Some(d) = depth[s] else { continue };
        if !obs.is_decided(s) {
            latest[s] = Some(d);
        }
        for &t in &out[s] {
            if prefix[t] {
                depth[t] = Some(depth[t].map_or(d + 1, |old| old.max(d + 1)));
            }
        }
    }
    let t_star = latest.iter().flatten().map(|&d| d + 1).max().unwrap_or(0);
    Some(EventualExactness {
        t_star,
        reachable_states: reachable.iter().filter(|&&r| r).count(),
        cycle_states: (0..n).filter(|&s| reachable[s] && on_cycle[s]).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{build_observer, build_partition, ObserverState};
    use crate::plant::{make_tank, Sensor, TankParams, DRAIN, PUMP};
    use crate::rational::{int, rat};

    fn tank() -> Plant1D {
        make_tank(&TankParams::reference()).unwrap()
    }

    fn observer(level: u32) -> ObserverMachine {
        let plant = tank();
        build_observer(&plant, &build_partition(&plant, 6, level).unwrap()).unwrap()
    }

    fn samples(count: usize, horizon: usize) -> Vec<TraceSample> {
        // Deterministic spread of initial levels and input words.
        (0..count)
            .map(|i| TraceSample {
                x0: rat((i * 7 % 121) as i64, 4),
                inputs: (0..horizon)
                    .map(|t| if (i * 31 + t * 17 + t * t) % 5 < 2 { PUMP } else { DRAIN })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn inclusion_holds_on_the_tank() {
        let plant = tank();
        for level in 1..=3 {
            let report = check_behavioral_inclusion(&observer(level), &plant, &samples(40, 60));
            assert!(report.passed(), "{report:?}");
            assert_eq!(report.traces, 40);
        }
        let empty: Vec<TraceSample> = (0..5).map(|i| TraceSample { x0: int(i), inputs: Vec::new() }).collect();
        assert!(check_behavioral_inclusion(&observer(1), &plant, &empty).passed());
    }

    #[test]
    fn swapped_refinement_is_caught() {
        let plant = tank();
        let obs = observer(2);
        let honest = obs.clone();
        let mut parts = obs.into_parts();
        parts.edges = parts
            .edges
            .iter()
            .filter_map(|e| {
                honest.next(e.state, e.y.other(), e.u).map(|next| ObserverEdge { next, ..*e })
            })
            .collect();
        let faulty = ObserverMachine::from_parts(parts).unwrap();
        let report = check_behavioral_inclusion(&faulty, &plant, &samples(20, 40));
        let failure = report.failure.expect("fault detected");
        assert!(matches!(
            failure.cause,
            AbstractionError::Soundness { .. } | AbstractionError::MissingTransition { .. }
        ));
    }

    #[test]
    fn condition_b_on_the_tank() {
        let plant = tank();
        let objective = Objective::band_indicator();
        let s = samples(30, 50);
        for (a, b) in [(1, 2), (2, 3), (1, 3), (2, 2)] {
            let report = check_condition_b(&observer(a), &observer(b), &plant, &objective, &s).unwrap();
            assert!(report.passed(), "{a} {b} {report:?}");
        }
        assert!(matches!(
            check_condition_b(&observer(2), &observer(1), &plant, &objective, &s),
            Err(AbstractionError::Config(_))
        ));
    }

    #[test]
    fn condition_b_catches_an_optimistic_label() {
        let plant = tank();
        let mut parts = observer(1).into_parts();
        parts.states[0].vhat = 0;
        let faulty = ObserverMachine::from_parts(parts).unwrap();
        let report =
            check_condition_b(&faulty, &observer(2), &plant, &Objective::band_indicator(), &samples(3, 5)).unwrap();
        let v = report.violation.expect("violation");
        assert_eq!((v.sample, v.t, v.vhat_coarse), (0, 0, 0));
    }

    #[test]
    fn open_loop_exactness_fails_on_coarse_levels() {
        assert!(check_eventual_exactness(&observer(1)).is_none());
        assert!(check_eventual_exactness(&observer(2)).is_none());
    }

    #[test]
    fn decided_synthetic_observer_has_zero_bound() {
        let obs = observer(1);
        let mut parts = obs.into_parts();
        let cell = crate::abstraction::CellRange::single(4);
        parts.states = alloc::vec![ObserverState {
            range: cell,
            predicted: Sensor::Full,
            ambiguous: false,
            vhat: 0,
        }];
        parts.band = crate::plant::Band { lo: int(20), hi: int(25) };
        parts.edges = alloc::vec![
            ObserverEdge { state: 0, y: Sensor::Full, u: PUMP, next: 0 },
            ObserverEdge { state: 0, y: Sensor::Full, u: DRAIN, next: 0 },
        ];
        let obs = ObserverMachine::from_parts(parts).unwrap();
        let cert = check_eventual_exactness(&obs).unwrap();
        assert_eq!(cert.t_star, 0);
        assert_eq!(cert.cycle_states, 1);
    }

    #[test]
    fn transient_undecided_states_set_t_star() {
        let obs = observer(1);
        let mut parts = obs.into_parts();
        let st = |lo, hi, vhat, ambiguous| ObserverState {
            range: crate::abstraction::CellRange::new(lo, hi),
            predicted: Sensor::Full,
            ambiguous,
            vhat,
        };
        parts.band = crate::plant::Band { lo: int(20), hi: int(25) };
        // 0 (undecided) -> 1 (undecided) -> 2 (decided, self-loop); 0 -> 2.
        parts.states = alloc::vec![st(0, 5, 1, true), st(3, 5, 1, false), st(4, 4, 0, false)];
        let e = |state, next| ObserverEdge { state, y: Sensor::Full, u: PUMP, next };
        parts.edges = alloc::vec![e(0, 1), e(1, 2), e(2, 2), ObserverEdge { u: DRAIN, ..e(0, 2) }];
        let obs = ObserverMachine::from_parts(parts).unwrap();
        assert_eq!(check_eventual_exactness(&obs).unwrap().t_star, 2);
        let no_loop = check_eventual_exactness_restricted(&obs, |e| e.state != 2).unwrap();
        assert_eq!(no_loop.cycle_states, 0);
    }
}
