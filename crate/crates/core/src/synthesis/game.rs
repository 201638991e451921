use alloc::vec;
use alloc::vec::Vec;

use num_traits::Signed;

use super::SynthesisError;
use crate::abstraction::{DeltaSpec, ObserverMachine, Objective};
use crate::plant::{Control, Sensor};
use crate::rational::{common_denominator, int, scaled, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameMove {
    pub cost: Rational,
    pub next: usize,
}

/// Two-player game over observer states: the environment picks a feasible
/// reading `y`, then the controller picks `u` and pays `cost(S, y, u)`.
///
/// `cost = mu(vhat) + tau*gamma*rho_delta(u) - rho - tau*mu_delta(w)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameGraph {
    nodes: usize,
    controls: usize,
    /// `[node][y][u]`, flattened; `None` where `y` is infeasible.
    moves: Vec<Option<GameMove>>,
    gamma_bound: Rational,
    tau: Rational,
}

pub fn build_game(
    obs: &ObserverMachine,
    objective: &Objective,
    delta: &DeltaSpec,
    gamma_bound: Rational,
    tau: Rational,
) -> Result<GameGraph, SynthesisError> {
    if !tau.is_positive() {
        return Err(SynthesisError::Config("tau must be positive"));
    }
    if gamma_bound.is_negative() {
        return Err(SynthesisError::Config("gamma bound must be non-negative"));
    }
    let m = obs.control_count();
    let rho = objective.rho()?;
    let mut moves = vec![None; obs.state_count() * 2 * m];
    for s in 0..obs.state_count() {
        let st = obs.state(s);
        let mut any = false;
        for y in Sensor::ALL {
            if !obs.feasible(s, y) {
                continue;
            }
            any = true;
            let credit = tau * delta.mu.get(&obs.mismatch(s, y))?;
            for u in obs.controls() {
                let next = obs
                    .next(s, y, u)
                    .ok_or(SynthesisError::Malformed("reading accepted for some controls only"))?;
                let cost = objective.mu.get(&st.vhat)? + tau * gamma_bound * delta.rho.get(&u)? - rho - credit;
                moves[(s * 2 + y.index()) * m + u.index()] = Some(GameMove { cost, next });
            }
        }
        if !any {
            return Err(SynthesisError::Malformed("observer state admits no reading"));
        }
    }
    Ok(GameGraph {
        nodes: obs.state_count(),
        controls: m,
        moves,
        gamma_bound,
        tau,
    })
}

impl GameGraph {
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn control_count(&self) -> usize {
        self.controls
    }

    pub fn gamma_bound(&self) -> Rational {
        self.gamma_bound
    }

    pub fn tau(&self) -> Rational {
        self.tau
    }

    pub fn moves(&self, s: usize, y: Sensor) -> Option<impl Iterator<Item = (Control, GameMove)> + '_> {
        let base = (s * 2 + y.index()) * self.controls;
        self.moves[base]?;
        Some((0..self.controls).map(move |u| {
            (Control(u as u8), self.moves[base + u].expect("cost table is total per reading"))
        }))
    }

    pub fn get(&self, s: usize, y: Sensor, u: Control) -> Option<GameMove> {
        self.moves[(s * 2 + y.index()) * self.controls + u.index()]
    }

    pub fn feasible_outputs(&self, s: usize) -> impl Iterator<Item = Sensor> + '_ {
        Sensor::ALL
            .into_iter()
            .filter(move |&y| self.moves[(s * 2 + y.index()) * self.controls].is_some())
    }

    pub fn max_cost(&self) -> Rational {
        self.moves.iter().flatten().map(|m| m.cost).max().unwrap_or(int(0))
    }
}

/// Node update order for value iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sweep {
    /// Every node reads the previous iterate.
    #[default]
    Jacobi,
    /// Nodes read values already updated in the current sweep.
    GaussSeidel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueFunction {
    pub values: Vec<Rational>,
    pub iterations: usize,
}

impl ValueFunction {
    pub fn value(&self, s: usize) -> Rational {
        self.values[s]
    }

    pub fn max(&self) -> Rational {
        self.values.iter().copied().max().unwrap_or(int(0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueIteration {
    Converged(ValueFunction),
    /// Some value passed `threshold`, so no finite fixed point exists.
    Diverged {
        node: usize,
        iterations: usize,
        threshold: Rational,
    },
}

impl ValueIteration {
    pub fn into_values(self) -> Result<ValueFunction, SynthesisError> {
        match self {
            ValueIteration::Converged(v) => Ok(v),
            ValueIteration::Diverged { .. } => Err(SynthesisError::Infeasible),
        }
    }

    pub fn converged(&self) -> Option<&ValueFunction> {
        match self {
            ValueIteration::Converged(v) => Some(v),
            ValueIteration::Diverged { .. } => None,
        }
    }
}

struct Scaled {
    scale: i64,
    cost: Vec<Option<(i128, usize)>>,
}

fn scale(g: &GameGraph) -> Scaled {
    let costs: Vec<Rational> = g.moves.iter().flatten().map(|m| m.cost).collect();
    let scale = common_denominator(costs.iter());
    Scaled {
        scale,
        cost: g.moves.iter().map(|m| m.map(|m| (scaled(&m.cost, scale), m.next))).collect(),
    }
}

fn backup_node(g: &GameGraph, sc: &Scaled, values: &[i128], s: usize) -> i128 {
    let m = g.controls;
    let mut best = 0i128;
    for y in 0..2 {
        let base = (s * 2 + y) * m;
        if sc.cost[base].is_none() {
            continue;
        }
        let choice = (0..m)
            .map(|u| {
                let (c, next) = sc.cost[base + u].expect("total per reading");
                c + values[next]
            })
            .min()
            .expect("at least one control");
        best = best.max(choice);
    }
    best
}

/// One Jacobi application of `V(S) = max(0, max_y min_u [c + V(S')])`.
pub fn backup(g: &GameGraph, values: &[Rational]) -> Vec<Rational> {
    (0..g.nodes)
        .map(|s| {
            let mut best = int(0);
            for y in g.feasible_outputs(s) {
                let choice = g
                    .moves(s, y)
                    .expect("feasible")
                    .map(|(_, mv)| mv.cost + values[mv.next])
                    .min()
                    .expect("at least one control");
                best = best.max(choice);
            }
            best
        })
        .collect()
}

/// Least fixed point of the zero-clamped minimax backup, iterated from 0.
/// Declares divergence once a value exceeds `N * C`, with `N` nodes and `C`
/// the largest positive step cost.
pub fn value_iteration(g: &GameGraph, sweep: Sweep) -> ValueIteration {
    let sc = scale(g);
    let max_cost = sc.cost.iter().flatten().map(|&(c, _)| c).max().unwrap_or(0).max(0);
    let threshold = max_cost * g.nodes as i128;
    let to_rational = |x: i128| {
        Rational::new(
            i64::try_from(x).expect("value fits i64"),
            sc.scale,
        )
    };
    let mut values = vec![0i128; g.nodes];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut changed = false;
        match sweep {
            Sweep::Jacobi => {
                let next: Vec<i128> = (0..g.nodes).map(|s| backup_node(g, &sc, &values, s)).collect();
                changed = next != values;
                values = next;
            }
            Sweep::GaussSeidel => {
                for s in 0..g.nodes {
                    let v = backup_node(g, &sc, &values, s);
                    if v != values[s] {
                        values[s] = v;
                        changed = true;
                    }
                }
            }
        }
        if let Some(node) = values.iter().position(|&v| v > threshold) {
            return ValueIteration::Diverged {
                node,
                iterations,
                threshold: to_rational(threshold),
            };
        }
        if !changed {
            return ValueIteration::Converged(ValueFunction {
                values: values.into_iter().map(to_rational).collect(),
                iterations,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{build_observer, build_partition};
    use crate::plant::{make_tank, TankParams, DRAIN, PUMP};

    fn game(level: u32, gamma: Rational) -> (ObserverMachine, GameGraph) {
        let plant = make_tank(&TankParams::reference()).unwrap();
        let obs = build_observer(&plant, &build_partition(&plant, 6, level).unwrap()).unwrap();
        let g = build_game(&obs, &Objective::band_indicator(), &DeltaSpec::mismatch_density(2), gamma, int(1)).unwrap();
        (obs, g)
    }

    #[test]
    fn cost_examples() {
        let (obs, g) = game(3, int(0));
        let out = obs
            .states()
            .iter()
            .position(|s| !s.ambiguous && s.vhat == 1)
            .unwrap();
        let y = obs.state(out).predicted;
        assert_eq!(g.get(out, y, PUMP).unwrap().cost, int(1));
        assert_eq!(g.get(out, y, DRAIN).unwrap().cost, int(1));

        let amb = obs.initial();
        let y = obs.state(amb).predicted.other();
        assert_eq!(g.get(amb, y, PUMP).unwrap().cost, int(i64::from(obs.state(amb).vhat) - 1));

        let (obs, g) = game(3, int(1));
        let inband = obs.states().iter().position(|s| s.vhat == 0 && !s.ambiguous).unwrap();
        let y = obs.state(inband).predicted;
        assert_eq!(g.get(inband, y, PUMP).unwrap().cost, int(1));
    }

    #[test]
    fn rejects_bad_parameters() {
        let plant = make_tank(&TankParams::reference()).unwrap();
        let obs = build_observer(&plant, &build_partition(&plant, 6, 1).unwrap()).unwrap();
        let o = Objective::band_indicator();
        let d = DeltaSpec::mismatch_density(2);
        assert!(matches!(build_game(&obs, &o, &d, int(0), int(0)), Err(SynthesisError::Config(_))));
        assert!(matches!(build_game(&obs, &o, &d, int(-1), int(1)), Err(SynthesisError::Config(_))));
    }

    #[test]
    fn tank_outcomes_per_level() {
        for level in [1, 2] {
            let (_, g) = game(level, int(1));
            assert!(matches!(value_iteration(&g, Sweep::Jacobi), ValueIteration::Diverged { .. }));
        }
        let (_, g) = game(3, int(0));
        assert!(value_iteration(&g, Sweep::Jacobi).converged().is_some());
    }

    #[test]
    fn sweep_orders_agree() {
        for (level, gamma) in [(1, int(1)), (2, int(1)), (3, int(0)), (2, int(0)), (3, rat_half())] {
            let (_, g) = game(level, gamma);
            let a = value_iteration(&g, Sweep::Jacobi);
            let b = value_iteration(&g, Sweep::GaussSeidel);
            match (&a, &b) {
                (ValueIteration::Converged(x), ValueIteration::Converged(y)) => assert_eq!(x.values, y.values),
                (ValueIteration::Diverged { .. }, ValueIteration::Diverged { .. }) => {}
                _ => panic!("orders disagree at level {level}"),
            }
        }
    }

    fn rat_half() -> Rational {
        Rational::new(1, 2)
    }

    #[test]
    fn iterates_rise_to_the_fixed_point() {
        let (_, g) = game(3, int(0));
        let fixed = value_iteration(&g, Sweep::Jacobi).converged().unwrap().clone();
        let mut v = vec![int(0); g.node_count()];
        for _ in 0..fixed.iterations + 1 {
            let next = backup(&g, &v);
            for s in 0..g.node_count() {
                assert!(next[s] >= v[s]);
                assert!(next[s] <= fixed.values[s]);
            }
            v = next;
        }
        assert_eq!(v, fixed.values);
        assert_eq!(backup(&g, &fixed.values), fixed.values);
    }
}
