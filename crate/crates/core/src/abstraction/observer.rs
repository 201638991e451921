use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{AbstractionError, CellRange, DeltaSpec, Partition};
use crate::gain::{compute_gain_witnessed, max_cycle_mean, WeightedGraph};
use crate::plant::{Band, Control, Plant1D, Sensor};
use crate::rational::{int, Gain, Rational};

/// Labels of one observer state. `range` is the knowledge set before the
/// current measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObserverState {
    pub range: CellRange,
    pub predicted: Sensor,
    pub ambiguous: bool,
    pub vhat: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObserverEdge {
    pub state: usize,
    pub y: Sensor,
    pub u: Control,
    pub next: usize,
}

/// Raw contents of an observer, for building synthetic or faulty machines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObserverParts {
    pub partition: Partition,
    pub threshold: Rational,
    pub band: Band,
    pub controls: Vec<String>,
    /// State 0 is initial.
    pub states: Vec<ObserverState>,
    pub edges: Vec<ObserverEdge>,
}

/// Deterministic observer over cell ranges: reads `y`, refines its range by
/// the threshold side, applies `u` and snaps the image to the partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObserverMachine {
    partition: Partition,
    threshold: Rational,
    band: Band,
    controls: Vec<String>,
    states: Vec<ObserverState>,
    /// `[state][y][u]`, flattened.
    table: Vec<Option<usize>>,
}

fn empty_side(p: &Partition, threshold: Rational) -> CellRange {
    let k = (threshold / p.width()).ceil().to_integer() - 1;
    CellRange::new(0, (k.max(0) as usize).min(p.cell_count() - 1))
}

fn full_side(p: &Partition, threshold: Rational) -> CellRange {
    CellRange::new(p.cell_of(threshold), p.top())
}

fn side(p: &Partition, threshold: Rational, y: Sensor) -> CellRange {
    match y {
        Sensor::Empty => empty_side(p, threshold),
        Sensor::Full => full_side(p, threshold),
    }
}

fn label(p: &Partition, threshold: Rational, band: Band, range: CellRange) -> ObserverState {
    // The top cell is a single point and carries no weight in the vote.
    let count = |y| {
        range
            .intersect(&side(p, threshold, y))
            .map_or(0, |r| r.len() - usize::from(r.hi == p.top()))
    };
    let (e, f) = (count(Sensor::Empty), count(Sensor::Full));
    let touches_full = range.hi >= p.cell_of(threshold);
    let predicted = if f > e || (e == 0 && touches_full) {
        Sensor::Full
    } else {
        Sensor::Empty
    };
    let hull = p.range_interval(range);
    let inside = hull.lo >= band.lo && hull.hi <= band.hi;
    ObserverState {
        range,
        predicted,
        ambiguous: e > 0 && touches_full,
        vhat: u8::from(!inside),
    }
}

/// Snapped image of a range, computed from the images of its end cells;
/// for monotone maps this equals the union of the per-cell snaps.
fn image(plant: &Plant1D, p: &Partition, r: CellRange, u: Control) -> Result<CellRange, AbstractionError> {
    let lo = p.snap(plant.interval_image(u, p.cell_interval(r.lo))?)?;
    let hi = p.snap(plant.interval_image(u, p.cell_interval(r.hi))?)?;
    Ok(CellRange::new(lo.lo, hi.hi.max(lo.lo)))
}

/// Builds the reachable observer from the full range.
pub fn build_observer(plant: &Plant1D, partition: &Partition) -> Result<ObserverMachine, AbstractionError> {
    if partition.height() != plant.height() {
        return Err(AbstractionError::Config("partition does not cover the plant range"));
    }
    let p = *partition;
    let theta = plant.threshold();
    let band = plant.band();
    let m = plant.control_count();
    let mut index: BTreeMap<CellRange, usize> = BTreeMap::new();
    let mut states = Vec::new();
    let mut table: Vec<Option<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |r: CellRange, states: &mut Vec<ObserverState>, table: &mut Vec<Option<usize>>, queue: &mut VecDeque<usize>| {
        *index.entry(r).or_insert_with(|| {
            states.push(label(&p, theta, band, r));
            table.extend(core::iter::repeat_n(None, 2 * m));
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };
    intern(p.full(), &mut states, &mut table, &mut queue);
    while let Some(s) = queue.pop_front() {
        let range = states[s].range;
        for y in Sensor::ALL {
            let Some(refined) = range.intersect(&side(&p, theta, y)) else {
                continue;
            };
            for u in plant.controls() {
                let next = image(plant, &p, refined, u)?;
                let t = intern(next, &mut states, &mut table, &mut queue);
                table[(s * 2 + y.index()) * m + u.index()] = Some(t);
            }
        }
    }
    Ok(ObserverMachine {
        partition: p,
        threshold: theta,
        band,
        controls: plant.controls().map(|u| String::from(plant.control_name(u))).collect(),
        states,
        table,
    })
}

impl ObserverMachine {
    pub fn from_parts(parts: ObserverParts) -> Result<Self, AbstractionError> {
        let n = parts.states.len();
        let m = parts.controls.len();
        if n == 0 || m == 0 {
            return Err(AbstractionError::Malformed("no states or no controls"));
        }
        if parts.states.iter().any(|s| s.range.hi > parts.partition.top()) {
            return Err(AbstractionError::Malformed("state range outside the partition"));
        }
        let mut table = vec![None; n * 2 * m];
        for e in &parts.edges {
            if e.state >= n || e.next >= n || e.u.index() >= m {
                return Err(AbstractionError::Malformed("edge refers to an unknown state or control"));
            }
            let slot = &mut table[(e.state * 2 + e.y.index()) * m + e.u.index()];
            if slot.replace(e.next).is_some() {
                return Err(AbstractionError::Malformed("duplicate transition"));
            }
        }
        Ok(Self {
            partition: parts.partition,
            threshold: parts.threshold,
            band: parts.band,
            controls: parts.controls,
            states: parts.states,
            table,
        })
    }

    pub fn into_parts(self) -> ObserverParts {
        let edges = self.edges().collect();
        ObserverParts {
            partition: self.partition,
            threshold: self.threshold,
            band: self.band,
            controls: self.controls,
            states: self.states,
            edges,
        }
    }

    pub fn level(&self) -> u32 {
        self.partition.level()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn threshold(&self) -> Rational {
        self.threshold
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[ObserverState] {
        &self.states
    }

    pub fn state(&self, s: usize) -> &ObserverState {
        &self.states[s]
    }

    pub fn index_of(&self, range: CellRange) -> Option<usize> {
        self.states.iter().position(|s| s.range == range)
    }

    pub fn control_count(&self) -> usize {
        self.controls.len()
    }

    pub fn controls(&self) -> impl ExactSizeIterator<Item = Control> + '_ {
        (0..self.controls.len()).map(|i| Control(i as u8))
    }

    pub fn control_name(&self, u: Control) -> &str {
        &self.controls[u.index()]
    }

    pub fn next(&self, s: usize, y: Sensor, u: Control) -> Option<usize> {
        let m = self.controls.len();
        if s >= self.states.len() || u.index() >= m {
            return None;
        }
        self.table[(s * 2 + y.index()) * m + u.index()]
    }

    /// Whether the observer accepts `y` in state `s`.
    pub fn feasible(&self, s: usize, y: Sensor) -> bool {
        self.controls().any(|u| self.next(s, y, u).is_some())
    }

    pub fn feasible_outputs(&self, s: usize) -> impl Iterator<Item = Sensor> + '_ {
        Sensor::ALL.into_iter().filter(move |&y| self.feasible(s, y))
    }

    /// Mismatch indicator between a reading and the state's prediction.
    pub fn mismatch(&self, s: usize, y: Sensor) -> u8 {
        u8::from(self.states[s].predicted != y)
    }

    /// The part of state `s` consistent with reading `y`.
    pub fn refined_range(&self, s: usize, y: Sensor) -> Option<CellRange> {
        self.states[s]
            .range
            .intersect(&side(&self.partition, self.threshold, y))
    }

    /// Whether every point of the state's range has the performance output
    /// `vhat` and the same sensor reading.
    pub fn is_decided(&self, s: usize) -> bool {
        let st = &self.states[s];
        if st.ambiguous {
            return false;
        }
        let hull = self.partition.range_interval(st.range);
        let inside = hull.lo >= self.band.lo && hull.hi <= self.band.hi;
        let below = hull.hi < self.band.lo || (hull.hi == self.band.lo && !hull.hi_closed);
        let above = hull.lo > self.band.hi;
        match st.vhat {
            0 => inside,
            _ => below || above,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = ObserverEdge> + '_ {
        let m = self.controls.len();
        self.table.iter().enumerate().filter_map(move |(i, next)| {
            next.map(|next| ObserverEdge {
                state: i / (2 * m),
                y: Sensor::ALL[(i / m) % 2],
                u: Control((i % m) as u8),
                next,
            })
        })
    }

    /// Text edge list, one transition per line:
    /// `range y u next_range predicted vhat ambiguous`.
    pub fn edge_list(&self) -> EdgeList<'_> {
        EdgeList(self)
    }

    fn graph(&self, mut weight: impl FnMut(&ObserverEdge) -> (Rational, Rational)) -> WeightedGraph<ObserverEdge> {
        let mut g = WeightedGraph::new(self.states.len(), self.initial()).expect("nonempty observer");
        for e in self.edges() {
            let (rho, mu) = weight(&e);
            g.add_edge(e.state, e.next, rho, mu, e).expect("edge within the observer");
        }
        g
    }
}

pub struct EdgeList<'a>(&'a ObserverMachine);

impl fmt::Display for EdgeList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obs = self.0;
        writeln!(
            f,
            "# observer level={} cells={} states={} theta={} band=[{},{}]",
            obs.level(),
            obs.partition.cell_count(),
            obs.states.len(),
            obs.threshold,
            obs.band.lo,
            obs.band.hi
        )?;
        for e in obs.edges() {
            let st = &obs.states[e.state];
            writeln!(
                f,
                "{} {} {} {} {} {} {}",
                st.range,
                e.y,
                obs.control_name(e.u),
                obs.states[e.next].range,
                st.predicted,
                st.vhat,
                u8::from(st.ambiguous)
            )?;
        }
        Ok(())
    }
}

/// One step of a plant run paired with the observer run it drives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedStep {
    pub t: usize,
    pub x: Rational,
    pub state: usize,
    pub y: Sensor,
    pub predicted: Sensor,
    pub w: u8,
    pub vhat: u8,
    pub v: u8,
    /// `None` on the final row.
    pub u: Option<Control>,
}

/// Runs the plant from `x0` under `inputs` and drives the observer with the
/// true readings, checking that `x` stays inside the refined range.
pub fn lift_trace(
    obs: &ObserverMachine,
    plant: &Plant1D,
    x0: Rational,
    inputs: &[Control],
) -> Result<Vec<LiftedStep>, AbstractionError> {
    let mut rows = Vec::with_capacity(inputs.len() + 1);
    let mut x = x0;
    let mut state = obs.initial();
    if !plant.full_range().contains(x) {
        return Err(crate::plant::PlantError::Domain.into());
    }
    for t in 0..=inputs.len() {
        let y = plant.sensor(x);
        let refined = obs.refined_range(state, y);
        if !refined.is_some_and(|r| obs.partition.range_interval(r).contains(x)) {
            return Err(AbstractionError::Soundness { t });
        }
        let st = obs.state(state);
        let u = inputs.get(t).copied();
        rows.push(LiftedStep {
            t,
            x,
            state,
            y,
            predicted: st.predicted,
            w: obs.mismatch(state, y),
            vhat: st.vhat,
            v: plant.performance(x),
            u,
        });
        if let Some(u) = u {
            state = obs.next(state, y, u).ok_or(AbstractionError::MissingTransition { t })?;
            x = plant.step(x, u)?;
        }
    }
    Ok(rows)
}

/// Error-gain bound with a witness cycle when positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaBound {
    pub gamma_bound: Rational,
    pub witness: Option<Vec<ObserverEdge>>,
}

/// Worst-case mismatch density: the maximum over reachable cycles of the
/// fraction of ambiguous states visited.
pub fn delta_gain_bound(obs: &ObserverMachine) -> DeltaBound {
    let g = obs.graph(|e| (int(1), int(i64::from(obs.state(e.state).ambiguous))));
    match max_cycle_mean(&g, |e| e.mu) {
        Some(cm) if cm.mean > int(0) => DeltaBound {
            gamma_bound: cm.mean,
            witness: Some(cm.cycle.iter().map(|&i| g.edge(i).label).collect()),
        },
        Some(cm) => DeltaBound {
            gamma_bound: cm.mean,
            witness: None,
        },
        None => DeltaBound {
            gamma_bound: int(0),
            witness: None,
        },
    }
}

/// Error gain under general error-channel valuations; an ambiguous state is
/// charged the worse of its two possible mismatch values.
pub fn delta_gain_bound_weighted(
    obs: &ObserverMachine,
    delta: &DeltaSpec,
) -> Result<(Gain, Option<Vec<ObserverEdge>>), AbstractionError> {
    let mut weights = Vec::new();
    for e in obs.edges() {
        let rho = delta.rho.get(&e.u)?;
        let mut mu = delta.mu.get(&0)?;
        if obs.state(e.state).ambiguous {
            mu = mu.max(delta.mu.get(&1)?);
        }
        weights.push((rho, mu));
    }
    let mut i = 0;
    let g = obs.graph(|_| {
        i += 1;
        weights[i - 1]
    });
    let (gain, cycle) = compute_gain_witnessed(&g)?;
    Ok((gain, cycle.map(|c| c.iter().map(|&i| g.edge(i).label).collect())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::build_partition;
    use crate::plant::{make_tank, TankParams, DRAIN, PUMP};
    use crate::rational::rat;

    fn tank() -> Plant1D {
        make_tank(&TankParams::reference()).unwrap()
    }

    fn observer(level: u32) -> ObserverMachine {
        let plant = tank();
        build_observer(&plant, &build_partition(&plant, 6, level).unwrap()).unwrap()
    }

    #[test]
    fn exact_shift_at_level_three() {
        let plant = tank();
        let p = build_partition(&plant, 6, 3).unwrap();
        assert_eq!(image(&plant, &p, CellRange::new(18, 19), DRAIN).unwrap(), CellRange::new(17, 18));
        for k in 1..24 {
            assert_eq!(image(&plant, &p, CellRange::single(k), PUMP).unwrap(), CellRange::single(k + 1));
        }
    }

    #[test]
    fn level_one_drain_spreads() {
        let plant = tank();
        let p = build_partition(&plant, 6, 1).unwrap();
        let next = image(&plant, &p, CellRange::single(3), DRAIN).unwrap();
        assert_eq!(next, CellRange::new(2, 3));
        assert!(label(&p, plant.threshold(), plant.band(), next).ambiguous);
    }

    #[test]
    fn initial_state_labels() {
        for level in 1..=3 {
            let obs = observer(level);
            let s = obs.state(obs.initial());
            assert_eq!(s.range, obs.partition().full());
            assert!(s.ambiguous);
            assert_eq!(s.vhat, 1);
            assert_eq!(s.predicted, Sensor::Empty);
        }
    }

    #[test]
    fn labels_follow_the_band_and_threshold() {
        let obs = observer(3);
        for (i, s) in obs.states().iter().enumerate() {
            let hull = obs.partition().range_interval(s.range);
            let inside = hull.lo >= rat(45, 2) && hull.hi <= int(25);
            assert_eq!(s.vhat == 0, inside);
            assert_eq!(s.ambiguous, s.range.lo < 12 && s.range.hi >= 12);
            assert!(s.range.hi <= 24);
            assert_eq!(obs.feasible_outputs(i).count(), if s.ambiguous { 2 } else { 1 });
        }
    }

    #[test]
    fn tank_bounds_per_level() {
        assert_eq!(delta_gain_bound(&observer(1)).gamma_bound, int(1));
        assert_eq!(delta_gain_bound(&observer(2)).gamma_bound, int(1));
        let fine = delta_gain_bound(&observer(3));
        assert_eq!(fine.gamma_bound, int(0));
        assert!(fine.witness.is_none());
    }

    #[test]
    fn witness_is_an_ambiguous_cycle() {
        let obs = observer(1);
        let w = delta_gain_bound(&obs).witness.unwrap();
        assert!(!w.is_empty());
        for (a, b) in w.iter().zip(w.iter().cycle().skip(1)) {
            assert_eq!(a.next, b.state);
            assert!(obs.state(a.state).ambiguous);
        }
    }

    #[test]
    fn weighted_bound_matches_indicator() {
        for level in 1..=3 {
            let obs = observer(level);
            let (gain, _) = delta_gain_bound_weighted(&obs, &DeltaSpec::mismatch_density(2)).unwrap();
            assert_eq!(gain, Gain::Finite(delta_gain_bound(&obs).gamma_bound));
        }
    }

    #[test]
    fn lift_examples() {
        let plant = tank();
        let obs = observer(3);
        let rows = lift_trace(&obs, &plant, int(23), &[DRAIN; 4]).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows[1..].iter().all(|r| r.w == 0));
        let rows = lift_trace(&obs, &plant, int(7), &[]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(obs.state(rows[0].state).range, obs.partition().full());
    }

    #[test]
    fn level_one_mismatch_near_the_threshold() {
        let plant = tank();
        let obs = observer(1);
        let inputs = [PUMP, DRAIN, DRAIN, PUMP, DRAIN, PUMP, DRAIN, DRAIN, PUMP, PUMP];
        let hit = [rat(29, 2), int(15), rat(61, 4), rat(31, 2)]
            .into_iter()
            .any(|x0| lift_trace(&obs, &plant, x0, &inputs).unwrap()[1..].iter().any(|r| r.w == 1));
        assert!(hit);
    }

    #[test]
    fn parts_round_trip() {
        let obs = observer(2);
        assert_eq!(ObserverMachine::from_parts(obs.clone().into_parts()).unwrap(), obs);
        let mut parts = obs.into_parts();
        parts.edges.push(parts.edges[0]);
        assert!(matches!(
            ObserverMachine::from_parts(parts),
            Err(AbstractionError::Malformed(_))
        ));
    }

    #[test]
    fn edge_list_lines() {
        let obs = observer(1);
        let text = alloc::format!("{}", obs.edge_list());
        assert_eq!(text.lines().count(), 1 + obs.edges().count());
        assert!(text.lines().nth(1).unwrap().starts_with("0..6 Empty Pump "));
    }
}
