use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use super::{GameGraph, SynthesisError, ValueFunction};
use crate::abstraction::{CellRange, ObserverEdge, ObserverMachine};
use crate::machine::{Dfm, Table};
use crate::plant::{Control, Sensor};

/// Finite-memory controller: its state is the observer state before the
/// current reading, its output the policy on the refined state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControllerDfm {
    /// Observer state behind each controller state.
    memory: Vec<usize>,
    by_observer: BTreeMap<usize, usize>,
    dfm: Dfm<CellRange, Sensor, String>,
    /// Whether the observer accepts each reading; rejected readings are
    /// filled with self-loops to keep the machine total.
    defined: Vec<[bool; 2]>,
}

/// Argmin policy of the converged backup, restricted to the states it
/// reaches from the initial observer state. Ties go to the earliest control
/// in `tie_order`.
pub fn extract_controller(
    obs: &ObserverMachine,
    g: &GameGraph,
    v: &ValueFunction,
    tie_order: &[Control],
) -> Result<ControllerDfm, SynthesisError> {
    let mut sorted: Vec<u8> = tie_order.iter().map(|u| u.0).collect();
    sorted.sort_unstable();
    if sorted != (0..obs.control_count() as u8).collect::<Vec<_>>() {
        return Err(SynthesisError::Config("tie order must list every control once"));
    }
    if v.values.len() != g.node_count() || g.node_count() != obs.state_count() {
        return Err(SynthesisError::Config("value function does not match the game"));
    }
    let policy = |s: usize, y: Sensor| -> Option<(Control, usize)> {
        let mut best: Option<(Control, usize, crate::Rational)> = None;
        for &u in tie_order {
            let mv = g.get(s, y, u)?;
            let score = mv.cost + v.values[mv.next];
            if best.is_none_or(|(_, _, b)| score < b) {
                best = Some((u, mv.next, score));
            }
        }
        best.map(|(u, next, _)| (u, next))
    };

    let mut memory = Vec::new();
    let mut seen = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |s: usize, memory: &mut Vec<usize>, queue: &mut VecDeque<usize>| {
        *seen.entry(s).or_insert_with(|| {
            memory.push(s);
            queue.push_back(memory.len() - 1);
            memory.len() - 1
        })
    };
    intern(obs.initial(), &mut memory, &mut queue);
    let mut rows: Vec<[(usize, usize, bool); 2]> = Vec::new();
    while let Some(q) = queue.pop_front() {
        let s = memory[q];
        let mut row = [(q, tie_order[0].index(), false); 2];
        for y in Sensor::ALL {
            if let Some((u, next)) = policy(s, y) {
                row[y.index()] = (intern(next, &mut memory, &mut queue), u.index(), true);
            }
        }
        rows.push(row);
    }
    let by_observer = memory.iter().enumerate().map(|(q, &s)| (s, q)).collect();
    let dfm = Dfm::from_fn(
        memory.iter().map(|&s| obs.state(s).range).collect(),
        0,
        Sensor::ALL.to_vec(),
        obs.controls().map(|u| String::from(obs.control_name(u))).collect(),
        |q, y| (rows[q][y].0, rows[q][y].1),
    )?;
    Ok(ControllerDfm {
        memory,
        by_observer,
        dfm,
        defined: rows.iter().map(|r| [r[0].2, r[1].2]).collect(),
    })
}

impl ControllerDfm {
    /// Rebinds a controller table to the observer it was extracted from.
    pub fn from_dfm(dfm: Dfm<CellRange, Sensor, String>, obs: &ObserverMachine) -> Result<Self, SynthesisError> {
        let names: Vec<&str> = obs.controls().map(|u| obs.control_name(u)).collect();
        if dfm.outputs().iter().map(String::as_str).ne(names.iter().copied())
            || dfm.inputs() != Sensor::ALL
            || dfm.initial() != 0
        {
            return Err(SynthesisError::Config("controller alphabets do not match the observer"));
        }
        let memory = dfm
            .states()
            .iter()
            .map(|r| obs.index_of(*r))
            .collect::<Option<Vec<_>>>()
            .ok_or(SynthesisError::Config("controller state is not an observer state"))?;
        if memory[0] != obs.initial() {
            return Err(SynthesisError::Config("controller must start from the initial observer state"));
        }
        let by_observer: BTreeMap<usize, usize> = memory.iter().enumerate().map(|(q, &s)| (s, q)).collect();
        if by_observer.len() != memory.len() {
            return Err(SynthesisError::Config("duplicate controller state"));
        }
        let defined = memory
            .iter()
            .map(|&s| [obs.feasible(s, Sensor::Empty), obs.feasible(s, Sensor::Full)])
            .collect();
        Ok(Self {
            memory,
            by_observer,
            dfm,
            defined,
        })
    }

    pub fn state_count(&self) -> usize {
        self.memory.len()
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn dfm(&self) -> &Dfm<CellRange, Sensor, String> {
        &self.dfm
    }

    pub fn observer_state(&self, q: usize) -> usize {
        self.memory[q]
    }

    pub fn range(&self, q: usize) -> CellRange {
        self.dfm.states()[q]
    }

    /// `(next state, control)` on reading `y`, if the reading is possible.
    pub fn step(&self, q: usize, y: Sensor) -> Option<(usize, Control)> {
        if !self.defined[q][y.index()] {
            return None;
        }
        let (next, u) = self.dfm.step(q, y.index());
        Some((next, Control(u as u8)))
    }

    pub fn policy(&self, q: usize, y: Sensor) -> Option<Control> {
        self.step(q, y).map(|(_, u)| u)
    }

    /// Whether the closed loop can take observer edge `e`.
    pub fn uses(&self, e: &ObserverEdge) -> bool {
        self.by_observer
            .get(&e.state)
            .and_then(|&q| self.policy(q, e.y))
            .is_some_and(|u| u == e.u)
    }

    /// Text table in the machine format.
    pub fn table(&self) -> Table<'_, CellRange, Sensor, String> {
        self.dfm.table()
    }
}
