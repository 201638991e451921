//! Deterministic finite state machines, their execution and feedback
//! interconnection.
//!
//! A [`Dfm`] is Mealy-style: `q(t+1) = f(q(t), u(t))`, `y(t) = g(q(t), u(t))`.
//! Symbols are stored by index; the alphabets map indices back to values.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error("input symbol is not in the machine's alphabet")]
    Alphabet,
    #[error("transition or output table refers to an undeclared state or symbol")]
    Malformed,
    #[error("algebraic loop: both machines need the other's current output")]
    IllPosed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfm<Q, U, Y> {
    states: Vec<Q>,
    initial: usize,
    inputs: Vec<U>,
    outputs: Vec<Y>,
    /// `next[q * inputs.len() + u]`
    next: Vec<usize>,
    /// `out[q * inputs.len() + u]`
    out: Vec<usize>,
}

impl<Q, U: PartialEq, Y> Dfm<Q, U, Y> {
    /// Builds a machine from `table(q, u) -> (next state, output)` over
    /// state, input and output indices.
    pub fn from_fn(
        states: Vec<Q>,
        initial: usize,
        inputs: Vec<U>,
        outputs: Vec<Y>,
        table: impl Fn(usize, usize) -> (usize, usize),
    ) -> Result<Self, MachineError> {
        if initial >= states.len() {
            return Err(MachineError::Malformed);
        }
        let mut next = Vec::with_capacity(states.len() * inputs.len());
        let mut out = Vec::with_capacity(states.len() * inputs.len());
        for q in 0..states.len() {
            for u in 0..inputs.len() {
                let (n, y) = table(q, u);
                if n >= states.len() || y >= outputs.len() {
                    return Err(MachineError::Malformed);
                }
                next.push(n);
                out.push(y);
            }
        }
        Ok(Self {
            states,
            initial,
            inputs,
            outputs,
            next,
            out,
        })
    }

    pub fn states(&self) -> &[Q] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn inputs(&self) -> &[U] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Y] {
        &self.outputs
    }

    pub fn input_index(&self, u: &U) -> Result<usize, MachineError> {
        self.inputs
            .iter()
            .position(|x| x == u)
            .ok_or(MachineError::Alphabet)
    }

    /// `(f(q, u), g(q, u))` by index.
    pub fn step(&self, q: usize, u: usize) -> (usize, usize) {
        let i = q * self.inputs.len() + u;
        (self.next[i], self.out[i])
    }

    /// Runs the machine from its initial state.
    pub fn run(&self, input: &[U]) -> Result<Vec<&Y>, MachineError> {
        let mut q = self.initial;
        let mut output = Vec::with_capacity(input.len());
        for u in input {
            let (n, y) = self.step(q, self.input_index(u)?);
            output.push(&self.outputs[y]);
            q = n;
        }
        Ok(output)
    }

    /// States reachable from the initial state under some input word.
    pub fn reachable_states(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([self.initial]);
        seen.insert(self.initial);
        while let Some(q) = queue.pop_front() {
            for u in 0..self.inputs.len() {
                let n = self.step(q, u).0;
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// Whether the output at some state depends on the current input.
    fn output_depends_on_input(&self, group: impl Fn(usize) -> usize) -> bool {
        (0..self.states.len()).any(|q| {
            (0..self.inputs.len()).any(|a| {
                (0..self.inputs.len())
                    .any(|b| group(a) == group(b) && self.step(q, a).1 != self.step(q, b).1)
            })
        })
    }

    /// Text table: an `initial` line, then one `state input next output`
    /// line per transition.
    pub fn table(&self) -> Table<'_, Q, U, Y> {
        Table(self)
    }
}

/// Runs a machine; see [`Dfm::run`].
pub fn dfm_run<'a, Q, U: PartialEq, Y>(
    m: &'a Dfm<Q, U, Y>,
    input: &[U],
) -> Result<Vec<&'a Y>, MachineError> {
    m.run(input)
}

pub struct Table<'a, Q, U, Y>(&'a Dfm<Q, U, Y>);

impl<Q: fmt::Display, U: fmt::Display, Y: fmt::Display> fmt::Display for Table<'_, Q, U, Y> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0;
        writeln!(f, "initial {}", m.states[m.initial])?;
        for q in 0..m.states.len() {
            for u in 0..m.inputs.len() {
                let (n, y) = (m.next[q * m.inputs.len() + u], m.out[q * m.inputs.len() + u]);
                writeln!(f, "{} {} {} {}", m.states[q], m.inputs[u], m.states[n], m.outputs[y])?;
            }
        }
        Ok(())
    }
}

/// Nondeterministic machine: every `(state, input)` has at least one
/// `(next state, output)` successor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfsm<Q, W, Z> {
    pub states: Vec<Q>,
    pub initial: usize,
    pub inputs: Vec<W>,
    pub outputs: Vec<Z>,
    /// `transitions[q][w]` lists `(next, output index)`.
    pub transitions: Vec<Vec<Vec<(usize, usize)>>>,
}

impl<Q, W: PartialEq, Z> Nfsm<Q, W, Z> {
    pub fn reachable_states(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([self.initial]);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            for succ in &self.transitions[q] {
                for &(n, _) in succ {
                    if seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }

    /// All output words the machine can produce on `input`.
    pub fn runs(&self, input: &[W]) -> Result<Vec<Vec<&Z>>, MachineError> {
        let mut frontier: Vec<(usize, Vec<&Z>)> = vec![(self.initial, Vec::new())];
        for w in input {
            let wi = self
                .inputs
                .iter()
                .position(|x| x == w)
                .ok_or(MachineError::Alphabet)?;
            let mut next = Vec::new();
            for (q, word) in &frontier {
                for &(n, z) in &self.transitions[*q][wi] {
                    let mut word = word.clone();
                    word.push(&self.outputs[z]);
                    next.push((n, word));
                }
            }
            frontier = next;
        }
        Ok(frontier.into_iter().map(|(_, w)| w).collect())
    }
}

/// Feedback interconnection of a plant-side machine `m` with inputs `(u, w)`
/// and outputs `(y, z)` and a controller `k` reading `y` and emitting `u`.
///
/// The loop is well posed when `m`'s `y` does not depend on the current `u`
/// or `k`'s `u` does not depend on the current `y`. The product keeps only
/// reachable state pairs and exposes the residual channels `w` in, `z` out.
pub fn feedback_interconnect<QM, QK, U, W, Y, Z>(
    m: &Dfm<QM, (U, W), (Y, Z)>,
    k: &Dfm<QK, Y, U>,
) -> Result<Nfsm<(usize, usize), W, Z>, MachineError>
where
    U: PartialEq + Clone,
    W: PartialEq + Clone,
    Y: PartialEq + Clone,
    Z: PartialEq + Clone,
{
    let u_of_input = |i: usize| &m.inputs[i].0;
    let w_of_input = |i: usize| &m.inputs[i].1;
    // Residual alphabet, in first-seen order.
    let mut ws: Vec<W> = Vec::new();
    for i in 0..m.inputs.len() {
        if !ws.contains(w_of_input(i)) {
            ws.push(w_of_input(i).clone());
        }
    }
    let mut zs: Vec<Z> = Vec::new();
    for (_, z) in &m.outputs {
        if !zs.contains(z) {
            zs.push(z.clone());
        }
    }
    let input_for = |u: &U, w: &W| {
        (0..m.inputs.len())
            .find(|&i| u_of_input(i) == u && w_of_input(i) == w)
            .ok_or(MachineError::Malformed)
    };
    let w_group = |i: usize| ws.iter().position(|x| x == w_of_input(i)).unwrap_or(0);
    let plant_output_first = !m.outputs_differ_on_y(w_group);
    let controller_output_first = !k.output_depends_on_input(|_| 0);
    if !plant_output_first && !controller_output_first {
        return Err(MachineError::IllPosed);
    }

    let mut index = alloc::collections::BTreeMap::new();
    let mut states = vec![(m.initial, k.initial)];
    index.insert((m.initial, k.initial), 0usize);
    let mut transitions: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
    let mut cursor = 0;
    while cursor < states.len() {
        let (qm, qk) = states[cursor];
        let mut row = Vec::with_capacity(ws.len());
        for w in &ws {
            let (u, y) = if plant_output_first {
                // Any u gives the same y at this (state, w).
                let probe = input_for(&k_any_output(m, w)?, w)?;
                let y = m.outputs[m.step(qm, probe).1].0.clone();
                let yi = k.input_index(&y)?;
                (k.outputs[k.step(qk, yi).1].clone(), y)
            } else {
                let u = k.outputs[k.step(qk, 0).1].clone();
                let y = m.outputs[m.step(qm, input_for(&u, w)?).1].0.clone();
                (u, y)
            };
            let (nm, out) = m.step(qm, input_for(&u, w)?);
            let (ref y_actual, ref z) = m.outputs[out];
            debug_assert!(*y_actual == y);
            let nk = k.step(qk, k.input_index(&y)?).0;
            let pair = (nm, nk);
            let id = *index.entry(pair).or_insert_with(|| {
                states.push(pair);
                states.len() - 1
            });
            let zi = zs.iter().position(|x| x == z).expect("collected above");
            row.push(vec![(id, zi)]);
        }
        transitions.push(row);
        cursor += 1;
    }
    Ok(Nfsm {
        states,
        initial: 0,
        inputs: ws,
        outputs: zs,
        transitions,
    })
}

/// Some `u` that pairs with `w` in `m`'s input alphabet.
fn k_any_output<QM, U: Clone + PartialEq, W: PartialEq, Y, Z>(
    m: &Dfm<QM, (U, W), (Y, Z)>,
    w: &W,
) -> Result<U, MachineError> {
    m.inputs
        .iter()
        .find(|(_, x)| x == w)
        .map(|(u, _)| u.clone())
        .ok_or(MachineError::Malformed)
}

impl<Q, U: PartialEq, W: PartialEq, Y: PartialEq, Z> Dfm<Q, (U, W), (Y, Z)> {
    /// Whether the `y` component at some state changes with `u` for fixed `w`.
    fn outputs_differ_on_y(&self, w_group: impl Fn(usize) -> usize) -> bool {
        let n = self.inputs.len();
        (0..self.states.len()).any(|q| {
            (0..n).any(|a| {
                (0..n).any(|b| {
                    w_group(a) == w_group(b)
                        && self.outputs[self.step(q, a).1].0 != self.outputs[self.step(q, b).1].0
                })
            })
        })
    }
}
