use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use sha2::{Digest, Sha256};

use super::{build_game, ControllerDfm, SynthesisError, ValueFunction};
use crate::abstraction::{delta_gain_bound_weighted, CellRange, DeltaSpec, ObserverMachine, Objective};
use crate::plant::{Plant1D, Sensor};
use crate::rational::{int, Fraction, Gain, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateFailure {
    /// The observer's error gain exceeds the bound the controller was
    /// certified against.
    BoundViolated { computed: Gain, claimed: Rational },
    /// `V(S) >= c + V(S')` fails under the controller's choice.
    NotSupersolution { state: CellRange, y: Sensor },
    NegativeValue { state: CellRange },
    /// The controller moves somewhere the observer does not.
    ControllerMismatch { state: CellRange, y: Sensor },
    DigestMismatch(&'static str),
    FieldMismatch(&'static str),
}

impl core::fmt::Display for CertificateFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::BoundViolated { computed, claimed } => {
                write!(f, "error gain {computed} exceeds the claimed bound {claimed}")
            }
            Self::NotSupersolution { state, y } => {
                write!(f, "value inequality fails at state {state} on reading {y}")
            }
            Self::NegativeValue { state } => write!(f, "negative value at state {state}"),
            Self::ControllerMismatch { state, y } => {
                write!(f, "controller and observer disagree at state {state} on reading {y}")
            }
            Self::DigestMismatch(what) => write!(f, "{what} digest does not match"),
            Self::FieldMismatch(what) => write!(f, "recomputed {what} differs from the certificate"),
        }
    }
}

/// Re-checkable record that a controller keeps the game cost bounded, and
/// hence the performance objective bounded on the plant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub level: u32,
    pub gamma_bound: Rational,
    pub tau: Rational,
    /// Error gain recomputed from the observer.
    pub delta_bound: Gain,
    /// Largest value over the controller's states.
    pub value_bound: Rational,
    pub initial_value: Rational,
    pub controller_states: usize,
    /// Value per controller state, in controller order.
    pub values: Vec<(CellRange, Rational)>,
    pub statements: Vec<String>,
    pub plant_digest: String,
    pub observer_digest: String,
    pub controller_digest: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut out = String::with_capacity(64);
    for b in Sha256::digest(data).iter() {
        write!(out, "{b:02x}").expect("writing to a string");
    }
    out
}

pub fn plant_digest(plant: &Plant1D) -> String {
    sha256_hex(format!("{plant}").as_bytes())
}

pub fn observer_digest(obs: &ObserverMachine) -> String {
    sha256_hex(format!("{}", obs.edge_list()).as_bytes())
}

pub fn controller_digest(k: &ControllerDfm) -> String {
    sha256_hex(format!("{}", k.table()).as_bytes())
}

fn check_bound(obs: &ObserverMachine, delta: &DeltaSpec, gamma_bound: Rational) -> Result<Gain, SynthesisError> {
    let (computed, _) = delta_gain_bound_weighted(obs, delta)?;
    if computed > Gain::Finite(gamma_bound) {
        return Err(SynthesisError::InvalidCertificate(CertificateFailure::BoundViolated {
            computed,
            claimed: gamma_bound,
        }));
    }
    Ok(computed)
}

struct Checked {
    delta_bound: Gain,
    value_bound: Rational,
}

#[allow(clippy::too_many_arguments)]
fn check(
    obs: &ObserverMachine,
    k: &ControllerDfm,
    values: &[Rational],
    objective: &Objective,
    delta: &DeltaSpec,
    gamma_bound: Rational,
    tau: Rational,
) -> Result<Checked, SynthesisError> {
    let invalid = |f| Err(SynthesisError::InvalidCertificate(f));
    let delta_bound = check_bound(obs, delta, gamma_bound)?;
    let game = build_game(obs, objective, delta, gamma_bound, tau)?;
    for q in 0..k.state_count() {
        let s = k.observer_state(q);
        let state = k.range(q);
        if values[q] < int(0) {
            return invalid(CertificateFailure::NegativeValue { state });
        }
        for y in game.feasible_outputs(s) {
            let Some((next, u)) = k.step(q, y) else {
                return invalid(CertificateFailure::ControllerMismatch { state, y });
            };
            let mv = game.get(s, y, u).expect("feasible reading");
            if mv.next != k.observer_state(next) {
                return invalid(CertificateFailure::ControllerMismatch { state, y });
            }
            if values[q] < mv.cost + values[next] {
                return invalid(CertificateFailure::NotSupersolution { state, y });
            }
        }
    }
    Ok(Checked {
        delta_bound,
        value_bound: values.iter().copied().max().unwrap_or(int(0)),
    })
}

fn statements(gamma: Rational, tau: Rational, b: Rational) -> Vec<String> {
    let (g, t, b) = (Fraction(gamma), Fraction(tau), Fraction(b));
    alloc::vec![
        format!(
            "game: V(S) >= c(S,y,K(S,y)) + V(S') and V >= 0 on every controller state, so every closed-loop cost sum is at most B = {b}"
        ),
        format!(
            "abstraction: sum_t rho(r^) + {t}*mu_d(w) - mu(v^) - {t}*{g}*rho_d(z) >= -{b} for the observer in feedback with K"
        ),
        format!(
            "plant: every error system with gain at most {g} keeps inf_T sum_t rho(r) - mu(v) bounded below for the plant in feedback with K"
        ),
    ]
}

/// Checks the controller against the game at `gamma_bound` and records the
/// result. `values` is indexed by observer state.
#[allow(clippy::too_many_arguments)]
pub fn certify(
    plant: &Plant1D,
    obs: &ObserverMachine,
    k: &ControllerDfm,
    values: &ValueFunction,
    objective: &Objective,
    delta: &DeltaSpec,
    gamma_bound: Rational,
    tau: Rational,
) -> Result<Certificate, SynthesisError> {
    check_bound(obs, delta, gamma_bound)?;
    if values.values.len() != obs.state_count() {
        return Err(SynthesisError::Config("value function does not match the observer"));
    }
    let per_state: Vec<Rational> = (0..k.state_count())
        .map(|q| values.value(k.observer_state(q)))
        .collect();
    let checked = check(obs, k, &per_state, objective, delta, gamma_bound, tau)?;
    Ok(Certificate {
        level: obs.level(),
        gamma_bound,
        tau,
        delta_bound: checked.delta_bound,
        value_bound: checked.value_bound,
        initial_value: per_state[0],
        controller_states: k.state_count(),
        values: (0..k.state_count()).map(|q| (k.range(q), per_state[q])).collect(),
        statements: statements(gamma_bound, tau, checked.value_bound),
        plant_digest: plant_digest(plant),
        observer_digest: observer_digest(obs),
        controller_digest: controller_digest(k),
    })
}

/// Re-derives every field of `cert` from the artifacts it names.
pub fn verify_certificate(
    cert: &Certificate,
    plant: &Plant1D,
    obs: &ObserverMachine,
    k: &ControllerDfm,
    objective: &Objective,
    delta: &DeltaSpec,
) -> Result<(), SynthesisError> {
    let fail = |f| Err(SynthesisError::InvalidCertificate(f));
    if cert.plant_digest != plant_digest(plant) {
        return fail(CertificateFailure::DigestMismatch("plant"));
    }
    if cert.observer_digest != observer_digest(obs) {
        return fail(CertificateFailure::DigestMismatch("observer"));
    }
    if cert.controller_digest != controller_digest(k) {
        return fail(CertificateFailure::DigestMismatch("controller"));
    }
    if cert.level != obs.level() {
        return fail(CertificateFailure::FieldMismatch("level"));
    }
    if cert.controller_states != k.state_count()
        || cert.values.len() != k.state_count()
        || cert.values.iter().enumerate().any(|(q, (r, _))| *r != k.range(q))
    {
        return fail(CertificateFailure::FieldMismatch("controller states"));
    }
    let values: Vec<Rational> = cert.values.iter().map(|(_, v)| *v).collect();
    let checked = check(obs, k, &values, objective, delta, cert.gamma_bound, cert.tau)?;
    if checked.delta_bound != cert.delta_bound {
        return fail(CertificateFailure::FieldMismatch("error gain"));
    }
    if checked.value_bound != cert.value_bound || values[0] != cert.initial_value {
        return fail(CertificateFailure::FieldMismatch("value bound"));
    }
    if cert.statements != statements(cert.gamma_bound, cert.tau, cert.value_bound) {
        return fail(CertificateFailure::FieldMismatch("statements"));
    }
    Ok(())
}
