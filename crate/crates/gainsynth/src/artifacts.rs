//! Text artifacts: controller tables, certificate documents and trajectory
//! CSV.

use std::io::Write;

use gainsynth_core::abstraction::{build_observer, build_partition, CellRange, ObserverMachine};
use gainsynth_core::machine::Dfm;
use gainsynth_core::plant::{Plant1D, Sensor};
use gainsynth_core::rational::{parse_rational, Decimal};
use gainsynth_core::simulate::ClosedLoopTrajectory;
use gainsynth_core::synthesis::{sha256_hex, verify_certificate, Certificate, ControllerDfm, SynthesisError};
use gainsynth_core::Gain;
use serde::{Deserialize, Serialize};

use crate::scenario::{Rat, Scenario, Setup};
use crate::Error;

/// Controller table with a header line naming its observer level.
pub fn controller_text(k: &ControllerDfm, level: u32) -> String {
    format!("# controller level={level} states={}\n{}", k.state_count(), k.table())
}

/// Level named in a controller file header, if any.
pub fn controller_level(text: &str) -> Option<u32> {
    text.lines()
        .find_map(|l| l.strip_prefix("# controller level="))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|n| n.parse().ok())
}

/// Parses the table format of [`ControllerDfm::table`] against `obs`.
/// Lines starting with `#` are ignored.
pub fn parse_controller(text: &str, obs: &ObserverMachine) -> Result<ControllerDfm, Error> {
    let bad = |line: &str| Error::Config(format!("controller table: cannot parse {line:?}"));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let first = lines.next().ok_or_else(|| Error::Config("controller table is empty".into()))?;
    let initial = first
        .strip_prefix("initial ")
        .and_then(CellRange::parse)
        .ok_or_else(|| bad(first))?;
    let mut states = vec![initial];
    let mut rows: Vec<(CellRange, Sensor, CellRange, String)> = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [q, y, next, u] = parts[..] else {
            return Err(bad(line));
        };
        let q = CellRange::parse(q).ok_or_else(|| bad(line))?;
        let y = Sensor::parse(y).ok_or_else(|| bad(line))?;
        let next = CellRange::parse(next).ok_or_else(|| bad(line))?;
        if !states.contains(&q) {
            states.push(q);
        }
        rows.push((q, y, next, u.to_string()));
    }
    let controls: Vec<String> = obs.controls().map(|u| obs.control_name(u).to_string()).collect();
    let mut table = vec![None; states.len() * 2];
    for (q, y, next, u) in rows {
        let qi = states.iter().position(|s| *s == q).expect("collected above");
        let ni = states
            .iter()
            .position(|s| *s == next)
            .ok_or_else(|| Error::Config(format!("controller table: {next} has no rows")))?;
        let ui = controls
            .iter()
            .position(|c| *c == u)
            .ok_or_else(|| Error::Config(format!("controller table: unknown control {u:?}")))?;
        if table[qi * 2 + y.index()].replace((ni, ui)).is_some() {
            return Err(Error::Config(format!("controller table: duplicate row for {q} {y}")));
        }
    }
    if table.iter().any(Option::is_none) {
        return Err(Error::Config("controller table: missing rows".into()));
    }
    let dfm = Dfm::from_fn(states, 0, Sensor::ALL.to_vec(), controls, |q, y| {
        table[q * 2 + y].expect("checked above")
    })
    .map_err(|e| Error::Config(format!("controller table: {e}")))?;
    ControllerDfm::from_dfm(dfm, obs).map_err(|e| Error::Config(format!("controller table: {e}")))
}

pub const CERTIFICATE_FORMAT: &str = "gainsynth-certificate/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateValue {
    pub state: String,
    pub value: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Digests {
    pub plant: String,
    pub observer: String,
    pub controller: String,
}

/// Certificate document: the certificate fields, the scenario they were
/// derived from and the controller table, sealed by a digest of the
/// document with `content_digest` blank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub format: String,
    pub scenario: Scenario,
    pub level: u32,
    pub gamma_bound: Rat,
    pub tau: Rat,
    pub delta_bound: String,
    pub value_bound: Rat,
    pub initial_value: Rat,
    pub controller_states: usize,
    pub values: Vec<StateValue>,
    pub statements: Vec<String>,
    pub digests: Digests,
    pub controller_table: String,
    pub content_digest: String,
}

impl CertificateFile {
    pub fn new(scenario: &Scenario, cert: &Certificate, k: &ControllerDfm) -> Self {
        let mut file = CertificateFile {
            format: CERTIFICATE_FORMAT.into(),
            scenario: scenario.clone(),
            level: cert.level,
            gamma_bound: Rat(cert.gamma_bound),
            tau: Rat(cert.tau),
            delta_bound: cert.delta_bound.to_string(),
            value_bound: Rat(cert.value_bound),
            initial_value: Rat(cert.initial_value),
            controller_states: cert.controller_states,
            values: cert
                .values
                .iter()
                .map(|(r, v)| StateValue {
                    state: r.to_string(),
                    value: Rat(*v),
                })
                .collect(),
            statements: cert.statements.clone(),
            digests: Digests {
                plant: cert.plant_digest.clone(),
                observer: cert.observer_digest.clone(),
                controller: cert.controller_digest.clone(),
            },
            controller_table: k.table().to_string(),
            content_digest: String::new(),
        };
        file.content_digest = file.compute_digest();
        file
    }

    fn compute_digest(&self) -> String {
        let blank = CertificateFile {
            content_digest: String::new(),
            ..self.clone()
        };
        sha256_hex(serde_json::to_string(&blank).expect("certificate serializes").as_bytes())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Certificate(format!("unreadable certificate: {e}")))
    }

    fn certificate(&self) -> Result<Certificate, Error> {
        let invalid = |what: &str| Error::Certificate(format!("malformed {what}"));
        let delta_bound = match self.delta_bound.as_str() {
            "+inf" => Gain::Infinite,
            text => Gain::Finite(parse_rational(text).ok_or_else(|| invalid("delta_bound"))?),
        };
        let values = self
            .values
            .iter()
            .map(|sv| CellRange::parse(&sv.state).map(|r| (r, sv.value.0)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| invalid("values"))?;
        Ok(Certificate {
            level: self.level,
            gamma_bound: self.gamma_bound.0,
            tau: self.tau.0,
            delta_bound,
            value_bound: self.value_bound.0,
            initial_value: self.initial_value.0,
            controller_states: self.controller_states,
            values,
            statements: self.statements.clone(),
            plant_digest: self.digests.plant.clone(),
            observer_digest: self.digests.observer.clone(),
            controller_digest: self.digests.controller.clone(),
        })
    }
}

/// A certificate document that passed re-verification.
#[derive(Debug)]
pub struct Verified {
    pub setup: Setup,
    pub observer: ObserverMachine,
    pub controller: ControllerDfm,
    pub certificate: Certificate,
}

/// Rebuilds the plant, observer and controller from the document and
/// re-derives every certificate field.
pub fn verify_certificate_file(file: &CertificateFile) -> Result<Verified, Error> {
    if file.format != CERTIFICATE_FORMAT {
        return Err(Error::Certificate(format!("unknown format {:?}", file.format)));
    }
    if file.content_digest != file.compute_digest() {
        return Err(Error::Certificate("content digest does not match".into()));
    }
    let setup = file.scenario.setup()?;
    let partition = build_partition(&setup.plant, setup.config.base, file.level)
        .map_err(|e| Error::Certificate(format!("level {}: {e}", file.level)))?;
    let observer = build_observer(&setup.plant, &partition).map_err(|e| Error::Certificate(e.to_string()))?;
    let controller = parse_controller(&file.controller_table, &observer)
        .map_err(|e| Error::Certificate(e.to_string()))?;
    let certificate = file.certificate()?;
    verify_certificate(
        &certificate,
        &setup.plant,
        &observer,
        &controller,
        &setup.objective,
        &setup.delta,
    )
    .map_err(|e| match e {
        SynthesisError::InvalidCertificate(f) => Error::Certificate(f.to_string()),
        other => Error::Certificate(other.to_string()),
    })?;
    Ok(Verified {
        setup,
        observer,
        controller,
        certificate,
    })
}

#[derive(Serialize)]
struct CsvRow {
    t: usize,
    x_cm: String,
    y: String,
    u: String,
    v: u8,
    partial_sum: String,
}

/// Writes `t,x_cm,y,u,v,partial_sum` rows with exact decimals.
pub fn write_trajectory_csv(out: impl Write, plant: &Plant1D, traj: &ClosedLoopTrajectory) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in &traj.rows {
        w.serialize(CsvRow {
            t: r.t,
            x_cm: Decimal(r.x).to_string(),
            y: r.y.to_string(),
            u: plant.control_name(r.u).to_string(),
            v: r.v,
            partial_sum: Decimal(r.partial_sum).to_string(),
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gainsynth_core::simulate::closed_loop_sim;
    use gainsynth_core::synthesis::synthesize_pipeline;
    use gainsynth_core::rat;

    fn synthesized() -> (Scenario, Setup, gainsynth_core::synthesis::Synthesis) {
        let scenario = Scenario::tank();
        let setup = scenario.setup().unwrap();
        let s = synthesize_pipeline(&setup.plant, &setup.objective, &setup.delta, &setup.config)
            .unwrap()
            .success
            .unwrap();
        (scenario, setup, s)
    }

    #[test]
    fn controller_table_round_trips() {
        let (_, _, s) = synthesized();
        let text = controller_text(&s.controller, s.level);
        assert_eq!(controller_level(&text), Some(3));
        let parsed = parse_controller(&text, &s.observer).unwrap();
        assert_eq!(parsed.table().to_string(), s.controller.table().to_string());
        assert_eq!(parsed.state_count(), s.controller.state_count());
        let broken = text.replacen(" Pump\n", " Spill\n", 1);
        assert!(parse_controller(&broken, &s.observer).is_err());
    }

    #[test]
    fn certificate_document_verifies_and_detects_edits() {
        let (scenario, _, s) = synthesized();
        let file = CertificateFile::new(&scenario, &s.certificate, &s.controller);
        let text = file.to_json();
        let back = CertificateFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        verify_certificate_file(&back).unwrap();

        // A consistent edit that refreshes the content digest is still caught.
        let mut edited = back.clone();
        edited.value_bound = Rat(edited.value_bound.0 + rat(1, 1));
        edited.content_digest = edited.compute_digest();
        assert!(matches!(verify_certificate_file(&edited), Err(Error::Certificate(_))));

        let mut stale = back;
        stale.tau = Rat(rat(2, 1));
        assert!(matches!(verify_certificate_file(&stale), Err(Error::Certificate(m)) if m.contains("content digest")));
    }

    #[test]
    fn csv_header_and_rows() {
        let (_, setup, s) = synthesized();
        let traj = closed_loop_sim(&setup.plant, &s.observer, &s.controller, &setup.objective, rat(95, 4), 2).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &setup.plant, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x_cm,y,u,v,partial_sum"));
        assert!(lines.next().unwrap().starts_with("0,23.75,Full,"));
        assert_eq!(text.lines().count(), 4);
    }
}
