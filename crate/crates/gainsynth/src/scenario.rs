//! Scenario files: a JSON document describing the plant, objective,
//! abstraction schedule, error channel, synthesis options and simulation
//! sweep. Rationals are strings (`"45/2"`, `"22.5"` or `"15"`).

use std::fmt;
use std::path::Path;

use gainsynth_core::abstraction::{DeltaSpec, Objective};
use gainsynth_core::plant::{make_tank, Band, Control, Plant1D, TankParams};
use gainsynth_core::rational::{parse_rational, Fraction};
use gainsynth_core::synthesis::{PipelineConfig, Sweep};
use gainsynth_core::{rat, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

/// Exact rational that serializes as `p/q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rat(pub Rational);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&Fraction(self.0))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text)
            .map(Rat)
            .ok_or_else(|| serde::de::Error::custom(format!("not a rational: {text:?}")))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Fraction(self.0).fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub plant: PlantSection,
    pub objective: ObjectiveSection,
    pub abstraction: AbstractionSection,
    pub delta: DeltaSection,
    pub synthesis: SynthesisSection,
    pub sim: SimSection,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub kind: String,
    pub area_cm2: Rat,
    pub height_cm: Rat,
    pub pump_lpm: Rat,
    pub sample_s: Rat,
    pub band: [Rat; 2],
    pub threshold: Rat,
    /// Which side reads at exactly the threshold; only `"full"`.
    pub threshold_tie: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    pub rho: String,
    pub mu: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractionSection {
    pub base_cells: usize,
    pub schedule: String,
    pub max_level: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSection {
    pub rho: String,
    pub mu: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    pub tau: Rat,
    /// Extra values of tau tried in order when the first diverges.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retry_tau: Vec<Rat>,
    pub tie_order: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub x0: Vec<Rat>,
    pub steps: usize,
}

/// Everything the core needs, checked and built from a scenario.
#[derive(Clone, Debug)]
pub struct Setup {
    pub plant: Plant1D,
    pub objective: Objective,
    pub delta: DeltaSpec,
    pub config: PipelineConfig,
}

fn expect(field: &str, got: &str, allowed: &str) -> Result<(), Error> {
    if got == allowed {
        Ok(())
    } else {
        Err(Error::Config(format!("{field}: unsupported value {got:?}, expected {allowed:?}")))
    }
}

impl Scenario {
    /// The reference tank with the default synthesis options and a sweep
    /// of 13 initial levels.
    pub fn tank() -> Self {
        let p = TankParams::reference();
        Scenario {
            plant: PlantSection {
                kind: "tank".into(),
                area_cm2: Rat(p.area),
                height_cm: Rat(p.height),
                pump_lpm: Rat(p.pump_rate),
                sample_s: Rat(p.sample_time),
                band: [Rat(p.band.lo), Rat(p.band.hi)],
                threshold: Rat(p.threshold),
                threshold_tie: "full".into(),
            },
            objective: ObjectiveSection {
                rho: "zero".into(),
                mu: "indicator_v".into(),
            },
            abstraction: AbstractionSection {
                base_cells: 6,
                schedule: "double".into(),
                max_level: 4,
            },
            delta: DeltaSection {
                rho: "one".into(),
                mu: "identity_w".into(),
            },
            synthesis: SynthesisSection {
                tau: Rat(rat(1, 1)),
                retry_tau: Vec::new(),
                tie_order: vec!["Pump".into(), "Drain".into()],
            },
            sim: SimSection {
                x0: (0..=12).map(|k| Rat(rat(5 * k, 2))).collect(),
                steps: 1000,
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn setup(&self) -> Result<Setup, Error> {
        let p = &self.plant;
        expect("plant.kind", &p.kind, "tank")?;
        expect("plant.threshold_tie", &p.threshold_tie, "full")?;
        expect("objective.rho", &self.objective.rho, "zero")?;
        expect("objective.mu", &self.objective.mu, "indicator_v")?;
        expect("abstraction.schedule", &self.abstraction.schedule, "double")?;
        expect("delta.rho", &self.delta.rho, "one")?;
        expect("delta.mu", &self.delta.mu, "identity_w")?;
        if p.band[0] > p.band[1] {
            return Err(Error::Config("plant.band: lower end above upper end".into()));
        }
        let plant = make_tank(&TankParams {
            area: p.area_cm2.0,
            height: p.height_cm.0,
            pump_rate: p.pump_lpm.0,
            sample_time: p.sample_s.0,
            band: Band {
                lo: p.band[0].0,
                hi: p.band[1].0,
            },
            threshold: p.threshold.0,
        })
        .map_err(|e| Error::Config(format!("plant: {e}")))?;
        let tie_order = self
            .synthesis
            .tie_order
            .iter()
            .map(|name| {
                plant
                    .control_by_name(name)
                    .ok_or_else(|| Error::Config(format!("synthesis.tie_order: unknown control {name:?}")))
            })
            .collect::<Result<Vec<Control>, _>>()?;
        let taus = std::iter::once(self.synthesis.tau)
            .chain(self.synthesis.retry_tau.iter().copied())
            .map(|t| t.0)
            .collect();
        let delta = DeltaSpec::mismatch_density(plant.control_count());
        Ok(Setup {
            plant,
            objective: Objective::band_indicator(),
            delta,
            config: PipelineConfig {
                base: self.abstraction.base_cells,
                max_level: self.abstraction.max_level,
                taus,
                tie_order,
                sweep: Sweep::Jacobi,
            },
        })
    }
}
