//! Experiment configuration: a TOML document with one table per module.
//!
//! Unknown keys are rejected everywhere. A handful of parameters have no
//! published value and must be written out explicitly; see [`MANDATORY`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{LqrWeights, PidGains};
use crate::error::{Error, Result};
use crate::hsmc::HsmcGains;
use crate::neurocomp::NnParams;
use crate::plant::PlantParams;
use crate::scenarios::{DisturbanceSet, ReferenceSet, PRESET_NAMES};
use crate::simkit::{SimConfig, TRACE_COLUMNS};

/// The shipped default profile.
pub const DEFAULT_PROFILE: &str = include_str!("../configs/default_paper.cfg");

/// `(table, key)` pairs with no published value. Missing any of them is an error
/// instead of a silent fallback.
pub const MANDATORY: [(&str, &str); 9] = [
    ("plant", "EI"),
    ("plant", "L"),
    ("gains", "K0"),
    ("gains", "phi0"),
    ("gains", "phi1"),
    ("gains", "phi2"),
    ("gains", "delta"),
    ("gains", "Kr1"),
    ("gains", "Kr2"),
];

pub const CONTROLLER_NAMES: [&str; 4] = ["hsmc", "hsmc-sign", "pid", "lqr"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baselines {
    pub pid: PidGains,
    pub lqr: LqrWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub scenarios: Vec<String>,
    pub controllers: Vec<String>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantParams,
    pub gains: HsmcGains,
    pub nn: NnParams,
    pub baselines: Baselines,
    pub sim: SimConfig,
    pub disturbances: DisturbanceSet,
    pub references: ReferenceSet,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (section, key) in MANDATORY {
            let present = table
                .get(section)
                .and_then(|v| v.as_table())
                .is_some_and(|t| t.contains_key(key));
            if !present {
                return Err(Error::Config(format!(
                    "missing mandatory field `{section}.{key}`: it has no published value, \
                     so there is no default and it must be set explicitly"
                )));
            }
        }
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn default_profile() -> Self {
        Self::parse(DEFAULT_PROFILE).expect("shipped profile parses")
    }

    /// Canonical TOML text; keys come out in declaration order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.gains.validate()?;
        self.nn.validate()?;
        self.baselines.pid.validate()?;
        self.sim.validate()?;
        for d in [
            &self.disturbances.low,
            &self.disturbances.high,
            &self.disturbances.random,
            &self.disturbances.random_mild,
        ] {
            d.validate()?;
        }
        self.references.step.validate()?;
        self.references.switching.validate()?;
        for s in &self.experiment.scenarios {
            if !PRESET_NAMES.contains(&s.as_str()) {
                return Err(Error::Config(format!(
                    "unknown scenario `{s}` (expected one of {})",
                    PRESET_NAMES.join(", ")
                )));
            }
        }
        for c in &self.experiment.controllers {
            if !CONTROLLER_NAMES.contains(&c.as_str()) {
                return Err(Error::Config(format!(
                    "unknown controller `{c}` (expected one of {})",
                    CONTROLLER_NAMES.join(", ")
                )));
            }
        }
        if self.experiment.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds must not be empty".into()));
        }
        if let Some(fields) = &self.sim.record_fields {
            for f in fields {
                if !TRACE_COLUMNS.contains(&f.as_str()) {
                    return Err(Error::Config(format!("unknown trace column `{f}`")));
                }
            }
        }
        Ok(())
    }
}
