//! Campaign configuration file.

use super::train::TrainingOptions;
use crate::bayes::GibbsConfig;
use crate::fault::{FaultModel, FaultType};
use crate::scenario::{library, Scenario, SimConfig};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningOptions {
    pub gibbs: GibbsConfig,
    /// Largest tolerated fraction of inferences whose chains fail the R-hat check.
    pub max_unconverged: f64,
    /// Replay every mined pair in the simulator.
    pub replay: bool,
}

impl Default for MiningOptions {
    fn default() -> Self {
        Self {
            gibbs: GibbsConfig { burn_in: 100, samples: 1000, chains: 4, seed: 0, rhat_threshold: 1.05 },
            max_unconverged: 0.05,
            replay: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaveTraces {
    #[default]
    All,
    Hazards,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub label: String,
    /// Library id (`A1`..`A6`), `all`, or a path to a scenario file.
    pub scenario: String,
    pub fault_model: FaultModel,
    /// Fault types for the fixed models, as `variable:rule`. Experiments cycle through them.
    pub targets: Vec<String>,
    pub experiments: usize,
    /// Fault window length for the multi-scene fixed model; drawn at random when unset.
    pub duration: Option<usize>,
    /// First faulty scene for fixed models; drawn at random when unset.
    pub start: Option<usize>,
    pub bits: u8,
    pub golden_runs: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub save_traces: SaveTraces,
    pub training_scenarios: Vec<String>,
    pub training: TrainingOptions,
    pub mining: MiningOptions,
    pub sim: SimConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            label: String::new(),
            scenario: "A1".into(),
            fault_model: FaultModel::OneRandom,
            targets: Vec::new(),
            experiments: 500,
            duration: None,
            start: None,
            bits: 1,
            golden_runs: 50,
            seed: 0,
            workers: 0,
            out: PathBuf::from("out"),
            model: None,
            save_traces: SaveTraces::All,
            training_scenarios: vec!["A4".into(), "A5".into(), "A6".into()],
            training: TrainingOptions::default(),
            mining: MiningOptions::default(),
            sim: SimConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Campaign label, defaulting to the fault model name.
    pub fn label(&self) -> String {
        if self.label.is_empty() {
            self.fault_model.label().to_string()
        } else {
            self.label.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::Config(format!("`{name}`: {msg}")));
        if self.experiments == 0 {
            return field("experiments", "must be at least 1");
        }
        if self.golden_runs == 0 {
            return field("golden_runs", "must be at least 1");
        }
        if !(self.bits == 1 || self.bits == 2) {
            return field("bits", "must be 1 or 2");
        }
        if matches!(self.fault_model, FaultModel::OneFixed | FaultModel::MFixed) && self.targets.is_empty() {
            return field("targets", "fixed fault models need at least one fault type");
        }
        if self.duration == Some(0) {
            return field("duration", "must be at least 1");
        }
        self.faults()?;
        self.mining.gibbs.validate()?;
        if !(0.0..=1.0).contains(&self.mining.max_unconverged) {
            return field("mining.max_unconverged", "must lie in [0, 1]");
        }
        if self.training.reps == 0 {
            return field("training.reps", "must be at least 1");
        }
        self.sim.kinematics.validate().map_err(|e| Error::Config(format!("`sim.kinematics`: {e}")))?;
        self.scenarios()?;
        Ok(())
    }

    pub fn faults(&self) -> Result<Vec<FaultType>> {
        self.targets
            .iter()
            .map(|t| FaultType::parse(t).map_err(|e| Error::Config(format!("`targets`: {e}"))))
            .collect()
    }

    pub fn scenarios(&self) -> Result<Vec<Arc<Scenario>>> {
        resolve(&self.scenario)
    }

    pub fn training_scenarios(&self) -> Result<Vec<Arc<Scenario>>> {
        let mut out = Vec::new();
        for s in &self.training_scenarios {
            out.extend(resolve(s)?);
        }
        if out.is_empty() {
            return Err(Error::Config("`training_scenarios`: empty".into()));
        }
        Ok(out)
    }
}

/// A library id, `all`, or a scenario file.
pub fn resolve(which: &str) -> Result<Vec<Arc<Scenario>>> {
    if which.eq_ignore_ascii_case("all") {
        return Ok(library::scenario_library().into_iter().map(Arc::new).collect());
    }
    if let Some(s) = library::by_id(which) {
        return Ok(vec![Arc::new(s)]);
    }
    let path = Path::new(which);
    if path.exists() {
        let s = Scenario::load(path)?;
        s.validate()?;
        return Ok(vec![Arc::new(s)]);
    }
    Err(Error::Config(format!("`scenario`: `{which}` is neither a library id nor a scenario file")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let c = CampaignConfig { targets: vec!["control.throttle:set_max".into()], fault_model: FaultModel::MFixed, ..Default::default() };
        assert_eq!(CampaignConfig::from_toml(&c.to_toml()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn field_errors_name_the_field() {
        let e = CampaignConfig::from_toml("experimentz = 3").unwrap_err().to_string();
        assert!(e.contains("experimentz"), "{e}");
        let c = CampaignConfig { fault_model: FaultModel::OneFixed, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("`targets`"));
        let c = CampaignConfig { scenario: "B7".into(), ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("`scenario`"));
    }
}
