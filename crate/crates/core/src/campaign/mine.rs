//! Mining critical (scene, fault) pairs and replaying them.

use super::config::CampaignConfig;
use super::{num, write_csv, FCRIT_HEADER, MINING_HEADER, TIMING_HEADER};
use crate::bayes::mining::{Candidate, Miner};
use crate::bayes::{TemporalNet, Topology};
use crate::exec::Execution;
use crate::fault::{catalog, fixed_plan};
use crate::scenario::{run, Scenario, Trace};
use crate::{Error, Result};
use std::fs::File;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct MinedPair {
    pub candidate: Candidate,
    /// Hazard in the replay; `None` when not replayed.
    pub verdict: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MineReport {
    pub scenario: String,
    pub scenes: usize,
    pub eligible_scenes: usize,
    pub catalog: usize,
    pub inferences: usize,
    pub unconverged: usize,
    pub pairs: Vec<MinedPair>,
    pub critical_scenes: Vec<usize>,
    pub mining_secs: f64,
    pub per_replay_secs: f64,
    pub replays: usize,
}

impl MineReport {
    pub fn critical_scene_pct(&self) -> f64 {
        100.0 * self.critical_scenes.len() as f64 / self.scenes as f64
    }

    /// Mined pairs as a share of every (scene, catalog fault) pair.
    pub fn critical_fault_pct(&self) -> f64 {
        100.0 * self.pairs.len() as f64 / (self.catalog * self.scenes) as f64
    }

    pub fn manifested(&self) -> usize {
        self.pairs.iter().filter(|p| p.verdict == Some(true)).count()
    }

    pub fn replayed(&self) -> usize {
        self.pairs.iter().filter(|p| p.verdict.is_some()).count()
    }

    pub fn manifestation_rate(&self) -> f64 {
        let r = self.replayed();
        if r == 0 {
            0.0
        } else {
            self.manifested() as f64 / r as f64
        }
    }

    /// Exhaustive replay of every (scene, fault) pair against mining plus replay of the mined set.
    pub fn speedup(&self) -> f64 {
        let exhaustive = (self.scenes * self.catalog) as f64 * self.per_replay_secs;
        exhaustive / (self.mining_secs + self.pairs.len() as f64 * self.per_replay_secs)
    }

    pub fn unconverged_fraction(&self) -> f64 {
        if self.inferences == 0 {
            0.0
        } else {
            self.unconverged as f64 / self.inferences as f64
        }
    }
}

/// Mine `scenario` against the golden run of `cfg.seed`, then replay each mined pair as a one-scene fault.
pub fn mine_scenario(model: &TemporalNet, scenario: &Arc<Scenario>, cfg: &CampaignConfig, exec: Execution) -> Result<MineReport> {
    let t0 = Instant::now();
    let golden = run(scenario, &cfg.sim, None, cfg.seed)?;
    let golden_secs = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let miner = Miner::new(model, scenario.clone(), &golden, &cfg.sim, cfg.mining.gibbs)?;
    let out = miner.mine(exec)?;
    let mining_secs = t0.elapsed().as_secs_f64();
    let critical_scenes = out.critical_scenes();
    let (pairs, replay_secs) = if cfg.mining.replay {
        let t0 = Instant::now();
        let verdicts = exec.try_map(out.critical.len(), |i| {
            let c = &out.critical[i];
            let t: Trace = run(scenario, &cfg.sim, Some(fixed_plan(c.fault.clone(), c.scene, 1, cfg.seed)), cfg.seed)?;
            Ok::<_, Error>(t.metrics()?.hazard)
        })?;
        let secs = t0.elapsed().as_secs_f64();
        let pairs: Vec<MinedPair> = out.critical.into_iter().zip(verdicts).map(|(candidate, v)| MinedPair { candidate, verdict: Some(v) }).collect();
        (pairs, secs)
    } else {
        (out.critical.into_iter().map(|candidate| MinedPair { candidate, verdict: None }).collect(), 0.0)
    };
    let replays = if cfg.mining.replay { pairs.len() } else { 0 };
    let per_replay_secs = if replays > 0 { replay_secs / replays as f64 } else { golden_secs };
    Ok(MineReport {
        scenario: scenario.id.clone(),
        scenes: golden.frames.len(),
        eligible_scenes: out.eligible_scenes,
        catalog: catalog().len(),
        inferences: out.inferences,
        unconverged: out.unconverged,
        pairs,
        critical_scenes,
        mining_secs,
        per_replay_secs,
        replays,
    })
}

pub fn load_model(cfg: &CampaignConfig) -> Result<TemporalNet> {
    let path = cfg.model.clone().ok_or_else(|| Error::Config("`model`: mining needs a trained model file".into()))?;
    let f = File::open(&path).map_err(|e| Error::Config(format!("`model`: {}: {e}", path.display())))?;
    TemporalNet::read(f, Topology::ads())
}

pub fn fcrit_rows(r: &MineReport) -> Vec<Vec<String>> {
    r.pairs
        .iter()
        .map(|p| {
            let c = &p.candidate;
            vec![
                r.scenario.clone(),
                c.scene.to_string(),
                c.fault.name(),
                num(c.golden_delta),
                num(c.predicted_delta),
                match p.verdict {
                    Some(true) => "hazard".into(),
                    Some(false) => "safe".into(),
                    None => "not_replayed".into(),
                },
            ]
        })
        .collect()
}

pub fn mining_row(r: &MineReport) -> Vec<String> {
    vec![
        r.scenario.clone(),
        r.scenes.to_string(),
        r.eligible_scenes.to_string(),
        r.catalog.to_string(),
        r.inferences.to_string(),
        r.unconverged.to_string(),
        r.pairs.len().to_string(),
        r.critical_scenes.len().to_string(),
        num(r.critical_scene_pct()),
        num(r.critical_fault_pct()),
        r.replayed().to_string(),
        r.manifested().to_string(),
        num(r.manifestation_rate()),
    ]
}

/// Mine every configured scenario. Wall-clock figures go to `timing.csv` so the other files are reproducible.
/// Fails with [`Error::Unconverged`] after writing the outputs if too many inferences failed the R-hat check.
pub fn cmd_mine(cfg: &CampaignConfig, exec: Execution) -> Result<Vec<MineReport>> {
    cfg.validate()?;
    let model = load_model(cfg)?;
    let mut reports = Vec::new();
    for sc in cfg.scenarios()? {
        log::info!("mining {}", sc.id);
        reports.push(mine_scenario(&model, &sc, cfg, exec)?);
    }
    let out = &cfg.out;
    write_csv(&out.join("fcrit.csv"), &FCRIT_HEADER, reports.iter().flat_map(fcrit_rows))?;
    write_csv(&out.join("mining.csv"), &MINING_HEADER, reports.iter().map(mining_row))?;
    write_csv(
        &out.join("timing.csv"),
        &TIMING_HEADER,
        reports.iter().map(|r| vec![r.scenario.clone(), num(r.mining_secs), r.replays.to_string(), num(r.per_replay_secs), num(r.speedup())]),
    )?;
    let (bad, total) = reports.iter().fold((0, 0), |(b, t), r| (b + r.unconverged, t + r.inferences));
    if total > 0 && bad as f64 / total as f64 > cfg.mining.max_unconverged {
        return Err(Error::Unconverged { unconverged: bad, inferences: total, limit: cfg.mining.max_unconverged });
    }
    Ok(reports)
}
