//! Training data from golden runs and short single-fault excursions.

use crate::ads::NoInjection;
use crate::bayes::em::{EmOptions, EmReport};
use crate::bayes::{Dataset, TemporalNet, Topology};
use crate::exec::Execution;
use crate::fault::{catalog, fixed_plan, FaultType, Injector};
use crate::scenario::{run, Scenario, SimConfig, Simulation};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const CHECKPOINT_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingOptions {
    /// Faulty excursions per catalog fault and scenario.
    pub reps: usize,
    /// Frames recorded after the injected one.
    pub window: usize,
    pub em: EmOptions,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self { reps: 30, window: 5, em: EmOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub scenario: String,
    pub fault: String,
    pub runs: usize,
}

/// Golden frames plus, for every catalog fault, `reps` one-scene injections at random scenes,
/// each recorded from the frame before the injection to `window` frames after it.
pub fn collect(
    topology: &Topology,
    scenarios: &[Arc<Scenario>],
    sim: &SimConfig,
    opts: &TrainingOptions,
    seed: u64,
    exec: Execution,
) -> Result<(Dataset, Vec<ManifestEntry>)> {
    let faults = catalog();
    let mut data = Dataset::default();
    let mut manifest = Vec::new();
    for sc in scenarios {
        let golden = run(sc, sim, None, seed)?;
        data.add_frames(topology, &golden.frames);
        let mut checkpoints = Vec::new();
        let mut s = Simulation::new(sc.clone(), sim, seed);
        let mut scratch = Vec::new();
        while !s.done() {
            checkpoints.push(s.clone());
            s.run_until(s.scene() + CHECKPOINT_EVERY, &mut NoInjection, &mut scratch)?;
        }
        let last = sc.scenes.saturating_sub(opts.window + 2).max(2);
        let jobs: Vec<(usize, usize)> = (0..faults.len()).flat_map(|f| (0..opts.reps).map(move |r| (f, r))).collect();
        let runs = exec.try_map(jobs.len(), |j| {
            let (f, r) = jobs[j];
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((f as u64) << 32 | r as u64).wrapping_mul(0xA24B_AED4_963E_E407));
            let start = rng.random_range(1..last);
            excursion(&checkpoints, &faults[f], start, opts.window, rng.random())
        })?;
        for frames in &runs {
            data.add_frames(topology, frames);
        }
        manifest.extend(faults.iter().map(|f| ManifestEntry { scenario: sc.id.clone(), fault: f.name(), runs: opts.reps }));
    }
    Ok((data, manifest))
}

fn excursion(checkpoints: &[Simulation], fault: &FaultType, start: usize, window: usize, plan_seed: u64) -> Result<Vec<crate::scenario::FrameRecord>> {
    let from = start - 1;
    let mut s = checkpoints[(from / CHECKPOINT_EVERY).min(checkpoints.len() - 1)].clone();
    let mut frames = Vec::with_capacity(window + 2);
    s.run_until(from, &mut NoInjection, &mut frames)?;
    frames.clear();
    let mut inj = Injector::new(Some(fixed_plan(fault.clone(), start, 1, plan_seed)));
    s.run_until(start + window + 1, &mut inj, &mut frames)?;
    Ok(frames)
}

pub fn train(topology: Topology, data: &Dataset, opts: &TrainingOptions) -> Result<(TemporalNet, EmReport)> {
    TemporalNet::train(topology, &data.rows, &opts.em)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model_path: std::path::PathBuf,
    pub rows: usize,
    pub dropped: usize,
    pub report: EmReport,
}

/// Collect training data for the configured scenarios, fit the network and write the model file,
/// the training manifest and the EM log.
pub fn cmd_train(cfg: &super::CampaignConfig, exec: Execution) -> Result<(TemporalNet, TrainSummary)> {
    use super::{num, write_csv, EM_HEADER, TRAINING_MANIFEST_HEADER};
    cfg.validate()?;
    let topology = Topology::ads();
    let scenarios = cfg.training_scenarios()?;
    let (data, manifest) = collect(&topology, &scenarios, &cfg.sim, &cfg.training, cfg.seed, exec)?;
    let (model, report) = train(topology, &data, &cfg.training)?;
    let out = &cfg.out;
    super::ensure_dir(out)?;
    let model_path = cfg.model.clone().unwrap_or_else(|| out.join("model.tbn"));
    if let Some(parent) = model_path.parent() {
        super::ensure_dir(parent)?;
    }
    model.write(std::io::BufWriter::new(std::fs::File::create(&model_path)?))?;
    write_csv(
        &out.join("training_manifest.csv"),
        &TRAINING_MANIFEST_HEADER,
        manifest.iter().map(|m| vec![m.scenario.clone(), m.fault.clone(), m.runs.to_string()]),
    )?;
    write_csv(
        &out.join("em.csv"),
        &EM_HEADER,
        report.log_likelihood.iter().enumerate().map(|(i, ll)| vec![i.to_string(), num(*ll)]),
    )?;
    Ok((model, TrainSummary { model_path, rows: data.len(), dropped: data.dropped, report }))
}
