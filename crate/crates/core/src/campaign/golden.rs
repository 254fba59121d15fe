//! Fault-free reference runs.

use super::config::{CampaignConfig, SaveTraces};
use super::stats::median;
use super::{num, trace_path, write_csv, GOLDEN_SUMMARY_HEADER, MANIFEST_HEADER, RUNS_HEADER};
use crate::exec::Execution;
use crate::scenario::{run, Scenario, SimConfig, Trace};
use crate::{Error, Result};
use std::fs::File;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenSummary {
    pub scenario: String,
    pub runs: usize,
    pub median_min_cipo: f64,
    pub median_max_lk: f64,
    pub min_min_cipo: f64,
    pub max_max_lk: f64,
    pub hazards: usize,
    pub first_hazard: Option<(u64, usize)>,
}

pub fn golden_traces(scenario: &Arc<Scenario>, sim: &SimConfig, seed: u64, runs: usize, exec: Execution) -> Result<Vec<Trace>> {
    exec.try_map(runs, |i| run(scenario, sim, None, seed + i as u64))
}

pub fn summarize(traces: &[Trace]) -> Result<GoldenSummary> {
    let first = traces.first().ok_or_else(|| Error::Config("no golden runs".into()))?;
    let metrics = traces.iter().map(Trace::metrics).collect::<Result<Vec<_>>>()?;
    let cipo: Vec<f64> = metrics.iter().map(|m| m.min_cipo).collect();
    let lk: Vec<f64> = metrics.iter().map(|m| m.max_lk).collect();
    let first_hazard = traces.iter().zip(&metrics).find_map(|(t, m)| m.hazard_frame.map(|k| (t.seed, k)));
    Ok(GoldenSummary {
        scenario: first.scenario.clone(),
        runs: traces.len(),
        median_min_cipo: median(&cipo),
        median_max_lk: median(&lk),
        min_min_cipo: cipo.iter().copied().fold(f64::INFINITY, f64::min),
        max_max_lk: lk.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        hazards: metrics.iter().filter(|m| m.hazard).count(),
        first_hazard,
    })
}

pub fn golden_name(scenario: &str, seed: u64) -> String {
    format!("golden_{scenario}_{seed}")
}

pub fn run_row(experiment: usize, label: &str, t: &Trace) -> Result<Vec<String>> {
    let m = t.metrics()?;
    let (plan, module, variable, start, duration) = match &t.plan {
        Some(p) => (
            p.to_string(),
            p.fault.target.def().module.name().to_string(),
            p.fault.target.name().to_string(),
            p.start.to_string(),
            p.duration.to_string(),
        ),
        None => ("none".into(), String::new(), String::new(), String::new(), String::new()),
    };
    Ok(vec![
        experiment.to_string(),
        label.to_string(),
        t.scenario.clone(),
        t.seed.to_string(),
        plan,
        module,
        variable,
        start,
        duration,
        num(m.min_cipo),
        num(m.max_lk),
        m.hazard.to_string(),
        t.digest(),
    ])
}

/// Run the configured number of golden runs per scenario and write traces, per-run metrics and a summary.
/// Fails with [`Error::GoldenHazard`] after writing everything if any run was hazardous.
pub fn cmd_golden(cfg: &CampaignConfig, exec: Execution) -> Result<Vec<GoldenSummary>> {
    cfg.validate()?;
    let out = &cfg.out;
    let mut manifest = Vec::new();
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for sc in cfg.scenarios()? {
        let traces = golden_traces(&sc, &cfg.sim, cfg.seed, cfg.golden_runs, exec)?;
        for t in &traces {
            let i = manifest.len();
            let name = golden_name(&t.scenario, t.seed);
            let keep = match cfg.save_traces {
                SaveTraces::All => true,
                SaveTraces::Hazards => t.metrics()?.hazard,
                SaveTraces::None => false,
            };
            if keep {
                write_trace(out, &name, t)?;
            }
            manifest.push(vec![i.to_string(), "golden".into(), t.scenario.clone(), t.seed.to_string(), "none".into(), if keep { format!("traces/{name}.csv") } else { String::new() }]);
            runs.push(run_row(i, "golden", t)?);
        }
        summaries.push(summarize(&traces)?);
    }
    write_csv(&out.join("manifest.csv"), &MANIFEST_HEADER, manifest)?;
    write_csv(&out.join("runs.csv"), &RUNS_HEADER, runs)?;
    write_csv(
        &out.join("summary.csv"),
        &GOLDEN_SUMMARY_HEADER,
        summaries.iter().map(|s| {
            vec![
                s.scenario.clone(),
                s.runs.to_string(),
                num(s.median_min_cipo),
                num(s.median_max_lk),
                num(s.min_min_cipo),
                num(s.max_max_lk),
                s.hazards.to_string(),
            ]
        }),
    )?;
    if let Some(s) = summaries.iter().find(|s| s.hazards > 0) {
        let (seed, frame) = s.first_hazard.expect("hazardous summary records its first hazard");
        return Err(Error::GoldenHazard { scenario: s.scenario.clone(), seed, frame });
    }
    Ok(summaries)
}

pub fn write_trace(dir: &Path, name: &str, t: &Trace) -> Result<()> {
    let path = trace_path(dir, name);
    super::ensure_dir(path.parent().expect("trace path has a parent"))?;
    t.write(File::create(path)?)
}
