//! Baseline campaigns: one experiment per drawn fault plan.

use super::config::{CampaignConfig, SaveTraces};
use super::golden::{run_row, write_trace};
use super::stats::boxplot;
use super::{derive_seed, num, write_csv, BOXPLOT_HEADER, HAZARDS_HEADER, MANIFEST_HEADER, RUNS_HEADER};
use crate::exec::Execution;
use crate::fault::{make_plan, FaultModel, FaultPlan};
use crate::scenario::{run, sim::validate_plan, Scenario, Trace};
use crate::scenario::trace::write_injection_log;
use crate::Result;
use std::fs::File;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub label: String,
    pub scenario: String,
    pub experiments: usize,
    pub hazards: usize,
    pub min_cipo: Vec<f64>,
    pub max_lk: Vec<f64>,
    pub digests: Vec<String>,
}

impl CampaignSummary {
    pub fn hazard_rate(&self) -> f64 {
        self.hazards as f64 / self.experiments.max(1) as f64
    }
}

/// Plan of experiment `i`: the configured model, with fixed models cycling through the targets.
pub fn plan_for(cfg: &CampaignConfig, scenario: &Scenario, i: usize) -> Result<FaultPlan> {
    let faults = cfg.faults()?;
    let fault = (!faults.is_empty()).then(|| &faults[i % faults.len()]);
    let mut plan = make_plan(cfg.fault_model, fault, cfg.bits, scenario.scenes, derive_seed(cfg.seed, i as u64))?;
    if cfg.fault_model == FaultModel::MFixed {
        if let Some(d) = cfg.duration {
            plan.duration = d;
        }
    }
    if let Some(s) = cfg.start {
        plan.start = s;
    } else if plan.start + plan.duration > scenario.scenes {
        plan.start = scenario.scenes.saturating_sub(plan.duration);
    }
    validate_plan(&plan, scenario.scenes)?;
    Ok(plan)
}

const CHUNK: usize = 64;

/// Run every experiment and hand each trace to `sink` in experiment order, holding at most one chunk in memory.
/// Every experiment uses the campaign seed for the simulation, so each differs from the golden run of
/// that seed only by its fault plan.
pub fn for_each_experiment(
    cfg: &CampaignConfig,
    scenario: &Arc<Scenario>,
    exec: Execution,
    mut sink: impl FnMut(usize, Trace) -> Result<()>,
) -> Result<()> {
    for base in (0..cfg.experiments).step_by(CHUNK) {
        let n = CHUNK.min(cfg.experiments - base);
        let traces = exec.try_map(n, |j| run(scenario, &cfg.sim, Some(plan_for(cfg, scenario, base + j)?), cfg.seed))?;
        for (j, t) in traces.into_iter().enumerate() {
            sink(base + j, t)?;
        }
    }
    Ok(())
}

impl CampaignSummary {
    fn new(label: &str, scenario: &str) -> Self {
        Self {
            label: label.to_string(),
            scenario: scenario.to_string(),
            experiments: 0,
            hazards: 0,
            min_cipo: Vec::new(),
            max_lk: Vec::new(),
            digests: Vec::new(),
        }
    }

    fn add(&mut self, t: &Trace) -> Result<()> {
        let m = t.metrics()?;
        self.experiments += 1;
        self.hazards += usize::from(m.hazard);
        self.min_cipo.push(m.min_cipo);
        self.max_lk.push(m.max_lk);
        self.digests.push(t.digest());
        Ok(())
    }
}

/// Run a campaign on one scenario without writing anything.
pub fn run_campaign(cfg: &CampaignConfig, scenario: &Arc<Scenario>, exec: Execution) -> Result<CampaignSummary> {
    let mut s = CampaignSummary::new(&cfg.label(), &scenario.id);
    for_each_experiment(cfg, scenario, exec, |_, t| s.add(&t))?;
    Ok(s)
}

pub fn boxplot_rows(s: &CampaignSummary) -> Vec<Vec<String>> {
    [("min_cipo", &s.min_cipo), ("max_lk", &s.max_lk)]
        .into_iter()
        .filter_map(|(metric, xs)| {
            let b = boxplot(xs)?;
            Some(vec![
                s.label.clone(),
                metric.to_string(),
                b.n.to_string(),
                num(b.min),
                num(b.whisker_low),
                num(b.q1),
                num(b.median),
                num(b.q3),
                num(b.whisker_high),
                num(b.max),
            ])
        })
        .collect()
}

pub fn cmd_random_campaign(cfg: &CampaignConfig, exec: Execution) -> Result<Vec<CampaignSummary>> {
    cfg.validate()?;
    let label = cfg.label();
    let out = &cfg.out;
    let (mut manifest, mut runs, mut log, mut boxes, mut hazards) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut summaries = Vec::new();
    for sc in cfg.scenarios()? {
        let offset = manifest.len();
        let mut s = CampaignSummary::new(&label, &sc.id);
        for_each_experiment(cfg, &sc, exec, |j, t| {
            let i = offset + j;
            let name = format!("exp{i:05}");
            let keep = match cfg.save_traces {
                SaveTraces::All => true,
                SaveTraces::Hazards => t.metrics()?.hazard,
                SaveTraces::None => false,
            };
            if keep {
                write_trace(out, &name, &t)?;
            }
            let plan = t.plan.as_ref().map_or("none".to_string(), |p| p.to_string());
            manifest.push(vec![i.to_string(), label.clone(), t.scenario.clone(), t.seed.to_string(), plan, if keep { format!("traces/{name}.csv") } else { String::new() }]);
            runs.push(run_row(i, &label, &t)?);
            log.extend(t.injections.iter().map(|r| (i, *r)));
            s.add(&t)
        })?;
        boxes.extend(boxplot_rows(&s));
        hazards.push(vec![label.clone(), s.scenario.clone(), s.experiments.to_string(), s.hazards.to_string(), num(s.hazard_rate())]);
        summaries.push(s);
    }
    write_csv(&out.join("manifest.csv"), &MANIFEST_HEADER, manifest)?;
    write_csv(&out.join("runs.csv"), &RUNS_HEADER, runs)?;
    write_csv(&out.join("boxplot.csv"), &BOXPLOT_HEADER, boxes)?;
    write_csv(&out.join("hazards.csv"), &HAZARDS_HEADER, hazards)?;
    write_injection_log(File::create(out.join("injections.csv"))?, &log)?;
    std::fs::write(out.join("campaign.toml"), cfg.to_toml())?;
    Ok(summaries)
}
