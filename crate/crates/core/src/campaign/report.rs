//! Consolidated report over campaign directories, computed from their trace files alone.

use super::random::boxplot_rows;
use super::random::CampaignSummary;
use super::{num, read_csv, write_csv, BOXPLOT_HEADER, COMPENSATION_HEADER, HAZARDS_HEADER, MANIFEST_HEADER, MVF_HEADER};
use crate::ads::registry::{var, Module};
use crate::safety::RunMetrics;
use crate::scenario::Trace;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

/// Extremes of the golden runs of one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenExtremes {
    pub min_cipo: f64,
    pub max_lk: f64,
}

impl GoldenExtremes {
    pub fn of(metrics: &[RunMetrics]) -> Option<Self> {
        if metrics.is_empty() {
            return None;
        }
        Some(Self {
            min_cipo: metrics.iter().map(|m| m.min_cipo).fold(f64::INFINITY, f64::min),
            max_lk: metrics.iter().map(|m| m.max_lk).fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Closer to the CIPO or further off-centre than any golden run.
    pub fn exceeded_by(&self, m: &RunMetrics) -> bool {
        m.min_cipo < self.min_cipo || m.max_lk > self.max_lk
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvfRow {
    pub label: String,
    pub module: Module,
    pub experiments: usize,
    pub vulnerable: usize,
}

impl MvfRow {
    /// Percentage of experiments targeting the module that exceeded the golden extremes.
    pub fn mvf(&self) -> f64 {
        if self.experiments == 0 {
            0.0
        } else {
            100.0 * self.vulnerable as f64 / self.experiments as f64
        }
    }
}

/// MVF of every module for one campaign label, highest first.
pub fn mvf_table(label: &str, runs: &[(Option<Module>, bool)]) -> Vec<MvfRow> {
    let mut rows: Vec<MvfRow> = Module::ALL
        .iter()
        .map(|&module| {
            let hit: Vec<bool> = runs.iter().filter(|(m, _)| *m == Some(module)).map(|&(_, v)| v).collect();
            MvfRow { label: label.to_string(), module, experiments: hit.len(), vulnerable: hit.iter().filter(|&&v| v).count() }
        })
        .collect();
    rows.sort_by(|a, b| b.mvf().total_cmp(&a.mvf()));
    rows
}

/// `c(K) = Σ_{k≤K} brake_injected(k) − Σ_{k≤K} brake_golden(k)` over the injected run's frames.
pub fn compensation(golden_brake: &[f64], injected_brake: &[f64]) -> Vec<f64> {
    let mut c = 0.0;
    injected_brake
        .iter()
        .enumerate()
        .map(|(k, b)| {
            c += b - golden_brake.get(k).copied().unwrap_or(0.0);
            c
        })
        .collect()
}

pub fn brake_series(t: &Trace) -> Vec<f64> {
    t.frames.iter().map(|f| f.vars[var::BRAKE]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub dir: PathBuf,
    pub index: usize,
    pub label: String,
    pub scenario: String,
    pub seed: u64,
    pub trace: Option<PathBuf>,
}

pub fn read_manifest(dir: &Path) -> Result<Vec<Experiment>> {
    read_csv(&dir.join("manifest.csv"), &MANIFEST_HEADER)?
        .into_iter()
        .map(|r| {
            let bad = || Error::Parse(format!("bad manifest row in `{}`", dir.display()));
            Ok(Experiment {
                dir: dir.to_path_buf(),
                index: r[0].parse().map_err(|_| bad())?,
                label: r[1].clone(),
                scenario: r[2].clone(),
                seed: r[3].parse().map_err(|_| bad())?,
                trace: (!r[5].is_empty()).then(|| dir.join(&r[5])),
            })
        })
        .collect()
}

fn load(e: &Experiment) -> Result<Trace> {
    let path = e.trace.as_ref().ok_or_else(|| {
        Error::Config(format!("experiment {} in `{}` has no saved trace; rerun with save_traces = \"all\"", e.index, e.dir.display()))
    })?;
    Trace::read(File::open(path)?)
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub mvf: Vec<MvfRow>,
    pub campaigns: Vec<CampaignSummary>,
    /// (label, experiment, c(K)) for experiments with a golden run of the same scenario and seed.
    pub compensation: Vec<(String, usize, Vec<f64>)>,
}

/// Consolidate campaign directories. At least one directory must hold golden runs for every scenario used.
pub fn build(dirs: &[PathBuf]) -> Result<Report> {
    let mut golden_metrics: BTreeMap<String, Vec<RunMetrics>> = BTreeMap::new();
    let mut golden_brake: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    let mut others = Vec::new();
    for d in dirs {
        for e in read_manifest(d)? {
            if e.label == "golden" {
                let t = load(&e)?;
                golden_metrics.entry(e.scenario.clone()).or_default().push(t.metrics()?);
                golden_brake.insert((e.scenario.clone(), e.seed), brake_series(&t));
            } else {
                others.push(e);
            }
        }
    }
    let extremes: BTreeMap<String, GoldenExtremes> =
        golden_metrics.iter().filter_map(|(s, m)| Some((s.clone(), GoldenExtremes::of(m)?))).collect();
    let mut report = Report::default();
    let mut labels: Vec<String> = Vec::new();
    let mut per_label: BTreeMap<String, Vec<(Option<Module>, bool)>> = BTreeMap::new();
    let mut summaries: BTreeMap<(String, String), CampaignSummary> = BTreeMap::new();
    for e in &others {
        let g = extremes
            .get(&e.scenario)
            .ok_or_else(|| Error::Config(format!("missing golden reference for scenario `{}`", e.scenario)))?;
        let t = load(e)?;
        let m = t.metrics()?;
        if !labels.contains(&e.label) {
            labels.push(e.label.clone());
        }
        let module = t.plan.as_ref().map(|p| p.fault.target.def().module);
        per_label.entry(e.label.clone()).or_default().push((module, g.exceeded_by(&m)));
        let s = summaries.entry((e.label.clone(), e.scenario.clone())).or_insert_with(|| CampaignSummary {
            label: e.label.clone(),
            scenario: e.scenario.clone(),
            experiments: 0,
            hazards: 0,
            min_cipo: Vec::new(),
            max_lk: Vec::new(),
            digests: Vec::new(),
        });
        s.experiments += 1;
        s.hazards += usize::from(m.hazard);
        s.min_cipo.push(m.min_cipo);
        s.max_lk.push(m.max_lk);
        s.digests.push(t.digest());
        if let Some(gb) = golden_brake.get(&(e.scenario.clone(), e.seed)) {
            report.compensation.push((e.label.clone(), e.index, compensation(gb, &brake_series(&t))));
        }
    }
    for l in &labels {
        report.mvf.extend(mvf_table(l, &per_label[l]));
    }
    report.campaigns = summaries.into_values().collect();
    Ok(report)
}

pub fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<Report> {
    let report = build(dirs)?;
    let mut rank = BTreeMap::<&str, usize>::new();
    write_csv(
        &out.join("mvf.csv"),
        &MVF_HEADER,
        report.mvf.iter().map(|r| {
            let n = rank.entry(&r.label).or_default();
            *n += 1;
            vec![r.label.clone(), n.to_string(), r.module.name().to_string(), r.experiments.to_string(), r.vulnerable.to_string(), num(r.mvf())]
        }),
    )?;
    write_csv(&out.join("boxplot.csv"), &BOXPLOT_HEADER, report.campaigns.iter().flat_map(boxplot_rows))?;
    write_csv(
        &out.join("hazards.csv"),
        &HAZARDS_HEADER,
        report.campaigns.iter().map(|s| vec![s.label.clone(), s.scenario.clone(), s.experiments.to_string(), s.hazards.to_string(), num(s.hazard_rate())]),
    )?;
    write_csv(
        &out.join("compensation.csv"),
        &COMPENSATION_HEADER,
        report.compensation.iter().flat_map(|(label, i, c)| {
            c.iter().enumerate().map(move |(k, v)| {
                let d = if k == 0 { *v } else { v - c[k - 1] };
                vec![label.clone(), i.to_string(), k.to_string(), num(d), num(*v)]
            })
        }),
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untargeted_modules_score_zero() {
        let runs = vec![(Some(Module::Control), true), (Some(Module::Control), false), (Some(Module::Sensor), false)];
        let t = mvf_table("x", &runs);
        assert_eq!(t[0].module, Module::Control);
        assert_eq!(t[0].mvf(), 50.0);
        assert!(t.iter().filter(|r| r.module != Module::Control).all(|r| r.mvf() == 0.0));
    }

    #[test]
    fn compensation_of_identical_runs_is_zero() {
        let b = [0.0, 0.3, 1.0, 0.2];
        assert!(compensation(&b, &b).iter().all(|&c| c == 0.0));
        assert_eq!(compensation(&[0.0, 0.0], &[0.5, 0.0, 1.0]), vec![0.5, 0.5, 1.5]);
    }
}
