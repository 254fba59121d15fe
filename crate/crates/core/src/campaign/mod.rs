//! Campaign orchestration and the on-disk layout shared by all subcommands.
//!
//! Every command writes into one directory: a `manifest.csv`, per-experiment
//! traces under `traces/`, and report CSVs whose headers are fixed below.

pub mod config;
pub mod golden;
pub mod mine;
pub mod random;
pub mod report;
pub mod selfcheck;
pub mod stats;
pub mod train;

use crate::{Error, Result};
use std::fs;
use std::path::{Path, PathBuf};

pub use config::CampaignConfig;

pub const MANIFEST_HEADER: [&str; 6] = ["experiment", "label", "scenario", "seed", "plan", "trace"];
pub const RUNS_HEADER: [&str; 13] = [
    "experiment", "label", "scenario", "seed", "plan", "module", "variable", "start", "duration", "min_cipo", "max_lk", "hazard",
    "digest",
];
pub const GOLDEN_SUMMARY_HEADER: [&str; 7] =
    ["scenario", "runs", "median_min_cipo", "median_max_lk", "min_min_cipo", "max_max_lk", "hazards"];
pub const BOXPLOT_HEADER: [&str; 10] =
    ["label", "metric", "n", "min", "whisker_low", "q1", "median", "q3", "whisker_high", "max"];
pub const HAZARDS_HEADER: [&str; 5] = ["label", "scenario", "experiments", "hazards", "hazard_rate"];
pub const FCRIT_HEADER: [&str; 6] = ["scenario", "scene", "fault", "golden_delta", "predicted_delta", "replay_verdict"];
pub const MINING_HEADER: [&str; 13] = [
    "scenario", "scenes", "eligible_scenes", "catalog", "inferences", "unconverged", "critical_faults", "critical_scenes",
    "critical_scene_pct", "critical_fault_pct", "replayed", "manifested", "manifestation_rate",
];
pub const TIMING_HEADER: [&str; 5] = ["scenario", "mining_secs", "replays", "per_replay_secs", "speedup"];
pub const MVF_HEADER: [&str; 6] = ["label", "rank", "module", "experiments", "vulnerable", "mvf"];
pub const COMPENSATION_HEADER: [&str; 5] = ["label", "experiment", "scene", "brake_diff", "c"];
pub const TRAINING_MANIFEST_HEADER: [&str; 3] = ["scenario", "fault", "runs"];
pub const EM_HEADER: [&str; 2] = ["iteration", "log_likelihood"];

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create `{}`: {e}", dir.display())))
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a CSV file whose header must equal `header`.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("cannot read `{}`: {e}", path.display())))?;
    if r.headers()?.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!("`{}` has unexpected columns", path.display())));
    }
    r.records().map(|rec| Ok(rec?.iter().map(str::to_string).collect())).collect()
}

pub fn trace_path(dir: &Path, name: &str) -> PathBuf {
    dir.join("traces").join(format!("{name}.csv"))
}

/// Fixed-precision rendering for report numbers.
pub fn num(x: f64) -> String {
    format!("{x:.6}")
}

/// Independent per-experiment seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
