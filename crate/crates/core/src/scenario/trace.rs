//! Recorded runs and the flat per-scene trace file.

use crate::ads::registry::{all_vars, format_value, parse_value, var, Vars, N_VARS};
use crate::fault::{FaultModel, FaultPlan, FaultType, InjectionRecord};
use crate::kinematics::VehicleState;
use crate::safety::{run_metrics, FrameSample, RunMetrics, SafetyAssessment};
use crate::util::sha256_hex;
use crate::{Error, Result};
use std::io::{BufRead, BufReader, Read, Write};

pub const TURN_CURVATURE: f64 = 0.005;
pub const BRAKE_ONSET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub scene: usize,
    /// Ground-truth ego state at the start of the scene.
    pub ego: VehicleState,
    /// Variables as read by their consumers, i.e. after any injection.
    pub vars: Vars,
    pub assessment: SafetyAssessment,
    pub sample: FrameSample,
    pub registered: bool,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scenario: String,
    pub seed: u64,
    pub plan: Option<FaultPlan>,
    pub frames: Vec<FrameRecord>,
    pub injections: Vec<InjectionRecord>,
    pub terminated: Option<usize>,
}

const SAFETY_COLUMNS: [&str; 8] =
    ["d_safe_long", "d_safe_lat", "d_stop_long", "d_stop_lat", "delta_long", "delta_lat", "safe", "d_safe_min"];

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["scene", "ego.x", "ego.y", "ego.v", "ego.theta", "ego.phi"].iter().map(|s| s.to_string()).collect();
    h.extend(all_vars().map(|v| v.name().to_string()));
    h.extend(SAFETY_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(["cipo", "lk", "registered", "curvature"].iter().map(|s| s.to_string()));
    h
}

impl Trace {
    pub fn new(
        scenario: String,
        seed: u64,
        plan: Option<FaultPlan>,
        frames: Vec<FrameRecord>,
        injections: Vec<InjectionRecord>,
        terminated: Option<usize>,
    ) -> Self {
        Self { scenario, seed, plan, frames, injections, terminated }
    }

    pub fn metrics(&self) -> Result<RunMetrics> {
        let samples: Vec<FrameSample> = self.frames.iter().map(|f| f.sample).collect();
        run_metrics(&samples)
    }

    /// SHA-256 over the bit patterns of every recorded value.
    pub fn digest(&self) -> String {
        let mut buf = Vec::with_capacity(self.frames.len() * 8 * (N_VARS + 16));
        buf.extend_from_slice(self.scenario.as_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        if let Some(p) = &self.plan {
            buf.extend_from_slice(p.to_string().as_bytes());
        }
        for f in &self.frames {
            buf.extend_from_slice(&(f.scene as u64).to_le_bytes());
            let a = &f.assessment;
            let e = &f.ego;
            for x in [e.x, e.y, e.v, e.theta, e.phi]
                .into_iter()
                .chain(f.vars.0)
                .chain([a.d_safe_long, a.d_safe_lat, a.d_stop_long, a.d_stop_lat, f.sample.cipo, f.sample.lk])
            {
                buf.extend_from_slice(&x.to_bits().to_le_bytes());
            }
            buf.push(f.registered as u8);
        }
        sha256_hex(&buf)
    }

    pub fn registration_frames(&self) -> Vec<usize> {
        self.frames.iter().filter(|f| f.registered).map(|f| f.scene).collect()
    }

    /// Scenes where braking starts after at least five brake-free scenes.
    pub fn braking_onsets(&self) -> Vec<usize> {
        let b: Vec<f64> = self.frames.iter().map(|f| f.vars[var::BRAKE]).collect();
        (1..b.len())
            .filter(|&k| b[k] >= BRAKE_ONSET && b[k.saturating_sub(5)..k].iter().all(|&x| x < BRAKE_ONSET))
            .map(|k| self.frames[k].scene)
            .collect()
    }

    pub fn turn_frames(&self) -> Vec<usize> {
        self.frames.iter().filter(|f| f.curvature.abs() > TURN_CURVATURE).map(|f| f.scene).collect()
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        let plan = self.plan.as_ref().map_or("none".to_string(), |p| p.to_string());
        writeln!(
            w,
            "#trace scenario={} seed={} plan={} digest={} frames={} terminated={}",
            self.scenario,
            self.seed,
            plan,
            self.digest(),
            self.frames.len(),
            self.terminated.map_or("none".to_string(), |k| k.to_string())
        )?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(csv_header())?;
        for f in &self.frames {
            let mut row = vec![f.scene.to_string()];
            row.extend([f.ego.x, f.ego.y, f.ego.v, f.ego.theta, f.ego.phi].iter().map(|x| x.to_string()));
            row.extend(all_vars().map(|v| format_value(v, f.vars[v])));
            let a = &f.assessment;
            row.extend([a.d_safe_long, a.d_safe_lat, a.d_stop_long, a.d_stop_lat, a.delta_long, a.delta_lat].iter().map(|x| x.to_string()));
            row.push(a.safe.to_string());
            row.push(a.d_safe_min.to_string());
            row.extend([f.sample.cipo.to_string(), f.sample.lk.to_string(), f.registered.to_string(), f.curvature.to_string()]);
            cw.write_record(&row)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut br = BufReader::new(r);
        let mut header = String::new();
        br.read_line(&mut header)?;
        let header = header.trim_end();
        let fields = header
            .strip_prefix("#trace ")
            .ok_or_else(|| Error::Parse("missing #trace header".into()))?;
        let get = |key: &str| -> Result<&str> {
            fields
                .split(' ')
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| Error::Parse(format!("header lacks `{key}`")))
        };
        let scenario = get("scenario")?.to_string();
        let seed: u64 = get("seed")?.parse().map_err(|_| Error::Parse("bad seed".into()))?;
        let plan = match get("plan")? {
            "none" => None,
            s => Some(parse_plan(s)?),
        };
        let digest = get("digest")?.to_string();
        let terminated = match get("terminated")? {
            "none" => None,
            s => Some(s.parse().map_err(|_| Error::Parse("bad terminated".into()))?),
        };
        let mut cr = csv::Reader::from_reader(br);
        let expected = csv_header();
        if cr.headers()?.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse("unexpected trace columns".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
        let mut frames = Vec::new();
        for rec in cr.records() {
            let rec = rec?;
            let c: Vec<&str> = rec.iter().collect();
            let mut vars = Vars::default();
            for (i, v) in all_vars().enumerate() {
                vars[v] = parse_value(v, c[6 + i]).ok_or_else(|| Error::Parse(format!("bad value `{}`", c[6 + i])))?;
            }
            let o = 6 + N_VARS;
            let assessment = SafetyAssessment {
                d_safe_long: num(c[o])?,
                d_safe_lat: num(c[o + 1])?,
                d_stop_long: num(c[o + 2])?,
                d_stop_lat: num(c[o + 3])?,
                delta_long: num(c[o + 4])?,
                delta_lat: num(c[o + 5])?,
                safe: c[o + 6] == "true",
                d_safe_min: num(c[o + 7])?,
            };
            frames.push(FrameRecord {
                scene: c[0].parse().map_err(|_| Error::Parse("bad scene".into()))?,
                ego: VehicleState::new(num(c[1])?, num(c[2])?, num(c[3])?, num(c[4])?, num(c[5])?),
                vars,
                assessment,
                sample: FrameSample { cipo: num(c[o + 8])?, lk: num(c[o + 9])? },
                registered: c[o + 10] == "true",
                curvature: num(c[o + 11])?,
            });
        }
        let t = Trace { scenario, seed, plan, frames, injections: Vec::new(), terminated };
        if t.digest() != digest {
            return Err(Error::Parse("trace digest mismatch".into()));
        }
        Ok(t)
    }
}

/// Inverse of `FaultPlan`'s display form `model:variable:rule@start+duration#seed`.
pub fn parse_plan(s: &str) -> Result<FaultPlan> {
    let bad = || Error::Parse(format!("bad plan `{s}`"));
    let (head, tail) = s.rsplit_once('@').ok_or_else(bad)?;
    let (model, fault) = head.split_once(':').ok_or_else(bad)?;
    let model = match model {
        "one-fixed" => FaultModel::OneFixed,
        "m-fixed" => FaultModel::MFixed,
        "one-random" => FaultModel::OneRandom,
        "m-random" => FaultModel::MRandom,
        "bit-flip" => FaultModel::BitFlip,
        _ => return Err(bad()),
    };
    let (window, seed) = tail.split_once('#').ok_or_else(bad)?;
    let (start, duration) = window.split_once('+').ok_or_else(bad)?;
    Ok(FaultPlan {
        model,
        start: start.parse().map_err(|_| bad())?,
        duration: duration.parse().map_err(|_| bad())?,
        fault: FaultType::parse(fault)?,
        seed: seed.parse().map_err(|_| bad())?,
    })
}

/// Injection log rows: experiment, scene, variable, old, new.
pub fn write_injection_log<W: Write>(w: W, rows: &[(usize, InjectionRecord)]) -> Result<()> {
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(["experiment", "scene", "variable", "old", "new"])?;
    for (e, r) in rows {
        cw.write_record([
            e.to_string(),
            r.scene.to_string(),
            r.variable.name().to_string(),
            format_value(r.variable, r.old),
            format_value(r.variable, r.new),
        ])?;
    }
    cw.flush()?;
    Ok(())
}
