//! Scripted driving scenarios, the closed-loop simulator and recorded traces.

pub mod library;
pub mod sim;
pub mod trace;

use crate::ads::registry::LaneType;
use crate::geometry::Polyline;
use crate::kinematics::VehicleState;
use crate::safety::{Lane, ObjectKind, WorldObject};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub use library::scenario_library;
pub use sim::{run, SimConfig, Simulation, VehicleDynamics};
pub use trace::{FrameRecord, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct ActorScript {
    pub kind: ObjectKind,
    pub radius: f64,
    /// `(t, x, y)` with strictly increasing `t`; the actor exists only within this span.
    pub waypoints: Vec<(f64, f64, f64)>,
}

impl ActorScript {
    pub fn state_at(&self, t: f64) -> Option<((f64, f64), (f64, f64))> {
        let w = &self.waypoints;
        let (first, last) = (w.first()?, w.last()?);
        if t < first.0 || t > last.0 {
            return None;
        }
        if w.len() == 1 {
            return Some(((first.1, first.2), (0.0, 0.0)));
        }
        let i = w.partition_point(|p| p.0 <= t).clamp(1, w.len() - 1);
        let (a, b) = (w[i - 1], w[i]);
        let u = (t - a.0) / (b.0 - a.0);
        let vel = ((b.1 - a.1) / (b.0 - a.0), (b.2 - a.2) / (b.0 - a.0));
        Some(((a.1 + u * (b.1 - a.1), a.2 + u * (b.2 - a.2)), vel))
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub scenes: usize,
    pub dt: f64,
    pub cruise_speed: f64,
    pub lane_type: LaneType,
    pub ego: VehicleState,
    pub lane: Lane,
    pub actors: Vec<ActorScript>,
}

impl Scenario {
    pub fn world_at(&self, t: f64) -> Vec<WorldObject> {
        self.actors
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                a.state_at(t).map(|(position, velocity)| WorldObject {
                    id: i as u32 + 1,
                    kind: a.kind,
                    position,
                    velocity: if a.kind == ObjectKind::LaneBoundary { (0.0, 0.0) } else { velocity },
                    radius: a.radius,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenes == 0 {
            return Err(Error::Config(format!("scenario {}: scenes must be at least 1", self.id)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("scenario {}: dt must be positive", self.id)));
        }
        if !(self.cruise_speed.is_finite() && self.cruise_speed >= 0.0) {
            return Err(Error::Config(format!("scenario {}: bad cruise speed", self.id)));
        }
        if !self.ego.is_finite() || self.ego.v < 0.0 {
            return Err(Error::Config(format!("scenario {}: bad ego start", self.id)));
        }
        for (i, a) in self.actors.iter().enumerate() {
            if a.radius < 0.0 || a.waypoints.is_empty() {
                return Err(Error::Config(format!("scenario {}: actor {i} needs a radius >= 0 and waypoints", self.id)));
            }
            if a.waypoints.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Config(format!("scenario {}: actor {i} waypoint times must increase", self.id)));
            }
            if a.kind == ObjectKind::LaneBoundary && a.waypoints.windows(2).any(|w| (w[0].1, w[0].2) != (w[1].1, w[1].2)) {
                return Err(Error::Config(format!("scenario {}: lane boundary actor {i} must be static", self.id)));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        f.into_scenario()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioFile::from(self)).expect("scenario serialises")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EgoFile {
    x: f64,
    y: f64,
    v: f64,
    theta: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LaneFile {
    half_width: f64,
    centerline: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActorFile {
    kind: ObjectKind,
    radius: f64,
    waypoints: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    id: String,
    scenes: usize,
    dt: f64,
    cruise_speed: f64,
    #[serde(default = "default_lane_type")]
    lane_type: String,
    ego: EgoFile,
    lane: LaneFile,
    #[serde(default)]
    actors: Vec<ActorFile>,
}

fn default_lane_type() -> String {
    "dashed".into()
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let lane_type = match self.lane_type.as_str() {
            "solid" => LaneType::Solid,
            "dashed" => LaneType::Dashed,
            other => return Err(Error::Config(format!("unknown lane_type `{other}`"))),
        };
        if !(self.lane.half_width.is_finite() && self.lane.half_width > 0.0) {
            return Err(Error::Config("lane.half_width must be positive".into()));
        }
        let centerline = Polyline::new(self.lane.centerline.iter().map(|p| (p[0], p[1])).collect())?;
        let s = Scenario {
            id: self.id,
            scenes: self.scenes,
            dt: self.dt,
            cruise_speed: self.cruise_speed,
            lane_type,
            ego: VehicleState::new(self.ego.x, self.ego.y, self.ego.v, self.ego.theta, 0.0),
            lane: Lane { centerline, half_width: self.lane.half_width },
            actors: self
                .actors
                .into_iter()
                .map(|a| ActorScript {
                    kind: a.kind,
                    radius: a.radius,
                    waypoints: a.waypoints.iter().map(|w| (w[0], w[1], w[2])).collect(),
                })
                .collect(),
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            id: s.id.clone(),
            scenes: s.scenes,
            dt: s.dt,
            cruise_speed: s.cruise_speed,
            lane_type: if s.lane_type == LaneType::Solid { "solid" } else { "dashed" }.into(),
            ego: EgoFile { x: s.ego.x, y: s.ego.y, v: s.ego.v, theta: s.ego.theta },
            lane: LaneFile {
                half_width: s.lane.half_width,
                centerline: s.lane.centerline.points().iter().map(|p| [p.0, p.1]).collect(),
            },
            actors: s
                .actors
                .iter()
                .map(|a| ActorFile {
                    kind: a.kind,
                    radius: a.radius,
                    waypoints: a.waypoints.iter().map(|w| [w.0, w.1, w.2]).collect(),
                })
                .collect(),
        }
    }
}
