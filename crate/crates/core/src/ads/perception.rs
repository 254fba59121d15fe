//! Sensor fusion, tracking with coasting, and closest-in-path obstacle selection.

use super::registry::ObjectClass;
use super::sensors::Observation;
use serde::{Deserialize, Serialize};

pub const PHANTOM_ID: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    /// Fusion weights are derived from these assumed sensor noise levels.
    pub camera_sigma: f64,
    pub lidar_sigma: f64,
    pub t_miss: u32,
    pub velocity_gain: f64,
    pub lateral_velocity_gain: f64,
    pub accel_gain: f64,
    pub ego_half_width: f64,
    pub ego_half_length: f64,
    pub corridor_margin: f64,
    pub prediction_horizon: f64,
    pub horizon: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            camera_sigma: 0.3,
            lidar_sigma: 0.1,
            t_miss: 8,
            velocity_gain: 0.5,
            lateral_velocity_gain: 0.3,
            accel_gain: 0.3,
            ego_half_width: 0.9,
            ego_half_length: 2.3,
            corridor_margin: 0.3,
            prediction_horizon: 1.0,
            horizon: 200.0,
        }
    }
}

impl PerceptionConfig {
    pub fn corridor(&self, class: ObjectClass) -> f64 {
        self.ego_half_width + class.radius() + self.corridor_margin
    }
}

/// Inverse-variance weighted average of two readings.
pub fn fuse_inverse_variance(a: f64, sigma_a: f64, b: f64, sigma_b: f64) -> f64 {
    let wa = 1.0 / sigma_a.powi(2).max(1e-12);
    let wb = 1.0 / sigma_b.powi(2).max(1e-12);
    (a * wa + b * wb) / (wa + wb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    pub id: u32,
    pub distance: f64,
    pub lateral: f64,
    pub v_rel: f64,
    pub v_lat: f64,
    pub a_rel: f64,
    pub class: ObjectClass,
    pub age: u32,
    pub misses: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldModel {
    pub tracks: Vec<Track>,
}

/// The obstacle the planner reacts to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cipo {
    pub id: u32,
    pub distance: f64,
    pub lateral: f64,
    pub v_rel: f64,
    pub v_lat: f64,
    pub a_rel: f64,
    pub class: ObjectClass,
}

impl From<&Track> for Cipo {
    fn from(t: &Track) -> Self {
        Cipo {
            id: t.id,
            distance: t.distance,
            lateral: t.lateral,
            v_rel: t.v_rel,
            v_lat: t.v_lat,
            a_rel: t.a_rel,
            class: t.class,
        }
    }
}

fn fuse_pair(c: Option<&Observation>, l: Option<&Observation>, cfg: &PerceptionConfig) -> Option<(f64, f64, ObjectClass)> {
    let (d, lat, class) = match (c, l) {
        (Some(c), Some(l)) => (
            fuse_inverse_variance(c.distance, cfg.camera_sigma, l.distance, cfg.lidar_sigma),
            fuse_inverse_variance(c.lateral(), cfg.camera_sigma, l.lateral(), cfg.lidar_sigma),
            if c.confidence > l.confidence { c.class } else { l.class },
        ),
        (Some(o), None) | (None, Some(o)) => (o.distance, o.lateral(), o.class),
        (None, None) => return None,
    };
    (d.is_finite() && lat.is_finite()).then_some((d, lat, class))
}

/// Fuse both sensors into the tracked world model.
///
/// New tracks start with the relative speed of a static object. Tracks missing
/// from both sensors coast at constant relative velocity for up to `t_miss` frames.
pub fn perceive(
    camera: &[Observation],
    lidar: &[Observation],
    prev: &WorldModel,
    ego_speed: f64,
    dt: f64,
    cfg: &PerceptionConfig,
) -> WorldModel {
    let mut ids: Vec<u32> = camera.iter().chain(lidar).map(|o| o.id).collect();
    ids.sort_unstable();
    ids.dedup();
    let ego_speed = if ego_speed.is_finite() { ego_speed } else { 0.0 };
    let mut tracks = Vec::with_capacity(ids.len() + prev.tracks.len());
    for &id in &ids {
        let c = camera.iter().find(|o| o.id == id);
        let l = lidar.iter().find(|o| o.id == id);
        let Some((distance, lateral, class)) = fuse_pair(c, l, cfg) else { continue };
        let t = match prev.tracks.iter().find(|t| t.id == id) {
            Some(p) => {
                let raw_v = (distance - p.distance) / dt;
                let v_rel = p.v_rel + cfg.velocity_gain * (raw_v - p.v_rel);
                let raw_a = (v_rel - p.v_rel) / dt;
                let raw_lat_v = (lateral - p.lateral) / dt;
                Track {
                    id,
                    distance,
                    lateral,
                    v_rel,
                    v_lat: p.v_lat + cfg.lateral_velocity_gain * (raw_lat_v - p.v_lat),
                    a_rel: p.a_rel + cfg.accel_gain * (raw_a - p.a_rel),
                    class,
                    age: p.age + 1,
                    misses: 0,
                }
            }
            None => Track { id, distance, lateral, v_rel: -ego_speed, v_lat: 0.0, a_rel: 0.0, class, age: 1, misses: 0 },
        };
        tracks.push(t);
    }
    for p in &prev.tracks {
        if ids.binary_search(&p.id).is_ok() && tracks.iter().any(|t| t.id == p.id) {
            continue;
        }
        if p.misses + 1 > cfg.t_miss {
            continue;
        }
        tracks.push(Track {
            distance: p.distance + p.v_rel * dt,
            lateral: p.lateral + p.v_lat * dt,
            age: p.age + 1,
            misses: p.misses + 1,
            ..*p
        });
    }
    tracks.sort_by_key(|t| t.id);
    WorldModel { tracks }
}

fn min_abs_over(lat: f64, v_lat: f64, horizon: f64) -> f64 {
    let end = lat + v_lat * horizon;
    if lat.signum() != end.signum() {
        0.0
    } else {
        lat.abs().min(end.abs())
    }
}

/// Whether an object will be inside the ego corridor within the prediction horizon.
pub fn in_path(distance: f64, lateral: f64, v_lat: f64, class: ObjectClass, cfg: &PerceptionConfig) -> bool {
    class != ObjectClass::None
        && distance > 0.0
        && min_abs_over(lateral, v_lat, cfg.prediction_horizon) <= cfg.corridor(class)
}

pub fn select_cipo(wm: &WorldModel, cfg: &PerceptionConfig) -> Option<Cipo> {
    wm.tracks
        .iter()
        .filter(|t| in_path(t.distance, t.lateral, t.v_lat, t.class, cfg))
        .min_by(|a, b| {
            let ga = a.distance - a.class.radius();
            let gb = b.distance - b.class.radius();
            ga.total_cmp(&gb).then(a.id.cmp(&b.id))
        })
        .map(Cipo::from)
}

/// Index of the nearest in-path observation of a single sensor.
pub fn primary_observation(obs: &[Observation], cfg: &PerceptionConfig) -> Option<usize> {
    obs.iter()
        .enumerate()
        .filter(|(_, o)| in_path(o.distance, o.lateral(), 0.0, o.class, cfg))
        .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance).then(a.1.id.cmp(&b.1.id)))
        .map(|(i, _)| i)
}

/// Apply possibly corrupted (distance, class) values back onto a sensor's primary observation.
pub fn write_back_observation(
    obs: &mut Vec<Observation>,
    primary: Option<usize>,
    distance: f64,
    class: ObjectClass,
    confidence: f64,
) {
    match primary {
        Some(i) if class == ObjectClass::None => {
            obs.remove(i);
        }
        Some(i) => {
            obs[i].distance = distance;
            obs[i].class = class;
        }
        None if class != ObjectClass::None => obs.push(Observation {
            id: PHANTOM_ID,
            distance,
            bearing: 0.0,
            class,
            confidence,
        }),
        None => {}
    }
}

/// Apply possibly corrupted fused values back onto the selected obstacle.
pub fn write_back_cipo(cipo: Option<Cipo>, distance: f64, class: ObjectClass, ego_speed: f64) -> Option<Cipo> {
    if class == ObjectClass::None {
        return None;
    }
    Some(match cipo {
        Some(c) => Cipo { distance, class, ..c },
        None => Cipo {
            id: PHANTOM_ID,
            distance,
            lateral: 0.0,
            v_rel: if ego_speed.is_finite() { -ego_speed } else { 0.0 },
            v_lat: 0.0,
            a_rel: 0.0,
            class,
        },
    })
}
