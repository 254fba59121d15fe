//! Safety envelope, safety potential and per-run hazard metrics.

use crate::geometry::{Frenet, Polyline};
use crate::kinematics::{emergency_stop, KinematicParams, VehicleState};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const CIPO_HAZARD: f64 = 1.0;
pub const LK_HAZARD: f64 = 0.80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Vehicle,
    Pedestrian,
    Cyclist,
    LaneBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldObject {
    pub id: u32,
    pub kind: ObjectKind,
    pub position: (f64, f64),
    pub velocity: (f64, f64),
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct Lane {
    pub centerline: Polyline,
    pub half_width: f64,
}

impl Lane {
    pub fn frenet(&self, x: f64, y: f64) -> Frenet {
        self.centerline.project(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    pub ego_half_width: f64,
    pub ego_half_length: f64,
    pub horizon: f64,
    /// Minimum longitudinal clearance the envelope must keep.
    pub d_safe_min: f64,
    /// Minimum lateral clearance to the lane edge.
    pub lateral_floor: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            ego_half_width: 0.9,
            ego_half_length: 2.3,
            horizon: 200.0,
            d_safe_min: CIPO_HAZARD,
            lateral_floor: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DSafe {
    pub long: f64,
    pub lat: f64,
    pub left: f64,
    pub right: f64,
    /// Lateral offset of the ego from the lane center.
    pub offset: f64,
}

/// Geometric clearances: longitudinal gap to the closest in-corridor object and
/// lateral room to the lane edges and laterally adjacent objects.
pub fn compute_d_safe(
    ego: &VehicleState,
    world: &[WorldObject],
    lane: &Lane,
    cfg: &SafetyConfig,
) -> DSafe {
    let fe = lane.frenet(ego.x, ego.y);
    let mut long = cfg.horizon;
    let mut left = lane.half_width - cfg.ego_half_width - fe.d;
    let mut right = lane.half_width - cfg.ego_half_width + fe.d;
    for o in world {
        let fo = lane.frenet(o.position.0, o.position.1);
        let ds = fo.s - fe.s;
        let lat = fo.d - fe.d;
        if lat.abs() <= cfg.ego_half_width + o.radius {
            if ds > 0.0 && ds <= cfg.horizon {
                long = long.min(ds - o.radius - cfg.ego_half_length);
            }
        } else if ds.abs() <= o.radius + cfg.ego_half_length {
            let room = lat.abs() - o.radius - cfg.ego_half_width;
            if lat > 0.0 {
                left = left.min(room);
            } else {
                right = right.min(room);
            }
        }
    }
    DSafe { long, lat: left.min(right), left, right, offset: fe.d }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyAssessment {
    pub d_safe_long: f64,
    pub d_safe_lat: f64,
    pub d_stop_long: f64,
    pub d_stop_lat: f64,
    pub delta_long: f64,
    pub delta_lat: f64,
    pub safe: bool,
    pub d_safe_min: f64,
}

impl SafetyAssessment {
    pub fn from_parts(d_safe_long: f64, d_safe_lat: f64, d_stop_long: f64, d_stop_lat: f64, d_safe_min: f64) -> Self {
        let delta_long = d_safe_long - d_stop_long;
        let delta_lat = d_safe_lat - d_stop_lat;
        Self {
            d_safe_long,
            d_safe_lat,
            d_stop_long,
            d_stop_lat,
            delta_long,
            delta_lat,
            safe: delta_long > 0.0 && delta_lat > 0.0,
            d_safe_min,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta_long.min(self.delta_lat)
    }
}

/// Safety potential of `ego` against `world`.
///
/// Clearances are reduced by the configured floors before the stopping
/// displacement is subtracted. The stop path is measured in the lane frame so
/// curved roads are handled.
pub fn assess(
    ego: &VehicleState,
    world: &[WorldObject],
    lane: &Lane,
    params: &KinematicParams,
    cfg: &SafetyConfig,
) -> Result<SafetyAssessment> {
    let stop = emergency_stop(ego, params)?;
    let ds = compute_d_safe(ego, world, lane, cfg);
    let fe = lane.frenet(ego.x, ego.y);
    let (ex, ey) = stop.end();
    let d_stop_long = lane.frenet(ex, ey).s - fe.s;
    let (mut drift_left, mut drift_right) = (0.0f64, 0.0f64);
    let n = stop.path.len();
    for (i, &(x, y)) in stop.path.iter().enumerate() {
        if i % 4 != 0 && i + 1 != n {
            continue;
        }
        let d = lane.frenet(x, y).d - fe.d;
        drift_left = drift_left.max(d);
        drift_right = drift_right.max(-d);
    }
    let left = ds.left - cfg.lateral_floor;
    let right = ds.right - cfg.lateral_floor;
    let (d_safe_lat, d_stop_lat) =
        if left - drift_left <= right - drift_right { (left, drift_left) } else { (right, drift_right) };
    Ok(SafetyAssessment::from_parts(
        ds.long - cfg.d_safe_min,
        d_safe_lat,
        d_stop_long,
        d_stop_lat,
        cfg.d_safe_min,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub cipo: f64,
    pub lk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub min_cipo: f64,
    pub max_lk: f64,
    pub hazard: bool,
    pub hazard_frame: Option<usize>,
}

pub fn is_hazard(s: &FrameSample) -> bool {
    s.cipo < CIPO_HAZARD || s.lk > LK_HAZARD
}

pub fn run_metrics(samples: &[FrameSample]) -> Result<RunMetrics> {
    if samples.is_empty() {
        return Err(Error::Domain("run metrics need at least one frame".into()));
    }
    let min_cipo = samples.iter().map(|s| s.cipo).fold(f64::INFINITY, f64::min);
    let max_lk = samples.iter().map(|s| s.lk).fold(f64::NEG_INFINITY, f64::max);
    let hazard_frame = samples.iter().position(is_hazard);
    Ok(RunMetrics { min_cipo, max_lk, hazard: hazard_frame.is_some(), hazard_frame })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_lane() -> Lane {
        Lane { centerline: Polyline::new(vec![(-100.0, 0.0), (1000.0, 0.0)]).unwrap(), half_width: 1.8 }
    }

    fn obj(id: u32, x: f64, y: f64, r: f64) -> WorldObject {
        WorldObject { id, kind: ObjectKind::Vehicle, position: (x, y), velocity: (0.0, 0.0), radius: r }
    }

    #[test]
    fn dead_ahead_gap() {
        let cfg = SafetyConfig::default();
        let ego = VehicleState::new(0.0, 0.0, 10.0, 0.0, 0.0);
        let o = obj(1, 15.0 + 1.0 + cfg.ego_half_length, 0.0, 1.0);
        let d = compute_d_safe(&ego, &[o], &straight_lane(), &cfg);
        assert!((d.long - 15.0).abs() < 1e-12);
    }

    #[test]
    fn empty_world_uses_horizon() {
        let cfg = SafetyConfig::default();
        let ego = VehicleState::new(0.0, 0.3, 10.0, 0.0, 0.0);
        let d = compute_d_safe(&ego, &[], &straight_lane(), &cfg);
        assert_eq!(d.long, 200.0);
        assert!((d.lat - 0.6).abs() < 1e-12);
    }

    #[test]
    fn adjacent_object_narrows_lateral_room() {
        let cfg = SafetyConfig::default();
        let ego = VehicleState::new(0.0, 0.0, 10.0, 0.0, 0.0);
        let o = obj(1, 0.5, 1.9, 0.6);
        let d = compute_d_safe(&ego, &[o], &straight_lane(), &cfg);
        assert!((d.left - 0.4).abs() < 1e-12);
        assert!((d.lat - 0.4).abs() < 1e-12);
        assert_eq!(d.long, 200.0);
    }

    #[test]
    fn freeway_speed_with_small_gap_is_unsafe() {
        let cfg = SafetyConfig::default();
        let p = KinematicParams::default();
        let ego = VehicleState::new(0.0, 0.0, 33.5, 0.0, 0.0);
        let o = obj(1, 2.0 + cfg.d_safe_min + 1.0 + cfg.ego_half_length, 0.0, 1.0);
        let a = assess(&ego, &[o], &straight_lane(), &p, &cfg).unwrap();
        assert!((a.d_safe_long - 2.0).abs() < 1e-9);
        assert!((a.d_stop_long - 112.225).abs() < 1e-4);
        assert!(a.delta_long < 0.0 && !a.safe);
    }

    #[test]
    fn stationary_ego() {
        let cfg = SafetyConfig::default();
        let p = KinematicParams::default();
        let ego = VehicleState::new(0.0, 0.0, 0.0, 0.0, 0.0);
        let a = assess(&ego, &[], &straight_lane(), &p, &cfg).unwrap();
        assert_eq!((a.d_stop_long, a.d_stop_lat), (0.0, 0.0));
        assert_eq!(a.safe, a.d_safe_long > 0.0 && a.d_safe_lat > 0.0);
        assert!(a.safe);
    }

    #[test]
    fn delta_identity() {
        let a = SafetyAssessment::from_parts(20.0, 0.5, 10.0, 0.0, 1.0);
        assert_eq!(a.delta_long, 10.0);
        assert!(a.safe);
    }

    #[test]
    fn metrics_thresholds() {
        let ok = vec![FrameSample { cipo: 5.0, lk: 0.2 }; 4];
        assert!(!run_metrics(&ok).unwrap().hazard);
        let mut near = ok.clone();
        near[2].cipo = 0.9;
        let m = run_metrics(&near).unwrap();
        assert!(m.hazard && m.min_cipo == 0.9 && m.hazard_frame == Some(2));
        let mut wide = ok.clone();
        wide[1].lk = 0.81;
        assert!(run_metrics(&wide).unwrap().hazard);
        assert!(run_metrics(&[]).is_err());
    }
}
