//! Emulated camera, lidar, lane camera and inertial unit: ground truth plus seeded noise.

use super::registry::{LaneType, ObjectClass};
use crate::kinematics::VehicleState;
use crate::safety::{Lane, ObjectKind, WorldObject};
use crate::util::wrap_angle;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub range: f64,
    pub max_lateral: f64,
    pub camera_sigma: f64,
    pub camera_lat_sigma: f64,
    pub camera_confidence: f64,
    pub lidar_sigma: f64,
    pub lidar_lat_sigma: f64,
    pub lidar_confidence: f64,
    pub lane_offset_sigma: f64,
    pub lane_heading_sigma: f64,
    pub lane_curvature_sigma: f64,
    pub lane_width_sigma: f64,
    pub imu_v_sigma: f64,
    pub imu_a_sigma: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            range: 150.0,
            max_lateral: 30.0,
            camera_sigma: 0.3,
            camera_lat_sigma: 0.1,
            camera_confidence: 0.8,
            lidar_sigma: 0.1,
            lidar_lat_sigma: 0.05,
            lidar_confidence: 0.9,
            lane_offset_sigma: 0.01,
            lane_heading_sigma: 0.0003,
            lane_curvature_sigma: 0.0001,
            lane_width_sigma: 0.02,
            imu_v_sigma: 0.0,
            imu_a_sigma: 0.0,
        }
    }
}

impl SensorConfig {
    pub fn noiseless() -> Self {
        Self {
            camera_sigma: 0.0,
            camera_lat_sigma: 0.0,
            lidar_sigma: 0.0,
            lidar_lat_sigma: 0.0,
            lane_offset_sigma: 0.0,
            lane_heading_sigma: 0.0,
            lane_curvature_sigma: 0.0,
            lane_width_sigma: 0.0,
            imu_v_sigma: 0.0,
            imu_a_sigma: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub id: u32,
    /// Along-lane center distance, ahead of the ego.
    pub distance: f64,
    /// Bearing in the lane frame; `distance * tan(bearing)` is the relative lateral offset.
    pub bearing: f64,
    pub class: ObjectClass,
    pub confidence: f64,
}

impl Observation {
    pub fn lateral(&self) -> f64 {
        self.distance * self.bearing.tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneObservation {
    pub lane_type: LaneType,
    pub width: f64,
    pub offset: f64,
    pub heading: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialMeasurement {
    pub pos: f64,
    pub v: f64,
    pub a: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub camera: Vec<Observation>,
    pub lidar: Vec<Observation>,
    pub lane: LaneObservation,
    pub inertial: InertialMeasurement,
}

pub fn class_of(kind: ObjectKind) -> ObjectClass {
    match kind {
        ObjectKind::Vehicle => ObjectClass::Vehicle,
        ObjectKind::Pedestrian => ObjectClass::Pedestrian,
        ObjectKind::Cyclist => ObjectClass::Cyclist,
        ObjectKind::LaneBoundary => ObjectClass::None,
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    n * sigma
}

/// Observe the ground truth.
///
/// The number of random draws per call depends only on `world.len()`, so two runs
/// over the same script consume their noise streams in lockstep.
#[allow(clippy::too_many_arguments)]
pub fn sense<R: Rng + ?Sized>(
    world: &[WorldObject],
    ego: &VehicleState,
    prev_v: f64,
    lane: &Lane,
    lane_type: LaneType,
    dt: f64,
    cfg: &SensorConfig,
    rng: &mut R,
) -> SensorFrame {
    let fe = lane.frenet(ego.x, ego.y);
    let mut camera = Vec::new();
    let mut lidar = Vec::new();
    for o in world {
        let noise = [
            gauss(rng, cfg.camera_sigma),
            gauss(rng, cfg.camera_lat_sigma),
            gauss(rng, cfg.lidar_sigma),
            gauss(rng, cfg.lidar_lat_sigma),
        ];
        if o.kind == ObjectKind::LaneBoundary {
            continue;
        }
        let fo = lane.frenet(o.position.0, o.position.1);
        let ds = fo.s - fe.s;
        let lat = fo.d - fe.d;
        if ds <= 0.0 || ds > cfg.range || lat.abs() > cfg.max_lateral {
            continue;
        }
        let class = class_of(o.kind);
        let obs = |dn: f64, ln: f64, confidence: f64| {
            let distance = (ds + dn).max(0.0);
            Observation { id: o.id, distance, bearing: (lat + ln).atan2(distance), class, confidence }
        };
        camera.push(obs(noise[0], noise[1], cfg.camera_confidence));
        lidar.push(obs(noise[2], noise[3], cfg.lidar_confidence));
    }
    let lane_obs = LaneObservation {
        lane_type,
        width: 2.0 * lane.half_width + gauss(rng, cfg.lane_width_sigma),
        offset: fe.d + gauss(rng, cfg.lane_offset_sigma),
        heading: wrap_angle(ego.theta - fe.heading) + gauss(rng, cfg.lane_heading_sigma),
        curvature: lane.centerline.curvature_at(fe.s) + gauss(rng, cfg.lane_curvature_sigma),
    };
    let inertial = InertialMeasurement {
        pos: fe.s,
        v: ego.v + gauss(rng, cfg.imu_v_sigma),
        a: (ego.v - prev_v) / dt + gauss(rng, cfg.imu_a_sigma),
        theta: ego.theta,
    };
    SensorFrame { camera, lidar, lane: lane_obs, inertial }
}
