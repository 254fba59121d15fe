//! Constant-velocity obstacle prediction and the gap-keeping / lane-centering planner.

use super::perception::Cipo;
use super::registry::{LaneType, ObjectClass};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub cruise_speed: f64,
    /// Deceleration the planner budgets for when sizing the allowed speed.
    pub plan_decel: f64,
    pub reaction_time: f64,
    /// Distance the planner aims to keep to a stopped obstacle.
    pub standoff: f64,
    pub speed_gain: f64,
    pub ttc_emergency: f64,
    pub lateral_accel: f64,
    pub min_lookahead: f64,
    pub lookahead_time: f64,
    pub ego_half_length: f64,
    pub wheelbase: f64,
    pub phi_max: f64,
    pub horizon: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            cruise_speed: 12.0,
            plan_decel: 5.0,
            reaction_time: 0.5,
            standoff: 3.0,
            speed_gain: 0.5,
            ttc_emergency: 1.0,
            lateral_accel: 2.0,
            min_lookahead: 8.0,
            lookahead_time: 1.0,
            ego_half_length: 2.3,
            wheelbase: 2.7,
            phi_max: std::f64::consts::FRAC_PI_4,
            horizon: 200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub pos: f64,
    pub v: f64,
    pub a: f64,
}

/// Next-frame relative position plus absolute speed and acceleration of the obstacle.
pub fn predict(cipo: Option<&Cipo>, vehicle_v: f64, vehicle_a: f64, dt: f64, horizon: f64) -> Prediction {
    match cipo {
        Some(c) => Prediction { pos: c.distance + c.v_rel * dt, v: vehicle_v + c.v_rel, a: vehicle_a + c.a_rel },
        None => Prediction { pos: horizon, v: 0.0, a: 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneEstimate {
    pub lane_type: LaneType,
    pub offset: f64,
    pub heading: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawActuation {
    pub u_throttle: f64,
    pub u_brake: f64,
    pub u_steer: f64,
}

/// Largest speed from which braking at `decel` after `tau` seconds stops within `d`.
pub fn allowed_speed(d: f64, decel: f64, tau: f64) -> f64 {
    let d = d.max(0.0);
    let at = decel * tau;
    (-at + (at * at + 2.0 * decel * d).sqrt()).max(0.0)
}

#[allow(clippy::too_many_arguments)]
pub fn plan(
    pred: &Prediction,
    class: ObjectClass,
    cipo: Option<&Cipo>,
    vehicle_v: f64,
    lane: &LaneEstimate,
    cfg: &PlannerConfig,
) -> RawActuation {
    let mut target = cfg.cruise_speed;
    let mut emergency = false;
    let has_obstacle = class != ObjectClass::None && pred.pos < cfg.horizon;
    if has_obstacle {
        let gap = pred.pos - class.radius() - cfg.ego_half_length;
        target = target.min(allowed_speed(gap - cfg.standoff, cfg.plan_decel, cfg.reaction_time));
        let closing = vehicle_v - pred.v;
        if gap <= cfg.standoff || (closing > 0.0 && gap / closing < cfg.ttc_emergency) {
            emergency = true;
        }
    }
    let lane_ok = lane.lane_type != LaneType::Disappear;
    if lane_ok && lane.curvature.is_finite() {
        let curve_limit = (cfg.lateral_accel / lane.curvature.abs().max(1e-6)).sqrt();
        target = target.min(curve_limit);
    }
    let u_long = if emergency && vehicle_v > 0.0 {
        -1.0
    } else {
        (cfg.speed_gain * (target - vehicle_v)).clamp(-1.0, 1.0)
    };

    let kappa = if lane_ok {
        let ld = cfg.min_lookahead.max(vehicle_v * cfg.lookahead_time);
        lane.curvature + 2.0 * (-lane.offset - lane.heading * ld) / (ld * ld)
    } else if let Some(c) = cipo.filter(|c| c.class == ObjectClass::Vehicle && c.distance > 1.0) {
        2.0 * c.lateral / (c.distance * c.distance)
    } else {
        0.0
    };
    let phi = (cfg.wheelbase * kappa).atan();
    RawActuation {
        u_throttle: u_long.max(0.0),
        u_brake: (-u_long).max(0.0),
        u_steer: (phi / cfg.phi_max).clamp(-1.0, 1.0),
    }
}
