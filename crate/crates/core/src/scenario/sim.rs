//! Closed-loop simulation of one scenario with an optional fault plan.

use super::trace::{FrameRecord, Trace};
use super::Scenario;
use crate::ads::control::ActuationCommand;
use crate::ads::sensors::sense;
use crate::ads::{Ads, AdsConfig, InjectionHook};
use crate::fault::{FaultPlan, Injector};
use crate::kinematics::{rk4_step, KinematicParams, VehicleState};
use crate::safety::{assess, compute_d_safe, FrameSample, SafetyConfig};
use crate::util::sha256_hex;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleDynamics {
    pub a_accel_max: f64,
    pub a_brake_max: f64,
    /// Steering actuator rate limit (rad/s).
    pub steer_rate_max: f64,
}

impl Default for VehicleDynamics {
    fn default() -> Self {
        Self { a_accel_max: 3.0, a_brake_max: 5.0, steer_rate_max: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub kinematics: KinematicParams,
    pub dynamics: VehicleDynamics,
    pub safety: SafetyConfig,
    pub ads: AdsConfig,
}

impl SimConfig {
    /// Copy of this config with the scenario's frame period and cruise speed.
    pub fn for_scenario(&self, scenario: &Scenario) -> SimConfig {
        let mut c = *self;
        c.kinematics.dt = scenario.dt;
        c.ads.planner.cruise_speed = scenario.cruise_speed;
        c.ads.planner.wheelbase = c.kinematics.wheelbase;
        c.ads.planner.phi_max = c.kinematics.phi_max;
        c
    }
}

/// Advance the ego one frame under an actuation command.
pub fn vehicle_step(ego: &VehicleState, cmd: &ActuationCommand, dynamics: &VehicleDynamics, params: &KinematicParams) -> VehicleState {
    let dt = params.dt;
    let accel = dynamics.a_accel_max * cmd.throttle - dynamics.a_brake_max * cmd.brake;
    let target = cmd.steer * params.phi_max;
    let rate = ((target - ego.phi) / dt).clamp(-dynamics.steer_rate_max, dynamics.steer_rate_max);
    if accel < 0.0 && ego.v + accel * dt < 0.0 {
        let t0 = ego.v / -accel;
        let mut s = rk4_step(ego, accel, rate, params, t0);
        s.v = 0.0;
        rk4_step(&s, 0.0, rate, params, dt - t0)
    } else {
        rk4_step(ego, accel, rate, params, dt)
    }
}

fn stream_of(id: &str) -> u64 {
    let h = sha256_hex(id.as_bytes());
    u64::from_str_radix(&h[..16], 16).unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Arc<Scenario>,
    cfg: SimConfig,
    ads: Ads,
    ego: VehicleState,
    prev_v: f64,
    scene: usize,
    rng: ChaCha8Rng,
    collided: Option<usize>,
}

impl Simulation {
    pub fn new(scenario: Arc<Scenario>, cfg: &SimConfig, seed: u64) -> Self {
        let cfg = cfg.for_scenario(&scenario);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_of(&scenario.id));
        let ego = scenario.ego;
        Self { ads: Ads::new(cfg.ads), ego, prev_v: ego.v, scene: 0, rng, collided: None, cfg, scenario }
    }

    pub fn scene(&self) -> usize {
        self.scene
    }

    pub fn ego(&self) -> &VehicleState {
        &self.ego
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn collided(&self) -> Option<usize> {
        self.collided
    }

    pub fn done(&self) -> bool {
        self.scene >= self.scenario.scenes || self.collided.is_some()
    }

    /// Simulate the current scene and advance to the next one.
    pub fn step(&mut self, hook: &mut dyn InjectionHook) -> Result<FrameRecord> {
        let sc = &self.scenario;
        let cfg = &self.cfg;
        let k = self.scene;
        let t = k as f64 * sc.dt;
        let world = sc.world_at(t);
        let ds = compute_d_safe(&self.ego, &world, &sc.lane, &cfg.safety);
        let assessment = assess(&self.ego, &world, &sc.lane, &cfg.kinematics, &cfg.safety)?;
        let sample = FrameSample { cipo: ds.long, lk: ds.offset.abs() };
        let frame = sense(&world, &self.ego, self.prev_v, &sc.lane, sc.lane_type, sc.dt, &cfg.ads.sensor, &mut self.rng);
        let curvature = sc.lane.centerline.curvature_at(sc.lane.frenet(self.ego.x, self.ego.y).s);
        let out = self.ads.step(k, frame, sc.dt, hook);
        let record = FrameRecord {
            scene: k,
            ego: self.ego,
            vars: out.vars,
            assessment,
            sample,
            registered: out.registered,
            curvature,
        };
        self.prev_v = self.ego.v;
        self.ego = vehicle_step(&self.ego, &out.command, &cfg.dynamics, &cfg.kinematics);
        self.scene += 1;
        if sample.cipo <= 0.0 {
            self.collided = Some(k);
        }
        Ok(record)
    }

    /// Step until `end` (exclusive) or termination, appending to `frames`.
    pub fn run_until(&mut self, end: usize, hook: &mut dyn InjectionHook, frames: &mut Vec<FrameRecord>) -> Result<()> {
        while self.scene < end && !self.done() {
            frames.push(self.step(hook)?);
        }
        Ok(())
    }
}

pub fn validate_plan(plan: &FaultPlan, scenes: usize) -> Result<()> {
    if plan.duration == 0 || plan.start + plan.duration > scenes {
        return Err(Error::Config(format!("fault window {}+{} exceeds {scenes} scenes", plan.start, plan.duration)));
    }
    Ok(())
}

/// Full closed-loop run from the scenario's initial state.
pub fn run(scenario: &Arc<Scenario>, cfg: &SimConfig, plan: Option<FaultPlan>, seed: u64) -> Result<Trace> {
    scenario.validate()?;
    if let Some(p) = &plan {
        validate_plan(p, scenario.scenes)?;
    }
    let mut sim = Simulation::new(scenario.clone(), cfg, seed);
    let mut inj = Injector::new(plan);
    let mut frames = Vec::with_capacity(scenario.scenes);
    sim.run_until(scenario.scenes, &mut inj, &mut frames)?;
    Ok(Trace::new(scenario.id.clone(), seed, inj.plan().cloned(), frames, inj.log, sim.collided()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coasting_keeps_speed() {
        let p = KinematicParams::default();
        let s = vehicle_step(&VehicleState::new(0.0, 0.0, 10.0, 0.0, 0.0), &ActuationCommand::default(), &VehicleDynamics::default(), &p);
        assert_eq!(s.v, 10.0);
        assert!((s.x - 10.0 * p.dt).abs() < 1e-12);
    }

    #[test]
    fn full_brake_stops_in_expected_time() {
        let p = KinematicParams::default();
        let d = VehicleDynamics::default();
        let cmd = ActuationCommand { throttle: 0.0, brake: 1.0, steer: 0.0 };
        let mut s = VehicleState::new(0.0, 0.0, 10.0, 0.0, 0.0);
        let frames = (10.0 / d.a_brake_max / p.dt).round() as usize;
        for _ in 0..frames {
            s = vehicle_step(&s, &cmd, &d, &p);
        }
        assert!(s.v.abs() < 1e-9);
        assert!((s.x - 10.0).abs() < 1e-6);
        s = vehicle_step(&s, &cmd, &d, &p);
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn steering_is_rate_limited() {
        let p = KinematicParams::default();
        let d = VehicleDynamics::default();
        let cmd = ActuationCommand { throttle: 0.0, brake: 0.0, steer: 1.0 };
        let s = vehicle_step(&VehicleState::new(0.0, 0.0, 10.0, 0.0, 0.0), &cmd, &d, &p);
        assert!((s.phi - d.steer_rate_max * p.dt).abs() < 1e-12);
    }
}
