//! Kinematic bicycle model, RK4 integration and the emergency-stop procedure.

use crate::util::wrap_angle;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
    pub phi: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, v: f64, theta: f64, phi: f64) -> Self {
        Self { x, y, v, theta, phi }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.v.is_finite()
            && self.theta.is_finite()
            && self.phi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicParams {
    pub wheelbase: f64,
    pub a_max: f64,
    pub dt: f64,
    pub phi_max: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        Self { wheelbase: 2.7, a_max: 5.0, dt: 1.0 / 7.5, phi_max: FRAC_PI_4 }
    }
}

impl KinematicParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wheelbase", self.wheelbase),
            ("a_max", self.a_max),
            ("dt", self.dt),
            ("phi_max", self.phi_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Rates of the planar pose: (dx/dt, dy/dt, dθ/dt).
pub fn motion_derivatives(state: &VehicleState, params: &KinematicParams) -> (f64, f64, f64) {
    let v = state.v;
    (v * state.theta.cos(), v * state.theta.sin(), v * state.phi.tan() / params.wheelbase)
}

fn deriv(s: [f64; 5], accel: f64, steer_rate: f64, wheelbase: f64) -> [f64; 5] {
    let [_, _, theta, v, phi] = s;
    [v * theta.cos(), v * theta.sin(), v * phi.tan() / wheelbase, accel, steer_rate]
}

fn axpy(a: [f64; 5], k: [f64; 5], h: f64) -> [f64; 5] {
    let mut out = a;
    for i in 0..5 {
        out[i] += h * k[i];
    }
    out
}

/// One classical RK4 step over (x, y, θ, v, φ) with constant inputs.
pub fn rk4_step(
    state: &VehicleState,
    accel: f64,
    steer_rate: f64,
    params: &KinematicParams,
    h: f64,
) -> VehicleState {
    let s = [state.x, state.y, state.theta, state.v, state.phi];
    let l = params.wheelbase;
    let k1 = deriv(s, accel, steer_rate, l);
    let k2 = deriv(axpy(s, k1, h / 2.0), accel, steer_rate, l);
    let k3 = deriv(axpy(s, k2, h / 2.0), accel, steer_rate, l);
    let k4 = deriv(axpy(s, k3, h), accel, steer_rate, l);
    let mut n = s;
    for i in 0..5 {
        n[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    VehicleState {
        x: n[0],
        y: n[1],
        theta: wrap_angle(n[2]),
        v: n[3].max(0.0),
        phi: n[4].clamp(-params.phi_max, params.phi_max),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopResult {
    pub t_stop: f64,
    pub d_stop_long: f64,
    pub d_stop_lat: f64,
    pub path: Vec<(f64, f64)>,
}

impl StopResult {
    pub fn end(&self) -> (f64, f64) {
        *self.path.last().expect("path always holds the start point")
    }

    pub fn magnitude(&self) -> f64 {
        self.d_stop_long.hypot(self.d_stop_lat)
    }
}

/// Emergency stop with the default integration step `dt / 10`.
pub fn emergency_stop(initial: &VehicleState, params: &KinematicParams) -> Result<StopResult> {
    emergency_stop_with_step(initial, params, params.dt / 10.0)
}

/// Brake at `a_max` with frozen steering until the vehicle halts.
///
/// The halt time is known exactly (`v0 / a_max`), so the maneuver is split into
/// `ceil(t_stop / h)` equal steps that land on it without a partial step.
pub fn emergency_stop_with_step(
    initial: &VehicleState,
    params: &KinematicParams,
    h: f64,
) -> Result<StopResult> {
    if !initial.is_finite() {
        return Err(Error::Domain(format!("non-finite vehicle state {initial:?}")));
    }
    params.validate()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("integration step must be positive, got {h}")));
    }
    if initial.v < 0.0 {
        return Err(Error::Domain(format!("negative speed {}", initial.v)));
    }
    let start = VehicleState {
        phi: initial.phi.clamp(-params.phi_max, params.phi_max),
        ..*initial
    };
    let t_stop = start.v / params.a_max;
    let mut path = vec![(start.x, start.y)];
    if t_stop == 0.0 {
        return Ok(StopResult { t_stop, d_stop_long: 0.0, d_stop_lat: 0.0, path });
    }
    let n = (t_stop / h).ceil().max(1.0) as usize;
    let h_eff = t_stop / n as f64;
    let mut s = start;
    for _ in 0..n {
        s = rk4_step(&s, -params.a_max, 0.0, params, h_eff);
        path.push((s.x, s.y));
    }
    let (dx, dy) = (s.x - start.x, s.y - start.y);
    let (c, sn) = (start.theta.cos(), start.theta.sin());
    Ok(StopResult {
        t_stop,
        d_stop_long: dx * c + dy * sn,
        d_stop_lat: -dx * sn + dy * c,
        path,
    })
}
