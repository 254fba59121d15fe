//! Discrete PID smoothing with conditional-integration anti-windup and slew limiting.

use crate::util::clamp_or;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self { kp: 0.8, ki: 0.1, kd: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    pub gains: PidGains,
    pub slew: f64,
    pub integral_limit: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self { gains: PidGains::default(), slew: 0.1, integral_limit: 2.0 }
    }
}

/// One PID channel with output range [-1, 1].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidChannel {
    pub integral: f64,
    pub prev_error: f64,
    pub output: f64,
}

impl PidChannel {
    /// Move the output toward `setpoint` given the measured applied value.
    ///
    /// Non-finite inputs leave the channel state untouched.
    pub fn step(&mut self, setpoint: f64, measured: f64, cfg: &ControlConfig) -> f64 {
        let g = cfg.gains;
        let e = setpoint - measured;
        if !e.is_finite() {
            return self.output;
        }
        let tentative = self.integral + e;
        let d = g.kp * e + g.ki * tentative + g.kd * (e - self.prev_error);
        if d.abs() <= cfg.slew {
            self.integral = tentative.clamp(-cfg.integral_limit, cfg.integral_limit);
        }
        let d = g.kp * e + g.ki * self.integral + g.kd * (e - self.prev_error);
        self.output = (self.output + clamp_or(d, -cfg.slew, cfg.slew, 0.0)).clamp(-1.0, 1.0);
        self.prev_error = e;
        self.output
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuationCommand {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
}

impl ActuationCommand {
    /// Split a signed longitudinal command into throttle and brake.
    pub fn from_longitudinal(p: f64, steer: f64) -> Self {
        Self {
            throttle: clamp_or(p.max(0.0), 0.0, 1.0, 0.0),
            brake: clamp_or((-p).max(0.0), 0.0, 1.0, 0.0),
            steer: clamp_or(steer, -1.0, 1.0, 0.0),
        }
    }

    /// Bring possibly corrupted values back into actuator range.
    pub fn sanitized(self, prev_steer: f64) -> Self {
        Self {
            throttle: clamp_or(self.throttle, 0.0, 1.0, 0.0),
            brake: clamp_or(self.brake, 0.0, 1.0, 0.0),
            steer: clamp_or(self.steer, -1.0, 1.0, prev_steer),
        }
    }
}
