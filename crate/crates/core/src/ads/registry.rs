//! Named injectable variables of the ADS pipeline.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub u8);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn def(self) -> &'static VarDef {
        &REGISTRY[self.index()]
    }

    pub fn name(self) -> &'static str {
        self.def().name
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Sensor,
    Perception,
    Inertial,
    Prediction,
    Planning,
    Control,
}

impl Module {
    pub const ALL: [Module; 6] = [
        Module::Sensor,
        Module::Perception,
        Module::Inertial,
        Module::Prediction,
        Module::Planning,
        Module::Control,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Module::Sensor => "sensor",
            Module::Perception => "perception",
            Module::Inertial => "inertial",
            Module::Prediction => "prediction",
            Module::Planning => "planning",
            Module::Control => "control",
        }
    }
}

/// Points in the per-frame pipeline where freshly produced variables can be corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Inertial,
    Sensor,
    Perception,
    Prediction,
    Planning,
    PidMeasure,
    PidOutput,
    Actuation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarKind {
    Bounded { lo: f64, hi: f64 },
    Unbounded,
    Categorical(&'static [&'static str]),
}

impl VarKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, VarKind::Categorical(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarDef {
    pub name: &'static str,
    pub module: Module,
    pub stage: Stage,
    pub kind: VarKind,
}

pub const OBJECT_CLASSES: &[&str] = &["disappear", "pedestrian", "vehicle", "cyclist"];
pub const LANE_TYPES: &[&str] = &["disappear", "solid", "dashed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectClass {
    None = 0,
    Pedestrian = 1,
    Vehicle = 2,
    Cyclist = 3,
}

impl ObjectClass {
    pub fn from_code(c: f64) -> Self {
        match c.round() as i64 {
            1 => ObjectClass::Pedestrian,
            2 => ObjectClass::Vehicle,
            3 => ObjectClass::Cyclist,
            _ => ObjectClass::None,
        }
    }

    pub fn code(self) -> f64 {
        self as u8 as f64
    }

    /// Nominal bounding radius the ADS assumes for the class.
    pub fn radius(self) -> f64 {
        match self {
            ObjectClass::None => 0.0,
            ObjectClass::Pedestrian => 0.4,
            ObjectClass::Cyclist => 0.6,
            ObjectClass::Vehicle => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaneType {
    Disappear = 0,
    Solid = 1,
    Dashed = 2,
}

impl LaneType {
    pub fn from_code(c: f64) -> Self {
        match c.round() as i64 {
            1 => LaneType::Solid,
            2 => LaneType::Dashed,
            _ => LaneType::Disappear,
        }
    }

    pub fn code(self) -> f64 {
        self as u8 as f64
    }
}

macro_rules! registry {
    ($($id:ident = $idx:literal : $name:literal, $module:ident, $stage:ident, $kind:expr;)*) => {
        pub mod var {
            use super::VarId;
            $(pub const $id: VarId = VarId($idx);)*
        }
        pub static REGISTRY: [VarDef; N_VARS] = [
            $(VarDef { name: $name, module: Module::$module, stage: Stage::$stage, kind: $kind },)*
        ];
    };
}

pub const N_VARS: usize = 25;

const UNIT: VarKind = VarKind::Bounded { lo: 0.0, hi: 1.0 };
const SIGNED: VarKind = VarKind::Bounded { lo: -1.0, hi: 1.0 };
const CLASS: VarKind = VarKind::Categorical(OBJECT_CLASSES);

registry! {
    CAMERA_DISTANCE = 0: "sensor.camera_object_distance", Sensor, Sensor, VarKind::Unbounded;
    CAMERA_CLASS = 1: "sensor.camera_object_class", Sensor, Sensor, CLASS;
    LIDAR_DISTANCE = 2: "sensor.lidar_object_distance", Sensor, Sensor, VarKind::Unbounded;
    LIDAR_CLASS = 3: "sensor.lidar_object_class", Sensor, Sensor, CLASS;
    FUSED_DISTANCE = 4: "perception.sensor_fused_obstacle_distance", Perception, Perception, VarKind::Unbounded;
    FUSED_CLASS = 5: "perception.sensor_fused_obstacle_class", Perception, Perception, CLASS;
    LANE_TYPE = 6: "perception.lane_type", Perception, Perception, VarKind::Categorical(LANE_TYPES);
    LANE_WIDTH = 7: "perception.lane_width", Perception, Perception, VarKind::Unbounded;
    LANE_OFFSET = 8: "perception.lane_offset", Perception, Perception, VarKind::Unbounded;
    LANE_HEADING = 9: "perception.lane_heading", Perception, Perception, VarKind::Unbounded;
    LANE_CURVATURE = 10: "perception.lane_curvature", Perception, Perception, VarKind::Unbounded;
    VEHICLE_POS = 11: "inertial.vehicle_pos", Inertial, Inertial, VarKind::Unbounded;
    VEHICLE_V = 12: "inertial.vehicle_v", Inertial, Inertial, VarKind::Unbounded;
    VEHICLE_A = 13: "inertial.vehicle_a", Inertial, Inertial, VarKind::Unbounded;
    OBSTACLE_POS = 14: "prediction.obstacle_pos", Prediction, Prediction, VarKind::Unbounded;
    OBSTACLE_V = 15: "prediction.obstacle_v", Prediction, Prediction, VarKind::Unbounded;
    OBSTACLE_A = 16: "prediction.obstacle_a", Prediction, Prediction, VarKind::Unbounded;
    U_THROTTLE = 17: "planning.u_throttle", Planning, Planning, UNIT;
    U_BRAKE = 18: "planning.u_brake", Planning, Planning, UNIT;
    U_STEER = 19: "planning.u_steer", Planning, Planning, SIGNED;
    PID_MEASURED = 20: "control.pid_measured_value", Control, PidMeasure, SIGNED;
    PID_OUTPUT = 21: "control.pid_output", Control, PidOutput, SIGNED;
    THROTTLE = 22: "control.throttle", Control, Actuation, UNIT;
    BRAKE = 23: "control.brake", Control, Actuation, UNIT;
    STEER = 24: "control.steer", Control, Actuation, SIGNED;
}

pub fn all_vars() -> impl Iterator<Item = VarId> {
    (0..N_VARS as u8).map(VarId)
}

pub fn lookup(name: &str) -> Option<VarId> {
    REGISTRY.iter().position(|d| d.name == name).map(|i| VarId(i as u8))
}

/// Current value of every registered variable. Categoricals hold their category index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vars(pub [f64; N_VARS]);

impl Default for Vars {
    fn default() -> Self {
        Vars([0.0; N_VARS])
    }
}

impl std::ops::Index<VarId> for Vars {
    type Output = f64;
    fn index(&self, id: VarId) -> &f64 {
        &self.0[id.index()]
    }
}

impl std::ops::IndexMut<VarId> for Vars {
    fn index_mut(&mut self, id: VarId) -> &mut f64 {
        &mut self.0[id.index()]
    }
}

/// Render a value for the delimited trace format.
pub fn format_value(id: VarId, v: f64) -> String {
    match id.def().kind {
        VarKind::Categorical(names) => {
            let i = v.round();
            if v.is_finite() && i >= 0.0 && (i as usize) < names.len() {
                names[i as usize].to_string()
            } else {
                format!("{v}")
            }
        }
        _ => format!("{v}"),
    }
}

pub fn parse_value(id: VarId, s: &str) -> Option<f64> {
    if let VarKind::Categorical(names) = id.def().kind {
        if let Some(i) = names.iter().position(|n| *n == s) {
            return Some(i as f64);
        }
    }
    s.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_indexed() {
        for (i, d) in REGISTRY.iter().enumerate() {
            assert_eq!(lookup(d.name), Some(VarId(i as u8)));
        }
        assert_eq!(var::STEER.name(), "control.steer");
        assert_eq!(lookup("control.nothing"), None);
    }

    #[test]
    fn categorical_round_trip() {
        let s = format_value(var::FUSED_CLASS, 3.0);
        assert_eq!(s, "cyclist");
        assert_eq!(parse_value(var::FUSED_CLASS, &s), Some(3.0));
        assert_eq!(parse_value(var::BRAKE, "0.25"), Some(0.25));
    }
}
