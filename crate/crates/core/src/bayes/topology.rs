//! Three-slice network topology derived from the ADS data flow.

use super::net::Dag;
use crate::ads::registry::{lookup, var, VarId, VarKind};
use crate::kinematics::VehicleState;
use crate::scenario::FrameRecord;
use crate::util::{sha256_hex, wrap_angle};
use crate::{Error, Result};

pub const SLICES: usize = 3;
pub const PREV: usize = 0;
pub const CUR: usize = 1;
pub const NEXT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    V,
    Theta,
    Phi,
}

impl Truth {
    pub const ALL: [Truth; 3] = [Truth::V, Truth::Theta, Truth::Phi];

    pub fn name(self) -> &'static str {
        match self {
            Truth::V => "ego.v",
            Truth::Theta => "ego.theta",
            Truth::Phi => "ego.phi",
        }
    }

    fn of(self, s: &VehicleState) -> f64 {
        match self {
            Truth::V => s.v,
            Truth::Theta => s.theta,
            Truth::Phi => s.phi,
        }
    }
}

/// What a slot's value is read from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binding {
    Var(VarId),
    /// 1 when the categorical variable holds this category, else 0. Category 0 is the baseline.
    Indicator(VarId, u8),
    Truth(Truth),
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: String,
    pub binding: Binding,
}

/// Per-slice slots with intra-slice parents and parents in the previous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    slots: Vec<Slot>,
    intra: Vec<Vec<usize>>,
    temporal: Vec<Vec<usize>>,
    dag: Dag,
}

impl Topology {
    pub fn new(slots: Vec<Slot>, intra: Vec<Vec<usize>>, temporal: Vec<Vec<usize>>) -> Result<Self> {
        let w = slots.len();
        if intra.len() != w || temporal.len() != w {
            return Err(Error::Model("parent lists do not match the slot count".into()));
        }
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Model(format!("duplicate slot `{}`", s.name)));
            }
        }
        let mut parents = Vec::with_capacity(SLICES * w);
        for t in 0..SLICES {
            for s in 0..w {
                let mut p: Vec<usize> = intra[s].iter().map(|&q| t * w + q).collect();
                if t > 0 {
                    p.extend(temporal[s].iter().map(|&q| (t - 1) * w + q));
                }
                parents.push(p);
            }
        }
        let dag = Dag::new(parents)?;
        Ok(Self { slots, intra, temporal, dag })
    }

    /// The ADS network: registry variables (categoricals as indicator blocks) plus true ego speed, heading and steering angle.
    pub fn ads() -> Self {
        let mut b = Builder::default();
        for v in crate::ads::registry::all_vars() {
            match v.def().kind {
                VarKind::Categorical(names) => {
                    for (c, n) in names.iter().enumerate().skip(1) {
                        b.slot(format!("{}={}", v.name(), n), Binding::Indicator(v, c as u8));
                    }
                }
                _ => b.slot(v.name().to_string(), Binding::Var(v)),
            }
        }
        for t in Truth::ALL {
            b.slot(t.name().to_string(), Binding::Truth(t));
        }
        use var::*;
        let sensors = [CAMERA_DISTANCE, CAMERA_CLASS, LIDAR_DISTANCE, LIDAR_CLASS];
        let lanes = [LANE_TYPE, LANE_WIDTH, LANE_OFFSET, LANE_HEADING, LANE_CURVATURE];

        b.intra(FUSED_DISTANCE, &[CAMERA_DISTANCE.into(), LIDAR_DISTANCE.into()]);
        b.intra(FUSED_CLASS, &[CAMERA_CLASS.into(), LIDAR_CLASS.into()]);
        b.intra(VEHICLE_V, &[Truth::V.into()]);
        b.intra(OBSTACLE_V, &[VEHICLE_V.into(), FUSED_DISTANCE.into(), FUSED_CLASS.into()]);
        b.intra(OBSTACLE_POS, &[FUSED_DISTANCE.into(), FUSED_CLASS.into(), VEHICLE_V.into(), OBSTACLE_V.into()]);
        b.intra(OBSTACLE_A, &[OBSTACLE_V.into()]);
        let long_inputs: Vec<Node> =
            [OBSTACLE_POS, OBSTACLE_V, OBSTACLE_A, FUSED_CLASS, VEHICLE_V, VEHICLE_A, LANE_CURVATURE].map(Node::from).to_vec();
        b.intra(U_THROTTLE, &long_inputs);
        b.intra(U_BRAKE, &long_inputs);
        b.intra(U_STEER, &[LANE_TYPE.into(), LANE_OFFSET.into(), LANE_HEADING.into(), LANE_CURVATURE.into()]);
        b.intra(PID_OUTPUT, &[U_THROTTLE.into(), U_BRAKE.into(), PID_MEASURED.into()]);
        b.intra(THROTTLE, &[PID_OUTPUT.into()]);
        b.intra(BRAKE, &[PID_OUTPUT.into()]);
        b.intra(STEER, &[U_STEER.into()]);

        for v in sensors.into_iter().chain(lanes) {
            b.temporal_self(v);
        }
        b.temporal(LANE_OFFSET, &[LANE_HEADING.into()]);
        b.temporal(LANE_HEADING, &[Truth::Phi.into(), LANE_CURVATURE.into()]);
        b.temporal(VEHICLE_POS, &[VEHICLE_POS.into(), Truth::V.into()]);
        b.temporal(VEHICLE_A, &[THROTTLE.into(), BRAKE.into()]);
        b.temporal(OBSTACLE_V, &[OBSTACLE_V.into(), FUSED_DISTANCE.into()]);
        b.temporal(OBSTACLE_A, &[OBSTACLE_A.into(), OBSTACLE_V.into()]);
        b.temporal(PID_MEASURED, &[THROTTLE.into(), BRAKE.into()]);
        b.temporal(PID_OUTPUT, &[PID_OUTPUT.into()]);
        b.temporal(STEER, &[STEER.into()]);
        b.temporal(Truth::V, &[Truth::V.into(), THROTTLE.into(), BRAKE.into()]);
        b.temporal(Truth::Theta, &[Truth::Theta.into(), Truth::Phi.into(), Truth::V.into()]);
        b.temporal(Truth::Phi, &[Truth::Phi.into(), STEER.into()]);
        b.build().expect("the ADS data flow is acyclic")
    }

    pub fn width(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        SLICES * self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn intra(&self, slot: usize) -> &[usize] {
        &self.intra[slot]
    }

    pub fn temporal(&self, slot: usize) -> &[usize] {
        &self.temporal[slot]
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn node(&self, slice: usize, slot: usize) -> usize {
        slice * self.width() + slot
    }

    pub fn slot_of(&self, node: usize) -> (usize, usize) {
        (node / self.width(), node % self.width())
    }

    pub fn node_name(&self, node: usize) -> String {
        let (t, s) = self.slot_of(node);
        let lag = ["k-1", "k", "k+1"][t];
        format!("{}[{lag}]", self.slots[s].name)
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }

    /// Slots holding a registry variable: one, or the indicator block of a categorical.
    pub fn slots_for(&self, v: VarId) -> Vec<usize> {
        (0..self.width())
            .filter(|&i| matches!(self.slots[i].binding, Binding::Var(x) | Binding::Indicator(x, _) if x == v))
            .collect()
    }

    pub fn truth_slot(&self, t: Truth) -> Option<usize> {
        self.slots.iter().position(|s| s.binding == Binding::Truth(t))
    }

    /// Slice-0 nodes each have their own CPD; slices 1 and 2 share one per slot.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let w = self.width();
        (0..w).map(|s| vec![s]).chain((0..w).map(|s| vec![w + s, 2 * w + s])).collect()
    }

    pub fn digest(&self) -> String {
        let mut text = String::new();
        for (i, s) in self.slots.iter().enumerate() {
            let names = |ps: &[usize]| ps.iter().map(|&p| self.slots[p].name.as_str()).collect::<Vec<_>>().join(",");
            text.push_str(&format!("{}|{}|{}\n", s.name, names(&self.intra[i]), names(&self.temporal[i])));
        }
        sha256_hex(text.as_bytes())
    }

    /// Slot values of one recorded frame; unbound slots are NaN.
    pub fn encode(&self, f: &FrameRecord) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| match s.binding {
                Binding::Var(v) => f.vars[v],
                Binding::Indicator(v, c) => (f.vars[v].round() == c as f64) as u8 as f64,
                Binding::Truth(t) => t.of(&f.ego),
                Binding::Free => f64::NAN,
            })
            .collect()
    }

    /// Concatenated slot values of three consecutive frames, with heading unwrapped around the middle frame.
    pub fn encode_triple(&self, frames: &[FrameRecord]) -> Vec<f64> {
        let mut row: Vec<f64> = frames.iter().flat_map(|f| self.encode(f)).collect();
        if let Some(th) = self.truth_slot(Truth::Theta) {
            let mid = row[self.node(CUR, th)];
            for t in [PREV, NEXT] {
                let i = self.node(t, th);
                row[i] = mid + wrap_angle(row[i] - mid);
            }
        }
        row
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Var(VarId),
    Truth(Truth),
}

impl From<VarId> for Node {
    fn from(v: VarId) -> Self {
        Node::Var(v)
    }
}

impl From<Truth> for Node {
    fn from(t: Truth) -> Self {
        Node::Truth(t)
    }
}

#[derive(Default)]
struct Builder {
    slots: Vec<Slot>,
    intra: Vec<Vec<usize>>,
    temporal: Vec<Vec<usize>>,
}

impl Builder {
    fn slot(&mut self, name: String, binding: Binding) {
        self.slots.push(Slot { name, binding });
        self.intra.push(Vec::new());
        self.temporal.push(Vec::new());
    }

    fn expand(&self, n: Node) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| match (n, self.slots[i].binding) {
                (Node::Var(v), Binding::Var(x) | Binding::Indicator(x, _)) => v == x,
                (Node::Truth(t), Binding::Truth(x)) => t == x,
                _ => false,
            })
            .collect()
    }

    fn intra(&mut self, child: impl Into<Node>, parents: &[Node]) {
        let ps: Vec<usize> = parents.iter().flat_map(|&p| self.expand(p)).collect();
        for c in self.expand(child.into()) {
            self.intra[c].extend(&ps);
        }
    }

    fn temporal(&mut self, child: impl Into<Node>, parents: &[Node]) {
        let ps: Vec<usize> = parents.iter().flat_map(|&p| self.expand(p)).collect();
        for c in self.expand(child.into()) {
            for &p in &ps {
                if !self.temporal[c].contains(&p) {
                    self.temporal[c].push(p);
                }
            }
        }
    }

    /// Each slot of the variable depends on its own previous value.
    fn temporal_self(&mut self, v: VarId) {
        for c in self.expand(Node::Var(v)) {
            self.temporal[c].push(c);
        }
    }

    fn build(self) -> Result<Topology> {
        Topology::new(self.slots, self.intra, self.temporal)
    }
}

/// Registry variable behind a slot name such as `perception.lane_type=solid`.
pub fn variable_of(slot_name: &str) -> Option<VarId> {
    lookup(slot_name.split('=').next()?)
}
