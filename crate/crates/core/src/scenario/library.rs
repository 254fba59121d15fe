//! Built-in scenarios: three freeway (A1-A3) and three urban (A4-A6) layouts.

use super::{ActorScript, Scenario};
use crate::ads::registry::LaneType;
use crate::geometry::{Polyline, RoadBuilder};
use crate::kinematics::VehicleState;
use crate::safety::{Lane, ObjectKind};

pub const FREEWAY_SCENES: usize = 500;
pub const URBAN_SCENES: usize = 2400;
pub const DT: f64 = 1.0 / 7.5;
const LANE_HALF_WIDTH: f64 = 1.8;
const ADJACENT: f64 = 3.6;
const SAMPLE: f64 = 0.25;

/// Piecewise-constant-acceleration speed profile starting at `t0` from `s0` with speed `v0`.
#[derive(Debug, Clone)]
struct Profile {
    t0: f64,
    s0: f64,
    v0: f64,
    /// (duration, acceleration) pieces; the last speed is held afterwards.
    pieces: Vec<(f64, f64)>,
}

impl Profile {
    fn new(t0: f64, s0: f64, v0: f64) -> Self {
        Self { t0, s0, v0, pieces: Vec::new() }
    }

    fn hold(mut self, duration: f64) -> Self {
        self.pieces.push((duration, 0.0));
        self
    }

    /// Change speed to `v` at acceleration magnitude `a`.
    fn ramp_to(mut self, v: f64, a: f64) -> Self {
        let cur = self.speed_at(f64::INFINITY);
        let dur = (v - cur).abs() / a;
        if dur > 0.0 {
            self.pieces.push((dur, (v - cur).signum() * a));
        }
        self
    }

    fn speed_at(&self, t: f64) -> f64 {
        let mut v = self.v0;
        let mut tau = t - self.t0;
        for &(d, a) in &self.pieces {
            let step = d.min(tau.max(0.0));
            v += a * step;
            tau -= d;
        }
        v
    }

    fn s_at(&self, t: f64) -> f64 {
        let mut s = self.s0;
        let mut v = self.v0;
        let mut tau = t - self.t0;
        for &(d, a) in &self.pieces {
            if tau <= 0.0 {
                break;
            }
            let step = d.min(tau);
            s += v * step + 0.5 * a * step * step;
            v += a * step;
            tau -= step;
        }
        s + v * tau.max(0.0)
    }
}

/// Sample an actor whose lane coordinates are given by `f(t) -> (s, d)` on `[t0, t1]`.
fn scripted(road: &Polyline, kind: ObjectKind, radius: f64, t0: f64, t1: f64, f: impl Fn(f64) -> (f64, f64)) -> ActorScript {
    let n = ((t1 - t0) / SAMPLE).ceil().max(1.0) as usize;
    let waypoints = (0..=n)
        .map(|i| {
            let t = if i == n { t1 } else { t0 + i as f64 * SAMPLE };
            let (s, d) = f(t);
            let (x, y) = road.point_at(s, d);
            (t, x, y)
        })
        .collect();
    ActorScript { kind, radius, waypoints }
}

fn ramp(t: f64, t0: f64, t1: f64, a: f64, b: f64) -> f64 {
    if t <= t0 {
        a
    } else if t >= t1 {
        b
    } else {
        a + (b - a) * (t - t0) / (t1 - t0)
    }
}

fn scenario(id: &str, scenes: usize, cruise: f64, road: Polyline, ego_s: f64, actors: Vec<ActorScript>) -> Scenario {
    let (x, y) = road.point_at(ego_s, 0.0);
    let theta = road.heading_at(ego_s);
    Scenario {
        id: id.to_string(),
        scenes,
        dt: DT,
        cruise_speed: cruise,
        lane_type: LaneType::Dashed,
        ego: VehicleState::new(x, y, cruise, theta, 0.0),
        lane: Lane { centerline: road, half_width: LANE_HALF_WIDTH },
        actors,
    }
}

fn straight_road(length: f64) -> Polyline {
    RoadBuilder::new(0.0, 0.0, 0.0).straight(length).build().expect("road")
}

fn freeway_end() -> f64 {
    FREEWAY_SCENES as f64 * DT
}

fn urban_end() -> f64 {
    URBAN_SCENES as f64 * DT
}

/// A1: steady lead vehicle that slows down and speeds up again.
pub fn a1_lead_follow() -> Scenario {
    let road = straight_road(3000.0);
    let lead = Profile::new(0.0, 150.0, 25.0).hold(20.0).ramp_to(20.0, 0.5).hold(10.0).ramp_to(25.0, 1.0);
    let actors = vec![scripted(&road, ObjectKind::Vehicle, 1.0, 0.0, freeway_end(), |t| (lead.s_at(t), 0.0))];
    scenario("A1", FREEWAY_SCENES, 30.0, road, 50.0, actors)
}

/// A2: a slower vehicle in the adjacent lane cuts in ahead of the ego.
pub fn a2_cut_in() -> Scenario {
    let road = straight_road(3000.0);
    let tv = Profile::new(0.0, 150.0, 27.0).hold(30.0).ramp_to(33.0, 1.5);
    let actors = vec![scripted(&road, ObjectKind::Vehicle, 1.0, 0.0, freeway_end(), |t| {
        (tv.s_at(t), ramp(t, 10.0, 13.0, ADJACENT, 0.0))
    })];
    scenario("A2", FREEWAY_SCENES, 30.0, road, 50.0, actors)
}

/// A3: a three-vehicle platoon that brakes and recovers.
pub fn a3_platoon() -> Scenario {
    let road = straight_road(3000.0);
    let actors = (0..3)
        .map(|i| {
            let p = Profile::new(0.0, 160.0 + 30.0 * i as f64, 27.0).hold(15.0).ramp_to(21.0, 1.0).hold(9.0).ramp_to(27.0, 1.0);
            scripted(&road, ObjectKind::Vehicle, 1.0, 0.0, freeway_end(), move |t| (p.s_at(t), 0.0))
        })
        .collect();
    scenario("A3", FREEWAY_SCENES, 30.0, road, 50.0, actors)
}

/// A4: urban road where every other vehicle stays in the opposite lane.
pub fn a4_opposite_traffic() -> Scenario {
    let road = straight_road(4400.0);
    let mut actors = Vec::new();
    let mut t = 5.0;
    while t + 20.0 < urban_end() {
        let s0 = 50.0 + 12.0 * t + 170.0;
        let t0 = t;
        actors.push(scripted(&road, ObjectKind::Vehicle, 1.0, t0, t0 + 20.0, move |u| (s0 - 10.0 * (u - t0), ADJACENT)));
        t += 15.0;
    }
    scenario("A4", URBAN_SCENES, 12.0, road, 50.0, actors)
}

pub const A5_SPAWN_GAP: f64 = 25.5;
/// Golden ego arc length at the two pedestrian event times.
pub const A5_EGO_S: [f64; 2] = [770.0, 2065.73];
pub const A5_EVENT_T: [f64; 2] = [60.0, 180.0];

/// A5: pedestrians step into the lane from behind an occlusion, stand, then leave the road.
pub fn a5_pedestrian() -> Scenario {
    a5_with(A5_SPAWN_GAP, A5_EGO_S)
}

pub fn a5_with(gap: f64, ego_s: [f64; 2]) -> Scenario {
    let road = straight_road(4400.0);
    let actors = A5_EVENT_T
        .iter()
        .zip(ego_s)
        .map(|(&t0, s)| {
            let s = s + gap;
            scripted(&road, ObjectKind::Pedestrian, 0.4, t0, t0 + 10.0, move |t| (s, ramp(t, t0, t0 + 1.0, -1.0, -0.4)))
        })
        .collect();
    scenario("A5", URBAN_SCENES, 12.0, road, 50.0, actors)
}

pub const A6_TURN_START: f64 = 700.0;
pub const A6_RADIUS: f64 = 40.0;
/// Where the stopped vehicle waits inside the first turn, and when it becomes visible.
pub const A6_STOPPED_S: f64 = 760.0;
pub const A6_REVEAL_T: f64 = 66.0;
const A6_WAIT: f64 = 8.0;

pub fn a6_road() -> Polyline {
    let k = 1.0 / A6_RADIUS;
    RoadBuilder::new(0.0, 0.0, 0.0)
        .straight(A6_TURN_START)
        .clothoid(30.0, k)
        .arc(40.0)
        .clothoid(30.0, 0.0)
        .straight(700.0)
        .clothoid(30.0, -k)
        .arc(40.0)
        .clothoid(30.0, 0.0)
        .straight(3000.0)
        .build()
        .expect("road")
}

/// A6: a lead vehicle turns off before a curve in which a stopped vehicle is revealed.
pub fn a6_turns() -> Scenario {
    let road = a6_road();
    let lead = Profile::new(0.0, 90.0, 10.0);
    let off_s = 640.0;
    let off_t = (off_s - 90.0) / 10.0;
    let first = scripted(&road, ObjectKind::Vehicle, 1.0, 0.0, off_t + 2.0, move |t| (lead.s_at(t), ramp(t, off_t, off_t + 2.0, 0.0, 5.0)));
    let go = A6_REVEAL_T + A6_WAIT;
    let second_profile = Profile::new(go, A6_STOPPED_S, 0.0).ramp_to(10.0, 1.5);
    let second_off_s = 1650.0;
    let second_off_t = {
        let mut t = go;
        while second_profile.s_at(t) < second_off_s {
            t += 0.05;
        }
        t
    };
    let second = scripted(&road, ObjectKind::Vehicle, 1.0, A6_REVEAL_T, second_off_t + 2.0, move |t| {
        (second_profile.s_at(t.max(go)), ramp(t, second_off_t, second_off_t + 2.0, 0.0, 5.0))
    });
    scenario("A6", URBAN_SCENES, 12.0, road, 50.0, vec![first, second])
}

pub fn scenario_library() -> Vec<Scenario> {
    vec![a1_lead_follow(), a2_cut_in(), a3_platoon(), a4_opposite_traffic(), a5_pedestrian(), a6_turns()]
}

pub fn by_id(id: &str) -> Option<Scenario> {
    match id {
        "A1" => Some(a1_lead_follow()),
        "A2" => Some(a2_cut_in()),
        "A3" => Some(a3_platoon()),
        "A4" => Some(a4_opposite_traffic()),
        "A5" => Some(a5_pedestrian()),
        "A6" => Some(a6_turns()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_integrates_piecewise() {
        let p = Profile::new(0.0, 0.0, 10.0).hold(2.0).ramp_to(0.0, 5.0);
        assert_eq!(p.s_at(2.0), 20.0);
        assert!((p.s_at(4.0) - 30.0).abs() < 1e-12);
        assert_eq!(p.s_at(10.0), 30.0);
        assert_eq!(p.speed_at(10.0), 0.0);
    }

    #[test]
    fn library_is_valid() {
        let lib = scenario_library();
        assert_eq!(lib.len(), 6);
        for s in &lib {
            s.validate().unwrap();
            assert_eq!(by_id(&s.id).unwrap().id, s.id);
        }
        let a4 = a4_opposite_traffic();
        for a in &a4.actors {
            for &(_, x, y) in &a.waypoints {
                let f = a4.lane.frenet(x, y);
                assert!((f.d - ADJACENT).abs() < 1e-9);
            }
        }
    }
}
