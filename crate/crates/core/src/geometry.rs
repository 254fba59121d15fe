//! Lane centerlines as arc-length parameterised polylines.

use crate::util::wrap_angle;
use crate::{Error, Result};
use std::collections::HashMap;

const CELL: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frenet {
    /// Arc length of the foot point.
    pub s: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub d: f64,
    /// Centerline heading at the foot point.
    pub heading: f64,
}

#[derive(Debug, Clone)]
pub struct Polyline {
    pts: Vec<(f64, f64)>,
    cum: Vec<f64>,
    headings: Vec<f64>,
    curvature: Vec<f64>,
    grid: HashMap<(i64, i64), Vec<u32>>,
}

fn cell_of(x: f64, y: f64) -> (i64, i64) {
    ((x / CELL).floor() as i64, (y / CELL).floor() as i64)
}

impl Polyline {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for p in points {
            if !(p.0.is_finite() && p.1.is_finite()) {
                return Err(Error::Config(format!("non-finite centerline point {p:?}")));
            }
            if pts.last().is_some_and(|q: &(f64, f64)| (q.0 - p.0).hypot(q.1 - p.1) < 1e-9) {
                continue;
            }
            pts.push(p);
        }
        if pts.len() < 2 {
            return Err(Error::Config("centerline needs at least two distinct points".into()));
        }
        let n = pts.len();
        let mut cum = vec![0.0; n];
        let mut headings = Vec::with_capacity(n - 1);
        for i in 1..n {
            let (dx, dy) = (pts[i].0 - pts[i - 1].0, pts[i].1 - pts[i - 1].1);
            cum[i] = cum[i - 1] + dx.hypot(dy);
            headings.push(dy.atan2(dx));
        }
        let mut curvature = vec![0.0; n];
        for i in 1..n - 1 {
            let dh = wrap_angle(headings[i] - headings[i - 1]);
            let ds = 0.5 * (cum[i + 1] - cum[i - 1]);
            curvature[i] = dh / ds;
        }
        let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for i in 0..n - 1 {
            let (a, b) = (pts[i], pts[i + 1]);
            let (c0, c1) = (cell_of(a.0, a.1), cell_of(b.0, b.1));
            for cx in c0.0.min(c1.0)..=c0.0.max(c1.0) {
                for cy in c0.1.min(c1.1)..=c0.1.max(c1.1) {
                    grid.entry((cx, cy)).or_default().push(i as u32);
                }
            }
        }
        Ok(Self { pts, cum, headings, curvature, grid })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.pts
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.pts.len();
        match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn project_on(&self, i: usize, x: f64, y: f64) -> (f64, f64, f64) {
        // (distance², s, d); the first and last segments extend to infinity.
        let (a, b) = (self.pts[i], self.pts[i + 1]);
        let (ux, uy) = (b.0 - a.0, b.1 - a.1);
        let len = ux.hypot(uy);
        let (ux, uy) = (ux / len, uy / len);
        let (rx, ry) = (x - a.0, y - a.1);
        let mut t = rx * ux + ry * uy;
        let lo = if i == 0 { f64::NEG_INFINITY } else { 0.0 };
        let hi = if i + 2 == self.pts.len() { f64::INFINITY } else { len };
        t = t.clamp(lo, hi);
        let (fx, fy) = (a.0 + t * ux, a.1 + t * uy);
        let d = -rx * uy + ry * ux;
        let dist2 = (x - fx).powi(2) + (y - fy).powi(2);
        (dist2, self.cum[i] + t, d)
    }

    /// Closest-point projection onto the centerline.
    pub fn project(&self, x: f64, y: f64) -> Frenet {
        let mut best: Option<(f64, usize, f64, f64)> = None;
        let c = cell_of(x, y);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(segs) = self.grid.get(&(c.0 + dx, c.1 + dy)) {
                    for &i in segs {
                        let (d2, s, d) = self.project_on(i as usize, x, y);
                        if best.is_none_or(|b| d2 < b.0) {
                            best = Some((d2, i as usize, s, d));
                        }
                    }
                }
            }
        }
        let (_, i, s, d) = match best {
            Some(b) if b.0 <= CELL * CELL => b,
            _ => (0..self.pts.len() - 1)
                .map(|i| {
                    let (d2, s, d) = self.project_on(i, x, y);
                    (d2, i, s, d)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap(),
        };
        Frenet { s, d, heading: self.headings[i] }
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.headings[self.segment_at(s)]
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        let n = self.pts.len();
        if s <= 0.0 || s >= self.length() {
            return 0.0;
        }
        let i = self.segment_at(s);
        let t = (s - self.cum[i]) / (self.cum[i + 1] - self.cum[i]);
        let (k0, k1) = (self.curvature[i], self.curvature[(i + 1).min(n - 1)]);
        k0 + t * (k1 - k0)
    }

    /// World point at arc length `s` and lateral offset `d`.
    pub fn point_at(&self, s: f64, d: f64) -> (f64, f64) {
        let i = self.segment_at(s);
        let h = self.headings[i];
        let t = s - self.cum[i];
        let (a, (c, sn)) = (self.pts[i], (h.cos(), h.sin()));
        (a.0 + t * c - d * sn, a.1 + t * sn + d * c)
    }
}

/// Builds a centerline from pieces with linearly varying curvature.
#[derive(Debug, Clone)]
pub struct RoadBuilder {
    x: f64,
    y: f64,
    heading: f64,
    kappa: f64,
    pts: Vec<(f64, f64)>,
}

impl RoadBuilder {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading, kappa: 0.0, pts: vec![(x, y)] }
    }

    fn piece(mut self, length: f64, k0: f64, k1: f64) -> Self {
        let n = length.ceil().max(1.0) as usize;
        let ds = length / n as f64;
        let sub = 16;
        let h = ds / sub as f64;
        for j in 0..n {
            for q in 0..sub {
                let u = (j * sub + q) as f64 + 0.5;
                let k = k0 + (k1 - k0) * u * h / length;
                let mid = self.heading + 0.5 * k * h;
                self.x += h * mid.cos();
                self.y += h * mid.sin();
                self.heading += k * h;
            }
            self.pts.push((self.x, self.y));
        }
        self.kappa = k1;
        self
    }

    pub fn straight(self, length: f64) -> Self {
        self.piece(length, 0.0, 0.0)
    }

    /// Curvature ramps linearly from the current value to `kappa` over `length`.
    pub fn clothoid(self, length: f64, kappa: f64) -> Self {
        let k0 = self.kappa;
        self.piece(length, k0, kappa)
    }

    pub fn arc(self, length: f64) -> Self {
        let k = self.kappa;
        self.piece(length, k, k)
    }

    pub fn build(self) -> Result<Polyline> {
        Polyline::new(self.pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_projection() {
        let p = Polyline::new(vec![(0.0, 0.0), (100.0, 0.0)]).unwrap();
        let f = p.project(30.0, 1.5);
        assert!((f.s - 30.0).abs() < 1e-12 && (f.d - 1.5).abs() < 1e-12);
        let f = p.project(-10.0, -2.0);
        assert!((f.s + 10.0).abs() < 1e-12 && (f.d + 2.0).abs() < 1e-12);
        let (x, y) = p.point_at(40.0, -1.0);
        assert!((x - 40.0).abs() < 1e-12 && (y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn arc_has_expected_curvature_and_radius() {
        let r = 40.0;
        let road = RoadBuilder::new(0.0, 0.0, 0.0)
            .straight(20.0)
            .clothoid(10.0, 1.0 / r)
            .arc(30.0)
            .clothoid(10.0, 0.0)
            .straight(20.0)
            .build()
            .unwrap();
        assert!((road.length() - 90.0).abs() < 5e-3);
        assert!((road.curvature_at(45.0) - 1.0 / r).abs() < 1e-3);
        assert!(road.curvature_at(5.0).abs() < 1e-9);
        let total_turn = 10.0 / r + 30.0 / r;
        assert!((road.heading_at(85.0) - total_turn).abs() < 1e-2);
        let (x, y) = road.point_at(45.0, 0.8);
        let f = road.project(x, y);
        assert!((f.s - 45.0).abs() < 0.05 && (f.d - 0.8).abs() < 0.01);
    }
}
