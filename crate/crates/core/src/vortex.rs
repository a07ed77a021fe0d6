//! Weighted oriented polyline systems and a few analytic constructors.

use crate::error::{Error, Result};
use crate::geom::{Segment, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSystem {
    /// Flux carried by every segment.
    pub h: f64,
    pub segments: Vec<Segment>,
    /// Segment ids of each polyline, in traversal order.
    pub loops: Vec<Vec<usize>>,
    /// Optional region label per segment (empty when untagged).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<u32>,
}

impl VortexSystem {
    pub fn new(h: f64) -> Self {
        Self { h, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    /// `h` times the total length.
    pub fn mass(&self) -> f64 {
        self.h * self.total_length()
    }

    /// Append a polyline through `points`; closes it back to the first
    /// point when `closed`.
    pub fn push_polyline(&mut self, points: &[Vec3], closed: bool) {
        if points.len() < 2 {
            return;
        }
        let first = self.segments.len();
        for w in points.windows(2) {
            self.segments.push(Segment::new(w[0], w[1]));
        }
        if closed {
            self.segments.push(Segment::new(points[points.len() - 1], points[0]));
        }
        self.loops.push((first..self.segments.len()).collect());
    }

    pub fn merge(&mut self, other: &VortexSystem) {
        let off = self.segments.len();
        self.segments.extend_from_slice(&other.segments);
        self.loops.extend(other.loops.iter().map(|l| l.iter().map(|i| i + off).collect()));
        if !other.tags.is_empty() || !self.tags.is_empty() {
            self.tags.resize(off, 0);
            if other.tags.is_empty() {
                self.tags.resize(self.segments.len(), 0);
            } else {
                self.tags.extend_from_slice(&other.tags);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidInput("vortex weight must be positive".into()));
        }
        if !self.tags.is_empty() && self.tags.len() != self.segments.len() {
            return Err(Error::InvalidInput("one tag per segment required".into()));
        }
        for s in &self.segments {
            if s.a.iter().chain(&s.b).any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite segment endpoint".into()));
            }
        }
        for l in &self.loops {
            if l.iter().any(|&i| i >= self.segments.len()) {
                return Err(Error::InvalidInput("loop references a missing segment".into()));
            }
        }
        Ok(())
    }

    /// Straight line from `a` to `b` with weight `h`.
    pub fn line(a: Vec3, b: Vec3, h: f64) -> Self {
        let mut s = Self::new(h);
        s.push_polyline(&[a, b], false);
        s
    }

    /// Closed regular polygon approximating a circle in the plane normal
    /// to `axis` (counterclockwise about it).
    pub fn circle(center: Vec3, radius: f64, axis: Vec3, sides: usize, h: f64) -> Self {
        let n = axis.normalize();
        let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = n.cross(&helper).normalize();
        let e2 = n.cross(&e1);
        let pts: Vec<Vec3> = (0..sides)
            .map(|k| {
                let t = TAU * k as f64 / sides as f64;
                center + radius * (t.cos() * e1 + t.sin() * e2)
            })
            .collect();
        let mut s = Self::new(h);
        s.push_polyline(&pts, true);
        s
    }

    /// Closed trefoil knot polyline, scaled by `scale` about `center`.
    pub fn trefoil(center: Vec3, scale: f64, sides: usize, h: f64) -> Self {
        let pts: Vec<Vec3> = (0..sides)
            .map(|k| {
                let t = TAU * k as f64 / sides as f64;
                let p = Vec3::new(
                    t.sin() + 2.0 * (2.0 * t).sin(),
                    t.cos() - 2.0 * (2.0 * t).cos(),
                    -(3.0 * t).sin(),
                );
                center + scale / 3.0 * p
            })
            .collect();
        let mut s = Self::new(h);
        s.push_polyline(&pts, true);
        s
    }

    /// Signed segment degree at every endpoint, keyed by exact coordinates.
    pub fn vertex_degrees(&self) -> Vec<([f64; 3], i64)> {
        let mut map: std::collections::BTreeMap<[u64; 3], ([f64; 3], i64)> = Default::default();
        let key = |p: [f64; 3]| p.map(|x| (x + 0.0).to_bits());
        for s in &self.segments {
            map.entry(key(s.b)).or_insert((s.b, 0)).1 += 1;
            map.entry(key(s.a)).or_insert((s.a, 0)).1 -= 1;
        }
        map.into_values().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_curves_have_zero_degrees() {
        let c = VortexSystem::circle(Vec3::zeros(), 1.0, Vec3::z(), 12, 0.5);
        assert!(c.vertex_degrees().iter().all(|(_, d)| *d == 0));
        let t = VortexSystem::trefoil(Vec3::zeros(), 1.0, 60, 0.5);
        assert!(t.vertex_degrees().iter().all(|(_, d)| *d == 0));
        let l = VortexSystem::line(Vec3::zeros(), Vec3::z(), 1.0);
        assert_eq!(l.vertex_degrees().iter().filter(|(_, d)| *d != 0).count(), 2);
    }

    #[test]
    fn json_shape() {
        let l = VortexSystem::line(Vec3::zeros(), Vec3::z(), 0.25);
        let v = serde_json::to_value(&l).unwrap();
        assert_eq!(v["segments"][0]["b"][2], 1.0);
        assert_eq!(v["loops"][0][0], 0);
        assert!(v.get("tags").is_none());
        let back: VortexSystem = serde_json::from_value(v).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn circle_is_counterclockwise() {
        let c = VortexSystem::circle(Vec3::zeros(), 1.0, Vec3::z(), 16, 1.0);
        let s = c.segments[0];
        let m = (s.start() + s.end()) / 2.0;
        assert!(m.cross(&(s.end() - s.start())).z > 0.0);
        assert!((c.mass() - 16.0 * 2.0 * (std::f64::consts::PI / 16.0).sin()).abs() < 1e-12);
    }
}
