//! Small Euclidean helpers shared by the line and connection code.

use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl Segment {
    pub fn new(a: Vec3, b: Vec3) -> Self {
        Self { a: a.into(), b: b.into() }
    }

    #[inline]
    pub fn start(&self) -> Vec3 {
        Vec3::from(self.a)
    }

    #[inline]
    pub fn end(&self) -> Vec3 {
        Vec3::from(self.b)
    }

    pub fn length(&self) -> f64 {
        (self.end() - self.start()).norm()
    }

    pub fn tangent(&self) -> Vec3 {
        (self.end() - self.start()).normalize()
    }

    pub fn reversed(&self) -> Self {
        Self { a: self.b, b: self.a }
    }
}

pub fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / l2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Closest distance between two closed segments.
pub fn segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let tiny = 1e-300;
    let (s, t);
    if a <= tiny && e <= tiny {
        return r.norm();
    }
    if a <= tiny {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= tiny {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    let direct = (c1 - c2).norm();
    // Endpoint candidates guard the clamped branches against round-off.
    direct
        .min(point_segment_distance(p1, p2, q2))
        .min(point_segment_distance(q1, p2, q2))
        .min(point_segment_distance(p2, p1, q1))
        .min(point_segment_distance(q2, p1, q1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let x = p1 + (q1 - p1) * (i as f64 / n as f64);
            best = best.min(point_segment_distance(x, p2, q2));
        }
        best
    }

    #[test]
    fn segment_distance_matches_sampling() {
        let cases = [
            (Vec3::new(0., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(0.5, 1., -1.), Vec3::new(0.5, 1., 1.)),
            (Vec3::new(0., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(2., 0., 0.), Vec3::new(3., 0., 0.)),
            (Vec3::new(0., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(0., 0.3, 0.), Vec3::new(1., 0.3, 0.)),
            (Vec3::new(0., 0., 0.), Vec3::new(1., 1., 0.), Vec3::new(1., 0., 0.2), Vec3::new(0., 1., 0.2)),
        ];
        for (a, b, c, d) in cases {
            let exact = segment_distance(a, b, c, d);
            assert!((exact - brute(a, b, c, d)).abs() < 1e-5, "{exact} vs {}", brute(a, b, c, d));
        }
    }
}
