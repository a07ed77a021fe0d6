//! Minimal connections between signed point sets and flat-norm estimates.

pub mod flat;
pub mod flow;
pub mod hungarian;

use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, segment_distance, Segment, Vec3};
use crate::grid::Form2;
use serde::{Deserialize, Serialize};

/// Signed measure accepted by [`flat_norm_w11`].
#[derive(Clone, Copy, Debug)]
pub enum SignedMeasure<'a> {
    /// Weighted points (a 0-current).
    Points(&'a [(Vec3, f64)]),
    /// Lattice 1-current given as a density 2-form on dual edges.
    Current(&'a Form2),
}

/// Flat norm with test functions bounded by `radius`: exact for points,
/// certified upper estimate for lattice currents.
pub fn flat_norm_w11(mu: SignedMeasure<'_>, radius: f64) -> Result<f64> {
    match mu {
        SignedMeasure::Points(p) => flow::flat_norm_points(p, radius),
        SignedMeasure::Current(q) => {
            let opts = flat::FlatNormOptions { radius, ..Default::default() };
            Ok(flat::flat_norm_form2(q, &opts)?.upper)
        }
    }
}

/// Convex region whose boundary may absorb unmatched endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexBody {
    Ball { center: [f64; 3], radius: f64 },
    Box { min: [f64; 3], max: [f64; 3] },
    /// Intersection of half-spaces `n . x <= c`.
    Polytope { planes: Vec<([f64; 3], f64)> },
}

impl ConvexBody {
    pub fn contains(&self, x: Vec3) -> bool {
        self.signed_depth(x) >= -1e-12
    }

    /// Distance to the boundary for interior points (negative outside).
    pub fn signed_depth(&self, x: Vec3) -> f64 {
        match self {
            ConvexBody::Ball { center, radius } => radius - (x - Vec3::from(*center)).norm(),
            ConvexBody::Box { min, max } => {
                (0..3).map(|a| (x[a] - min[a]).min(max[a] - x[a])).fold(f64::INFINITY, f64::min)
            }
            ConvexBody::Polytope { planes } => planes
                .iter()
                .map(|(n, c)| {
                    let n = Vec3::from(*n);
                    (c - n.dot(&x)) / n.norm()
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Nearest boundary point of an interior point.
    pub fn boundary_projection(&self, x: Vec3) -> Vec3 {
        match self {
            ConvexBody::Ball { center, radius } => {
                let c = Vec3::from(*center);
                let d = x - c;
                let n = d.norm();
                if n == 0.0 {
                    c + Vec3::new(*radius, 0.0, 0.0)
                } else {
                    c + d * (radius / n)
                }
            }
            ConvexBody::Box { min, max } => {
                let mut best = (f64::INFINITY, 0, 0.0);
                for a in 0..3 {
                    for target in [min[a], max[a]] {
                        let d = (x[a] - target).abs();
                        if d < best.0 {
                            best = (d, a, target);
                        }
                    }
                }
                let mut p = x;
                p[best.1] = best.2;
                p
            }
            ConvexBody::Polytope { planes } => {
                let mut best = (f64::INFINITY, x);
                for (n, c) in planes {
                    let n = Vec3::from(*n);
                    let d = (c - n.dot(&x)) / n.norm();
                    if d < best.0 {
                        best = (d, x + n * (d / n.norm()));
                    }
                }
                best.1
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConnectionMode {
    Balanced,
    BoundaryRelative { body: ConvexBody },
}

/// Either an input point or a boundary point it was sent to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Endpoint {
    Positive { index: usize },
    Negative { index: usize },
    Boundary { at: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    /// Start of the connecting segment (a negative point or the boundary).
    pub from: Endpoint,
    /// End of the connecting segment (a positive point or the boundary).
    pub to: Endpoint,
    pub segment: Segment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub links: Vec<Link>,
    pub cost: f64,
}

fn validate(pos: &[Vec3], neg: &[Vec3], mode: &ConnectionMode) -> Result<()> {
    if pos.iter().chain(neg).any(|p| !p.iter().all(|x| x.is_finite())) {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    match mode {
        ConnectionMode::Balanced if pos.len() != neg.len() => Err(Error::InvalidInput(format!(
            "balanced connection needs equal counts, got {} and {}",
            pos.len(),
            neg.len()
        ))),
        ConnectionMode::BoundaryRelative { body } => {
            if let Some(p) = pos.iter().chain(neg).find(|p| !body.contains(**p)) {
                return Err(Error::InvalidInput(format!("point {p:?} outside the convex body")));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn link_pair(pos: &[Vec3], neg: &[Vec3], i: usize, j: usize) -> Link {
    Link {
        from: Endpoint::Negative { index: j },
        to: Endpoint::Positive { index: i },
        segment: Segment::new(neg[j], pos[i]),
    }
}

/// Minimum-length set of segments whose boundary is `sum P_i - sum N_j`,
/// relative to the boundary of the body in the relative mode.
pub fn minimal_connection(pos: &[Vec3], neg: &[Vec3], mode: &ConnectionMode) -> Result<Connection> {
    validate(pos, neg, mode)?;
    match mode {
        ConnectionMode::Balanced => {
            let n = pos.len();
            let cost: Vec<f64> =
                (0..n * n).map(|k| (pos[k / n.max(1)] - neg[k % n.max(1)]).norm()).collect();
            let (assign, _) = hungarian::solve(&cost, n, n);
            let links: Vec<Link> = assign.iter().enumerate().map(|(i, &j)| link_pair(pos, neg, i, j)).collect();
            let cost = links.iter().map(|l| l.segment.length()).sum();
            Ok(Connection { links, cost })
        }
        ConnectionMode::BoundaryRelative { body } => {
            let (np, nn) = (pos.len(), neg.len());
            let size = np + nn;
            // rows: positives then negative-boundary slots; columns: negatives then positive-boundary slots
            let mut cost = vec![0.0; size * size];
            for r in 0..size {
                for c in 0..size {
                    cost[r * size + c] = match (r < np, c < nn) {
                        (true, true) => (pos[r] - neg[c]).norm(),
                        (true, false) => body.signed_depth(pos[r]),
                        (false, true) => body.signed_depth(neg[c]),
                        (false, false) => 0.0,
                    };
                }
            }
            let (assign, _) = hungarian::solve(&cost, size, size);
            let mut links = Vec::new();
            for (r, &c) in assign.iter().enumerate() {
                match (r < np, c < nn) {
                    (true, true) => links.push(link_pair(pos, neg, r, c)),
                    (true, false) => {
                        let b = body.boundary_projection(pos[r]);
                        links.push(Link {
                            from: Endpoint::Boundary { at: b.into() },
                            to: Endpoint::Positive { index: r },
                            segment: Segment::new(b, pos[r]),
                        });
                    }
                    (false, true) => {
                        let b = body.boundary_projection(neg[c]);
                        links.push(Link {
                            from: Endpoint::Negative { index: c },
                            to: Endpoint::Boundary { at: b.into() },
                            segment: Segment::new(neg[c], b),
                        });
                    }
                    (false, false) => {}
                }
            }
            links.sort_by_key(|l| match (l.to, l.from) {
                (Endpoint::Positive { index }, _) => (0, index),
                (_, Endpoint::Negative { index }) => (1, index),
                _ => (2, 0),
            });
            let cost = links.iter().map(|l| l.segment.length()).sum();
            Ok(Connection { links, cost })
        }
    }
}

pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Exhaustive optimum, for validating [`minimal_connection`] on small inputs.
pub fn brute_force_connection(pos: &[Vec3], neg: &[Vec3], mode: &ConnectionMode) -> Result<f64> {
    validate(pos, neg, mode)?;
    if pos.len() > BRUTE_FORCE_LIMIT || neg.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit(format!("brute force limited to {BRUTE_FORCE_LIMIT} points per sign")));
    }
    let depth = |p: &Vec3| match mode {
        ConnectionMode::Balanced => f64::INFINITY,
        ConnectionMode::BoundaryRelative { body } => body.signed_depth(*p),
    };
    let pd: Vec<f64> = pos.iter().map(depth).collect();
    let nd: Vec<f64> = neg.iter().map(depth).collect();
    fn rec(i: usize, pos: &[Vec3], neg: &[Vec3], pd: &[f64], nd: &[f64], used: &mut [bool], acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if i == pos.len() {
            let rest: f64 = (0..neg.len()).filter(|&j| !used[j]).map(|j| nd[j]).sum();
            if acc + rest < *best {
                *best = acc + rest;
            }
            return;
        }
        for j in 0..neg.len() {
            if !used[j] {
                used[j] = true;
                rec(i + 1, pos, neg, pd, nd, used, acc + (pos[i] - neg[j]).norm(), best);
                used[j] = false;
            }
        }
        if pd[i].is_finite() {
            rec(i + 1, pos, neg, pd, nd, used, acc + pd[i], best);
        }
    }
    let mut best = f64::INFINITY;
    rec(0, pos, neg, &pd, &nd, &mut vec![false; neg.len()], 0.0, &mut best);
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentBound {
    pub distance: f64,
    pub bound: f64,
    /// Whether the ordering hypothesis of the bound holds for this pair.
    pub applicable: bool,
}

/// Lower bound for the distance between two segments in terms of
/// endpoint-to-segment distances, valid when the segments are shorter
/// than the cross connections between their endpoints.
pub fn segment_distance_bound(l1: &Segment, l2: &Segment) -> SegmentBound {
    let (a1, b1, a2, b2) = (l1.start(), l1.end(), l2.start(), l2.end());
    let applicable = (b1 - a1).norm() + (b2 - a2).norm() <= (b1 - a2).norm() + (b2 - a1).norm();
    let m = [
        point_segment_distance(a1, a2, b2),
        point_segment_distance(b1, a2, b2),
        point_segment_distance(a2, a1, b1),
        point_segment_distance(b2, a1, b1),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    SegmentBound { distance: segment_distance(a1, b1, a2, b2), bound: m / 2f64.sqrt(), applicable }
}
