//! Closed-form Biot-Savart field of straight segments and its line
//! integrals.

use crate::error::{Error, Result};
use crate::geom::{segment_distance, Segment, Vec3};
use crate::grid::{Form1, GridSpec};
use crate::vortex::VortexSystem;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
pub const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

const ADAPT_TOL: f64 = 1e-9;
const ADAPT_DEPTH: u32 = 12;

/// Field at `x` of a unit-flux current along `seg`, circulating right-handed
/// about its direction. `None` when `x` lies on the segment.
pub fn biot_savart_segment(seg: &Segment, x: Vec3) -> Option<Vec3> {
    let a = seg.start();
    let d = seg.end() - a;
    let len = d.norm();
    if len == 0.0 {
        return Some(Vec3::zeros());
    }
    let t = d / len;
    let rel = x - a;
    let s = rel.dot(&t);
    let rho = rel - s * t;
    let r2 = rho.norm_squared();
    if r2.sqrt() <= 1e-14 * len {
        return if (0.0..=len).contains(&s) { None } else { Some(Vec3::zeros()) };
    }
    let u = len - s;
    let k = u / (r2 + u * u).sqrt() + s / (r2 + s * s).sqrt();
    Some(t.cross(&rho) * (k / (4.0 * PI * r2)))
}

/// Field of the whole system at `x` without the weight `h`.
pub fn biot_savart_system(gamma: &VortexSystem, x: Vec3) -> Option<Vec3> {
    gamma.segments.iter().try_fold(Vec3::zeros(), |acc, s| biot_savart_segment(s, x).map(|v| acc + v))
}

fn gl8(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (m, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    GAUSS_LEGENDRE_8.iter().map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
}

fn adaptive(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, whole: f64, depth: u32) -> f64 {
    let mid = (lo + hi) / 2.0;
    let (l, r) = (gl8(f, lo, mid), gl8(f, mid, hi));
    if (l + r - whole).abs() < ADAPT_TOL || depth >= ADAPT_DEPTH {
        return l + r;
    }
    adaptive(f, lo, mid, l, depth + 1) + adaptive(f, mid, hi, r, depth + 1)
}

/// `int_p^q BS(seg) . dl`, refined when the path comes within two path
/// lengths of the segment.
fn line_integral(seg: &Segment, p: Vec3, q: Vec3) -> Option<f64> {
    let dir = q - p;
    let len = dir.norm();
    let dist = segment_distance(p, q, seg.start(), seg.end());
    if dist <= 1e-14 * seg.length().max(len) {
        return None;
    }
    let f = |t: f64| biot_savart_segment(seg, p + t * dir).map_or(0.0, |v| v.dot(&dir));
    let whole = gl8(&f, 0.0, 1.0);
    if dist < 2.0 * len {
        Some(adaptive(&f, 0.0, 1.0, whole, 0))
    } else {
        Some(whole)
    }
}

/// Edge densities `h * sum_seg (1/|e|) int_e BS . dl` on every valid edge.
pub fn biot_savart_field(gamma: &VortexSystem, grid: &GridSpec) -> Form1 {
    let mut out = Form1::zeros(*grid);
    if gamma.is_empty() {
        return out;
    }
    let sp = grid.spacing;
    for a in 0..3 {
        out.comps[a].par_iter_mut().enumerate().for_each(|(i, o)| {
            if !grid.edge_valid(a, i) {
                return;
            }
            let p = grid.vertex_position(i);
            let mut q = p;
            q[a] += sp;
            let s: f64 = gamma.segments.iter().map(|seg| line_integral(seg, p, q).unwrap_or(0.0)).sum();
            *o = gamma.h * s / sp;
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linking {
    pub value: i64,
    pub raw: f64,
    pub residual: f64,
}

/// Linking number of the closed polyline through `loop_pts` with `gamma`.
pub fn linking_number(loop_pts: &[Vec3], gamma: &VortexSystem) -> Result<Linking> {
    if loop_pts.len() < 2 {
        return Err(Error::InvalidInput("linking loop needs at least two points".into()));
    }
    let n = loop_pts.len();
    let edges: Vec<(Vec3, Vec3)> = (0..n).map(|k| (loop_pts[k], loop_pts[(k + 1) % n])).collect();
    let parts: Option<Vec<f64>> = edges
        .par_iter()
        .map(|(p, q)| gamma.segments.iter().map(|s| line_integral(s, *p, *q)).sum::<Option<f64>>())
        .collect();
    let raw: f64 = parts
        .ok_or_else(|| Error::InvalidInput("linking loop intersects the vortex system".into()))?
        .iter()
        .sum();
    let value = raw.round();
    Ok(Linking { value: value as i64, raw, residual: (raw - value).abs() })
}
