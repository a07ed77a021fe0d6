//! Discrete check of `kappa = 2 tau x j` along a filament.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub max_residual: f64,
    /// Vertices where the residual was evaluated.
    pub vertices: Vec<usize>,
    pub kappa: Vec<[f64; 3]>,
    pub tau: Vec<[f64; 3]>,
    pub residual: Vec<f64>,
}

/// Three-point tangent and curvature at every vertex with two neighbours
/// (all vertices when `closed`), compared with `2 tau x j(x)`.
pub fn curvature_residual(points: &[Vec3], closed: bool, j: impl Fn(Vec3) -> Vec3) -> Result<CurvatureReport> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidInput("a filament needs at least three vertices".into()));
    }
    let count = if closed { n } else { n - 1 };
    for i in 0..count {
        let (a, b) = (points[i], points[(i + 1) % n]);
        if (b - a).norm() == 0.0 {
            return Err(Error::InvalidInput(format!("vertices {i} and {} coincide", (i + 1) % n)));
        }
    }
    let idx: Vec<usize> = if closed { (0..n).collect() } else { (1..n - 1).collect() };
    let mut rep = CurvatureReport { max_residual: 0.0, vertices: idx.clone(), kappa: vec![], tau: vec![], residual: vec![] };
    for i in idx {
        let (p, x, q) = (points[(i + n - 1) % n], points[i], points[(i + 1) % n]);
        let (sm, sp) = ((x - p).norm(), (q - x).norm());
        let tau = (q - p).normalize();
        let kappa = ((q - x) / sp - (x - p) / sm) * (2.0 / (sm + sp));
        let r = (kappa - 2.0 * tau.cross(&j(x))).norm();
        rep.max_residual = rep.max_residual.max(r);
        rep.kappa.push(kappa.into());
        rep.tau.push(tau.into());
        rep.residual.push(r);
    }
    Ok(rep)
}
