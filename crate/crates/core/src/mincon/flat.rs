//! Flat norm of a lattice 1-current given by face fluxes.
//!
//! With `F` the flux through each primal face (a current on dual edges), the
//! value is `min_S  R * h * |F - D S|_1 + h^2 * |S|_1` over 2-chains `S` on
//! dual faces (one per primal edge) and `D` the edge-to-face incidence.
//! Solved by diagonally preconditioned primal-dual iterations; the best
//! primal objective is a certified upper bound and a rescaled dual iterate
//! gives a lower bound.

use crate::dec::{Codifferential, ExteriorDerivative};
use crate::error::{Error, Result};
use crate::grid::{Form1, Form2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatNormOptions {
    /// Sup bound on test forms; scales the cost of unfilled current.
    pub radius: f64,
    pub max_iter: usize,
    /// Relative gap between the bounds at which iteration stops.
    pub rel_gap: f64,
}

impl Default for FlatNormOptions {
    fn default() -> Self {
        Self { radius: 1.0, max_iter: 20_000, rel_gap: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatNormEstimate {
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
}

/// Face fluxes `value * h^2` of a density 2-form.
pub fn face_fluxes(q: &Form2) -> Form2 {
    let mut f = q.clone();
    f.scale(q.grid.spacing * q.grid.spacing);
    f
}

fn apply_d(s: &Form1, h: f64) -> Form2 {
    let mut out = s.d();
    out.scale(h);
    out
}

fn apply_dt(y: &Form2, h: f64) -> Form1 {
    let mut out = y.codiff();
    out.scale(h);
    out
}

/// Flat norm of the current whose face fluxes are `flux` (not densities).
pub fn flat_norm_fluxes(flux: &Form2, opts: &FlatNormOptions) -> Result<FlatNormEstimate> {
    if !(opts.radius > 0.0) {
        return Err(Error::InvalidParameter("flat norm radius must be positive".into()));
    }
    let g = flux.grid;
    let h = g.spacing;
    let c_face = opts.radius * h;
    let a_edge = h * h;
    let trivial = {
        let mut s = 0.0;
        for a in 0..3 {
            for i in 0..g.len() {
                if g.face_valid(a, i) {
                    s += flux.comps[a][i].abs();
                }
            }
        }
        s * c_face
    };
    if trivial == 0.0 {
        return Ok(FlatNormEstimate { upper: 0.0, lower: 0.0, iterations: 0 });
    }
    // unit-incidence steps: each face has four edges and each edge four faces
    let tau = 0.25;
    let sigma = 0.25;
    let mut s = Form1::zeros(g);
    let mut s_bar = s.clone();
    let mut y = Form2::zeros(g);
    let mut upper = trivial;
    let mut lower: f64 = 0.0;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        let ds = apply_d(&s_bar, h);
        for a in 0..3 {
            for i in 0..g.len() {
                if g.face_valid(a, i) {
                    let v = y.comps[a][i] + sigma * (ds.comps[a][i] - flux.comps[a][i]);
                    y.comps[a][i] = v.clamp(-c_face, c_face);
                }
            }
        }
        let dty = apply_dt(&y, h);
        let prev = s.clone();
        let thr = tau * a_edge;
        for a in 0..3 {
            for i in 0..g.len() {
                if g.edge_valid(a, i) {
                    let v = s.comps[a][i] - tau * dty.comps[a][i];
                    s.comps[a][i] = v.signum() * (v.abs() - thr).max(0.0);
                }
            }
        }
        for a in 0..3 {
            for i in 0..g.len() {
                s_bar.comps[a][i] = 2.0 * s.comps[a][i] - prev.comps[a][i];
            }
        }
        if it % 25 == 0 || it == opts.max_iter {
            let ds = apply_d(&s, h);
            let mut p = 0.0;
            let mut dual = 0.0;
            for a in 0..3 {
                for i in 0..g.len() {
                    if g.face_valid(a, i) {
                        p += c_face * (flux.comps[a][i] - ds.comps[a][i]).abs();
                        dual += y.comps[a][i] * flux.comps[a][i];
                    }
                    if g.edge_valid(a, i) {
                        p += a_edge * s.comps[a][i].abs();
                    }
                }
            }
            upper = upper.min(p);
            let worst = dty.max_abs();
            let scale = if worst > a_edge { a_edge / worst } else { 1.0 };
            lower = lower.max(-dual * scale).max(dual * scale);
            if upper - lower <= opts.rel_gap * upper {
                break;
            }
        }
    }
    Ok(FlatNormEstimate { upper, lower: lower.min(upper), iterations: it })
}

/// Flat norm of a density 2-form.
pub fn flat_norm_form2(q: &Form2, opts: &FlatNormOptions) -> Result<FlatNormEstimate> {
    flat_norm_fluxes(&face_fluxes(q), opts)
}
