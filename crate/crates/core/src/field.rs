//! Lattice momentum, Jacobian, Ginzburg-Landau energy and norms.

use crate::dec::ExteriorDerivative;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Form0, Form1, Form2, Form3, GridSpec};
use num_complex::Complex64;
use rayon::prelude::*;

/// Double-well potential as a function of `|u|^2`.
pub trait DoubleWell: Sync {
    fn eval(&self, modulus_sq: f64) -> f64;
}

/// `W(u) = (1 - |u|^2)^2 / 4`.
#[derive(Clone, Copy, Debug, Default)]
pub struct StandardWell;

impl DoubleWell for StandardWell {
    #[inline]
    fn eval(&self, m2: f64) -> f64 {
        let t = 1.0 - m2;
        0.25 * t * t
    }
}

impl<F: Fn(f64) -> f64 + Sync> DoubleWell for F {
    fn eval(&self, m2: f64) -> f64 {
        self(m2)
    }
}

/// Edge momentum `Im(conj(u_a) u_b) / h`.
pub fn momentum(u: &ComplexField) -> Form1 {
    let g = u.grid;
    let inv = 1.0 / g.spacing;
    let mut out = Form1::zeros(g);
    for a in 0..3 {
        out.comps[a].par_iter_mut().enumerate().for_each(|(i, o)| {
            if let (true, Some(j)) = (g.edge_valid(a, i), g.step(i, a, 1)) {
                *o = (u.data[i].conj() * u.data[j]).im * inv;
            }
        });
    }
    out
}

/// Smooth Jacobian `d(momentum) / 2`.
pub fn jacobian_smooth(u: &ComplexField) -> Form2 {
    let mut j = momentum(u).d();
    j.scale(0.5);
    j
}

#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub total: f64,
    /// Energy density per cell.
    pub density: Form3,
    /// Potential contribution `sum W/eps^2 h^3`.
    pub potential: f64,
}

/// Per-cell energy density: forward differences averaged over the four
/// parallel edges of each cell, potential averaged over its eight vertices.
pub fn energy_density(u: &ComplexField, eps: f64, well: &dyn DoubleWell) -> Result<(Form3, Form3)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let g = u.grid;
    let h2 = g.spacing * g.spacing;
    let inv_eps2 = 1.0 / (eps * eps);
    let per_cell: Vec<(f64, f64)> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            if !g.cell_valid(i) {
                return (0.0, 0.0);
            }
            let c = g.coords(i).map(|x| x as i64);
            let vert = |dx: i64, dy: i64, dz: i64| -> Complex64 {
                u.data[g.index_wrapped([c[0] + dx, c[1] + dy, c[2] + dz]).unwrap()]
            };
            let mut corners = [Complex64::new(0.0, 0.0); 8];
            for (k, z) in corners.iter_mut().enumerate() {
                *z = vert((k & 1) as i64, (k >> 1 & 1) as i64, (k >> 2 & 1) as i64);
            }
            let mut grad = 0.0;
            for a in 0..3 {
                let bit = 1 << a;
                let mut s = 0.0;
                for (k, z) in corners.iter().enumerate() {
                    if k & bit == 0 {
                        s += (corners[k | bit] - z).norm_sqr();
                    }
                }
                grad += 0.25 * s / h2;
            }
            let w: f64 = corners.iter().map(|z| well.eval(z.norm_sqr())).sum::<f64>() / 8.0;
            (0.5 * grad + w * inv_eps2, w * inv_eps2)
        })
        .collect();
    let mut dens = Form3::zeros(g);
    let mut pot = Form3::zeros(g);
    for (i, (e, w)) in per_cell.into_iter().enumerate() {
        dens.data[i] = e;
        pot.data[i] = w;
    }
    Ok((dens, pot))
}

/// Ginzburg-Landau energy, optionally restricted to a cell mask.
pub fn energy(u: &ComplexField, eps: f64, well: &dyn DoubleWell, mask: Option<&[bool]>) -> Result<EnergyReport> {
    let g = u.grid;
    if let Some(m) = mask {
        if m.len() != g.len() {
            return Err(Error::InvalidInput("mask length does not match grid".into()));
        }
    }
    let (density, pot) = energy_density(u, eps, well)?;
    let vol = g.spacing.powi(3);
    let (mut total, mut potential) = (0.0, 0.0);
    for i in 0..g.len() {
        if g.cell_valid(i) && mask.is_none_or(|m| m[i]) {
            total += density.data[i];
            potential += pot.data[i];
        }
    }
    Ok(EnergyReport { total: total * vol, density, potential: potential * vol })
}

/// Cell-centred Euclidean magnitudes, the common ground for `L^q` norms.
fn cell_magnitudes<F: Fn(usize) -> f64 + Sync>(g: &GridSpec, f: F) -> Vec<f64> {
    (0..g.len()).into_par_iter().map(|i| if g.cell_valid(i) { f(i) } else { 0.0 }).collect()
}

fn lq(g: &GridSpec, mags: &[f64], q: f64) -> f64 {
    let vol = g.spacing.powi(3);
    if q.is_infinite() {
        return g.cells().fold(0.0, |m, i| m.max(mags[i]));
    }
    let s: f64 = g.cells().map(|i| mags[i].powf(q)).sum();
    (s * vol).powf(1.0 / q)
}

fn wrapped(g: &GridSpec, i: usize, off: [i64; 3]) -> usize {
    let c = g.coords(i);
    g.index_wrapped([c[0] as i64 + off[0], c[1] as i64 + off[1], c[2] as i64 + off[2]]).unwrap()
}

pub trait LqNorm {
    fn lq_norm(&self, q: f64) -> f64;
}

impl LqNorm for Form0 {
    fn lq_norm(&self, q: f64) -> f64 {
        let g = self.grid;
        let m = cell_magnitudes(&g, |i| {
            let mut s = 0.0;
            for k in 0..8 {
                s += self.data[wrapped(&g, i, [(k & 1) as i64, (k >> 1 & 1) as i64, (k >> 2 & 1) as i64])];
            }
            (s / 8.0).abs()
        });
        lq(&g, &m, q)
    }
}

impl LqNorm for Form1 {
    fn lq_norm(&self, q: f64) -> f64 {
        let g = self.grid;
        let m = cell_magnitudes(&g, |i| {
            let mut v = [0.0; 3];
            for (a, va) in v.iter_mut().enumerate() {
                let (b, c) = crate::grid::cyclic(a);
                let mut s = 0.0;
                for k in 0..4 {
                    let mut off = [0i64; 3];
                    off[b] = (k & 1) as i64;
                    off[c] = (k >> 1) as i64;
                    s += self.comps[a][wrapped(&g, i, off)];
                }
                *va = s / 4.0;
            }
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        });
        lq(&g, &m, q)
    }
}

impl LqNorm for Form2 {
    fn lq_norm(&self, q: f64) -> f64 {
        let g = self.grid;
        let m = cell_magnitudes(&g, |i| {
            let mut v = [0.0; 3];
            for (a, va) in v.iter_mut().enumerate() {
                let mut off = [0i64; 3];
                off[a] = 1;
                *va = 0.5 * (self.comps[a][i] + self.comps[a][wrapped(&g, i, off)]);
            }
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        });
        lq(&g, &m, q)
    }
}

impl LqNorm for Form3 {
    fn lq_norm(&self, q: f64) -> f64 {
        let g = self.grid;
        let m: Vec<f64> = self.data.iter().map(|x| x.abs()).collect();
        lq(&g, &m, q)
    }
}

/// `sum (1 - |u|)^2 h^3` with the vertex weights used by the potential term.
pub fn modulus_defect(u: &ComplexField) -> f64 {
    let g = u.grid;
    let vol = g.spacing.powi(3);
    let mut s = 0.0;
    for i in g.cells() {
        for k in 0..8 {
            let v = wrapped(&g, i, [(k & 1) as i64, (k >> 1 & 1) as i64, (k >> 2 & 1) as i64]);
            s += (1.0 - u.data[v].norm()).powi(2);
        }
    }
    s * vol / 8.0
}
