//! Quantized vorticity from a lattice field on a coarse offset lattice.

use crate::error::{Error, Result};
use crate::field::{DoubleWell, StandardWell};
use crate::geom::{Segment, Vec3};
use crate::grid::{cyclic, Boundary, ComplexField, Form2, GridSpec};
use crate::mincon::flat::{flat_norm_form2, FlatNormEstimate, FlatNormOptions};
use crate::potentials::{rasterize_weighted, RasterPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const DEFAULT_MIN_MODULUS: f64 = 0.1;
pub const DEFAULT_CANDIDATES: usize = 16;

/// Face of the coarse lattice, identified by its normal and base vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoarseFace {
    pub normal: usize,
    pub base: [usize; 3],
}

/// Coarse lattice of side `cell` fine steps, shifted by `offset` fine steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseLattice {
    pub fine: GridSpec,
    pub cell: usize,
    pub offset: [usize; 3],
    pub counts: [usize; 3],
}

impl CoarseLattice {
    pub fn new(fine: GridSpec, cell: usize, offset: [usize; 3]) -> Result<Self> {
        if cell == 0 {
            return Err(Error::InvalidParameter("coarse cell must span at least one fine step".into()));
        }
        let mut counts = [0; 3];
        for a in 0..3 {
            let n = fine.dims[a];
            if offset[a] >= cell {
                return Err(Error::InvalidParameter(format!("offset {offset:?} not below cell size {cell}")));
            }
            counts[a] = match fine.boundary {
                Boundary::Periodic => {
                    if n % cell != 0 {
                        return Err(Error::InvalidParameter(format!(
                            "periodic axis of {n} vertices not divisible by coarse cell {cell}"
                        )));
                    }
                    n / cell
                }
                Boundary::Box => {
                    if offset[a] + cell > n - 1 {
                        return Err(Error::InvalidParameter("coarse cell does not fit in the box".into()));
                    }
                    (n - 1 - offset[a]) / cell + 1
                }
            };
        }
        Ok(Self { fine, cell, offset, counts })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell as f64 * self.fine.spacing
    }

    pub fn origin(&self) -> Vec3 {
        let g = &self.fine;
        Vec3::new(
            g.origin[0] + self.offset[0] as f64 * g.spacing,
            g.origin[1] + self.offset[1] as f64 * g.spacing,
            g.origin[2] + self.offset[2] as f64 * g.spacing,
        )
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            dims: self.counts,
            spacing: self.cell_size(),
            origin: self.origin().into(),
            boundary: self.fine.boundary,
        }
    }

    fn fine_coords(&self, m: [usize; 3]) -> [i64; 3] {
        [0, 1, 2].map(|a| (self.offset[a] + self.cell * m[a]) as i64)
    }

    pub fn face_valid(&self, f: &CoarseFace) -> bool {
        self.grid().face_valid(f.normal, self.grid().index_of(f.base))
    }

    pub fn faces(&self) -> Vec<CoarseFace> {
        let g = self.grid();
        let mut out = Vec::new();
        for normal in 0..3 {
            for i in 0..g.len() {
                if g.face_valid(normal, i) {
                    out.push(CoarseFace { normal, base: g.coords(i) });
                }
            }
        }
        out
    }

    /// Fine vertex loop around a coarse face, right-handed about its normal.
    pub fn boundary_loop(&self, f: &CoarseFace) -> Vec<usize> {
        let (b, c) = cyclic(f.normal);
        let k = self.cell as i64;
        let start = self.fine_coords(f.base);
        let mut pts = Vec::with_capacity(4 * self.cell);
        let mut p = start;
        for (axis, dir) in [(b, 1), (c, 1), (b, -1), (c, -1)] {
            for _ in 0..k {
                pts.push(self.fine.index_wrapped(p).expect("loop inside grid"));
                p[axis] += dir;
            }
        }
        pts
    }
}

/// Principal-branch phase increment `arg(conj(a) b)`.
#[inline]
fn increment(a: num_complex::Complex64, b: num_complex::Complex64) -> f64 {
    let z = a.conj() * b;
    z.im.atan2(z.re)
}

/// Winding number of `u` along a closed vertex loop, or `None` when the
/// modulus drops below `min_modulus` somewhere on it.
pub fn loop_degree(u: &ComplexField, vertices: &[usize], min_modulus: f64) -> Option<i64> {
    if vertices.iter().any(|&v| u.data[v].norm() < min_modulus) {
        return None;
    }
    let n = vertices.len();
    let mut s = 0.0;
    for t in 0..n {
        let (a, b) = (vertices[t], vertices[(t + 1) % n]);
        // fixed orientation per lattice edge keeps opposite traversals exact negatives
        s += if a <= b { increment(u.data[a], u.data[b]) } else { -increment(u.data[b], u.data[a]) };
    }
    Some((s / TAU).round() as i64)
}

pub fn plaquette_degree(u: &ComplexField, lattice: &CoarseLattice, face: &CoarseFace, min_modulus: f64) -> Option<i64> {
    loop_degree(u, &lattice.boundary_loop(face), min_modulus)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualEdge {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub axis: usize,
    pub weight: i64,
}

/// Vorticity measure `pi * sum d_Q [dual edge of Q]` on the coarse lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVorticity {
    pub cell_size: f64,
    pub offset: [f64; 3],
    pub dual_edges: Vec<DualEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

impl DiscreteVorticity {
    /// Total variation `sum pi * l * |d_Q|`.
    pub fn mass(&self) -> f64 {
        self.dual_edges.iter().map(|e| PI * self.cell_size * e.weight.unsigned_abs() as f64).sum()
    }

    pub fn coarse_grid(&self) -> Result<GridSpec> {
        let counts = self.counts.ok_or_else(|| Error::InvalidInput("vorticity without lattice counts".into()))?;
        GridSpec::new(counts, self.cell_size, self.offset, self.boundary.unwrap_or(Boundary::Periodic))
    }

    /// Face fluxes `pi * d_Q` stored as densities on the coarse grid.
    pub fn as_form2(&self) -> Result<Form2> {
        let g = self.coarse_grid()?;
        let mut q = Form2::zeros(g);
        let inv_area = 1.0 / (self.cell_size * self.cell_size);
        for e in &self.dual_edges {
            q.comps[e.axis][g.index(e.i, e.j, e.k)] = PI * e.weight as f64 * inv_area;
        }
        Ok(q)
    }

    /// Dual edges as weighted segments between coarse cell centres.
    pub fn segments(&self) -> Vec<(Segment, f64)> {
        let l = self.cell_size;
        self.dual_edges
            .iter()
            .map(|e| {
                let (b, c) = cyclic(e.axis);
                let m = [e.i, e.j, e.k];
                let mut p = Vec3::from(self.offset);
                for a in 0..3 {
                    p[a] += m[a] as f64 * l;
                }
                p[b] += 0.5 * l;
                p[c] += 0.5 * l;
                let mut s = p;
                let mut t = p;
                s[e.axis] -= 0.5 * l;
                t[e.axis] += 0.5 * l;
                (Segment::new(s, t), PI * e.weight as f64)
            })
            .collect()
    }
}

pub fn extract_vorticity(u: &ComplexField, lattice: &CoarseLattice, min_modulus: f64) -> Result<DiscreteVorticity> {
    if lattice.fine != u.grid {
        return Err(Error::InvalidInput("lattice built on a different grid".into()));
    }
    let faces = lattice.faces();
    let degrees: Vec<Option<i64>> = faces.par_iter().map(|f| plaquette_degree(u, lattice, f, min_modulus)).collect();
    let bad: Vec<CoarseFace> = faces.iter().zip(&degrees).filter(|(_, d)| d.is_none()).map(|(f, _)| *f).collect();
    if !bad.is_empty() {
        return Err(Error::ExtractionFailure { faces: bad });
    }
    let dual_edges = faces
        .iter()
        .zip(degrees)
        .filter_map(|(f, d)| {
            let w = d.unwrap();
            (w != 0).then_some(DualEdge { i: f.base[0], j: f.base[1], k: f.base[2], axis: f.normal, weight: w })
        })
        .collect();
    Ok(DiscreteVorticity {
        cell_size: lattice.cell_size(),
        offset: lattice.origin().into(),
        dual_edges,
        counts: Some(lattice.counts),
        boundary: Some(lattice.fine.boundary),
    })
}

/// Flat-norm distance between the lattice Jacobian `ju` (density 2-form on
/// the fine grid) and the extracted vorticity, with `nu`'s dual edges
/// rasterized onto the fine grid.
pub fn w11_gap(ju: &Form2, nu: &DiscreteVorticity, opts: &FlatNormOptions) -> Result<FlatNormEstimate> {
    let fine = ju.grid;
    let coarse = nu.coarse_grid()?;
    let ratio = nu.cell_size / fine.spacing;
    let cell = ratio.round();
    let compatible = (ratio - cell).abs() <= 1e-9 * ratio
        && cell >= 1.0
        && coarse.boundary == fine.boundary
        && (0..3).all(|a| {
            let off = (nu.offset[a] - fine.origin[a]) / fine.spacing;
            (off - off.round()).abs() <= 1e-9 * cell.max(off.abs())
                && (!fine.periodic() || coarse.dims[a] * cell as usize == fine.dims[a])
        });
    if !compatible {
        return Err(Error::InvalidInput("vorticity lattice does not refine to the field grid".into()));
    }
    let raster = rasterize_weighted(fine, &nu.segments(), RasterPolicy::Clip)?;
    let mut diff = ju.clone();
    diff.axpy(-1.0, &raster);
    flat_norm_form2(&diff, opts)
}

/// Random integer offsets in `[0, cell)^3`.
pub fn offset_candidates(cell: usize, count: usize, seed: u64) -> Vec<[usize; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| [0; 3].map(|_: usize| rng.random_range(0..cell))).collect()
}

/// Pointwise energy density at vertices from centred edge averages.
pub fn vertex_energy_density(u: &ComplexField, eps: f64, well: &dyn DoubleWell) -> Vec<f64> {
    let g = u.grid;
    let h2 = g.spacing * g.spacing;
    (0..g.len())
        .into_par_iter()
        .map(|i| {
            let mut grad = 0.0;
            for a in 0..3 {
                let mut s = 0.0;
                let mut n = 0.0;
                for dir in [1, -1] {
                    if let Some(j) = g.step(i, a, dir) {
                        s += (u.data[j] - u.data[i]).norm_sqr();
                        n += 1.0;
                    }
                }
                if n > 0.0 {
                    grad += s / (n * h2);
                }
            }
            0.5 * grad + well.eval(u.data[i].norm_sqr()) / (eps * eps)
        })
        .collect()
}

/// Energy on the coarse 2-skeleton plus `cell_size` times the 1-skeleton energy.
pub fn skeleton_energy(density: &[f64], lattice: &CoarseLattice) -> f64 {
    let g = lattice.fine;
    let h = g.spacing;
    let mut e2 = 0.0;
    let mut e1 = 0.0;
    for (i, &e) in density.iter().enumerate() {
        let c = g.coords(i);
        let on = (0..3)
            .filter(|&a| c[a] >= lattice.offset[a] && (c[a] - lattice.offset[a]) % lattice.cell == 0)
            .count();
        if on >= 1 {
            e2 += e * h * h;
        }
        if on >= 2 {
            e1 += e * h;
        }
    }
    e2 + lattice.cell_size() * e1
}

/// Candidate with the least skeleton energy; ties keep the earliest index.
pub fn choose_offset(u: &ComplexField, cell: usize, candidates: &[[usize; 3]], eps: f64) -> Result<CoarseLattice> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no offset candidates".into()));
    }
    let density = vertex_energy_density(u, eps, &StandardWell);
    let mut best: Option<(f64, CoarseLattice)> = None;
    for off in candidates {
        let lat = CoarseLattice::new(u.grid, cell, *off)?;
        let e = skeleton_energy(&density, &lat);
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, lat));
        }
    }
    Ok(best.unwrap().1)
}
