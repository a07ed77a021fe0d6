//! Poisson inverses, Hodge decomposition, Biot-Savart fields of polyline
//! systems and mollification.

mod biot;
mod mollify;
mod raster;
pub mod transform;

pub use biot::{
    biot_savart_field, biot_savart_segment, biot_savart_system, linking_number, Linking, GAUSS_LEGENDRE_8,
};
pub use mollify::{mollify, BumpKernel};
pub use raster::{rasterize, rasterize_weighted, RasterPolicy};
pub use transform::{AxisKind, Symbol};

use crate::dec::{Codifferential, ExteriorDerivative};
use crate::error::Result;
use crate::grid::{Form0, Form1, Form2, Form3, GridSpec};
use crate::vortex::VortexSystem;
use serde::{Deserialize, Serialize};
use transform::solve_component;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonConfig {
    #[serde(default)]
    pub symbol: Symbol,
}

/// Solution of `-Lap psi = f - P f` with `P` the projection onto the null
/// space; `removed` holds the projected-out mean per component.
#[derive(Clone, Debug)]
pub struct PoissonSolution<T> {
    pub psi: T,
    pub removed: Vec<f64>,
}

fn kinds(grid: &GridSpec, edge_axes: [bool; 3]) -> [AxisKind; 3] {
    if grid.periodic() {
        [AxisKind::Periodic; 3]
    } else {
        edge_axes.map(|e| if e { AxisKind::Edge } else { AxisKind::Vertex })
    }
}

pub trait Poisson: Sized {
    /// Inverse of the positive Laplacian `d d* + d* d` on this degree.
    fn poisson_inverse(&self, cfg: &PoissonConfig) -> Result<PoissonSolution<Self>>;
    /// The positive lattice Laplacian `d d* + d* d`.
    fn laplacian(&self) -> Self;
}

impl Poisson for Form0 {
    fn poisson_inverse(&self, cfg: &PoissonConfig) -> Result<PoissonSolution<Self>> {
        let mut psi = self.clone();
        let m = solve_component(&mut psi.data, &self.grid, kinds(&self.grid, [false; 3]), cfg.symbol)?;
        Ok(PoissonSolution { psi, removed: vec![m] })
    }
    fn laplacian(&self) -> Self {
        self.d().codiff()
    }
}

impl Poisson for Form1 {
    fn poisson_inverse(&self, cfg: &PoissonConfig) -> Result<PoissonSolution<Self>> {
        let mut psi = self.clone();
        let mut removed = Vec::with_capacity(3);
        for a in 0..3 {
            let mut e = [false; 3];
            e[a] = true;
            removed.push(solve_component(&mut psi.comps[a], &self.grid, kinds(&self.grid, e), cfg.symbol)?);
        }
        Ok(PoissonSolution { psi, removed })
    }
    fn laplacian(&self) -> Self {
        let mut out = self.codiff().d();
        out.axpy(1.0, &self.d().codiff());
        out
    }
}

impl Poisson for Form2 {
    fn poisson_inverse(&self, cfg: &PoissonConfig) -> Result<PoissonSolution<Self>> {
        let mut psi = self.clone();
        let mut removed = Vec::with_capacity(3);
        for n in 0..3 {
            let mut e = [true; 3];
            e[n] = false;
            removed.push(solve_component(&mut psi.comps[n], &self.grid, kinds(&self.grid, e), cfg.symbol)?);
        }
        Ok(PoissonSolution { psi, removed })
    }
    fn laplacian(&self) -> Self {
        let mut out = self.codiff().d();
        out.axpy(1.0, &self.d().codiff());
        out
    }
}

impl Poisson for Form3 {
    fn poisson_inverse(&self, cfg: &PoissonConfig) -> Result<PoissonSolution<Self>> {
        let mut psi = self.clone();
        let m = solve_component(&mut psi.data, &self.grid, kinds(&self.grid, [true; 3]), cfg.symbol)?;
        Ok(PoissonSolution { psi, removed: vec![m] })
    }
    fn laplacian(&self) -> Self {
        self.codiff().d()
    }
}

/// `p = gamma + d alpha + d* beta`.
#[derive(Clone, Debug)]
pub struct HodgeParts {
    pub gamma: Form1,
    pub alpha: Form0,
    pub beta: Form2,
    pub d_alpha: Form1,
    pub dstar_beta: Form1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HodgeReport {
    /// `|p - (gamma + d alpha + d* beta)| / |p|`.
    pub residual: f64,
    /// Pairwise inner products over `|p|^2`: (gamma, d alpha), (gamma, d* beta), (d alpha, d* beta).
    pub orthogonality: [f64; 3],
}

impl HodgeParts {
    pub fn report(&self, p: &Form1) -> HodgeReport {
        let norm2 = p.dot(p);
        let mut r = p.clone();
        r.axpy(-1.0, &self.gamma);
        r.axpy(-1.0, &self.d_alpha);
        r.axpy(-1.0, &self.dstar_beta);
        let rel = |x: f64| if norm2 > 0.0 { x / norm2 } else { x };
        HodgeReport {
            residual: if norm2 > 0.0 { (r.dot(&r) / norm2).sqrt() } else { r.dot(&r).sqrt() },
            orthogonality: [
                rel(self.gamma.dot(&self.d_alpha).abs()),
                rel(self.gamma.dot(&self.dstar_beta).abs()),
                rel(self.d_alpha.dot(&self.dstar_beta).abs()),
            ],
        }
    }
}

/// Hodge decomposition of a lattice 1-form. On the torus `gamma` is the
/// constant mode; on the box the first cohomology vanishes and `gamma = 0`.
pub fn hodge_decompose(p: &Form1, cfg: &PoissonConfig) -> Result<HodgeParts> {
    let g = p.grid;
    let alpha = p.codiff().poisson_inverse(cfg)?.psi;
    let beta = p.d().poisson_inverse(cfg)?.psi;
    let d_alpha = alpha.d();
    let dstar_beta = beta.codiff();
    let mut gamma = Form1::zeros(g);
    if g.periodic() {
        let n = g.len() as f64;
        for a in 0..3 {
            let mean = p.comps[a].iter().sum::<f64>() / n;
            gamma.comps[a].iter_mut().for_each(|x| *x = mean);
        }
    }
    Ok(HodgeParts { gamma, alpha, beta, d_alpha, dstar_beta })
}

/// Lattice potential of a polyline system: `v = d* L^-1 q` with `q` the
/// face-crossing raster.
#[derive(Clone, Debug)]
pub struct LatticePotential {
    pub raster: Form2,
    pub v: Form1,
    /// Mean flux per component removed by the periodic solve.
    pub removed: Vec<f64>,
}

pub fn lattice_potential(
    gamma: &VortexSystem,
    grid: GridSpec,
    policy: RasterPolicy,
    cfg: &PoissonConfig,
) -> Result<LatticePotential> {
    let raster = rasterize(grid, &gamma.segments, gamma.h, policy)?;
    let sol = raster.poisson_inverse(cfg)?;
    Ok(LatticePotential { v: sol.psi.codiff(), raster, removed: sol.removed })
}

/// `d* L^-1 q - BS(gamma)`: the part of the lattice field not captured by
/// the free-space kernel (background flux on the torus, boundary
/// correction on the box).
pub fn harmonic_correction(gamma: &VortexSystem, grid: GridSpec, cfg: &PoissonConfig) -> Result<Form1> {
    if gamma.is_empty() {
        return Ok(Form1::zeros(grid));
    }
    let mut v = lattice_potential(gamma, grid, RasterPolicy::Clip, cfg)?.v;
    v.axpy(-1.0, &biot_savart_field(gamma, &grid));
    Ok(v)
}
