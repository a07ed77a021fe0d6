//! Recovery fields `u = rho * exp(i theta)` built from a quantized line
//! system and an exact momentum part, the limit functionals, and energy
//! sweeps across regimes.

mod curvature;
mod sweep;

pub use curvature::{curvature_residual, CurvatureReport};
pub use sweep::{gamma_sweep, GammaReport, GammaRow, Level, RingBundle, SweepConfig, Trends};

use crate::dec::ExteriorDerivative;
use crate::error::{Error, Result};
use crate::field::{energy, StandardWell};
use crate::geom::{point_segment_distance, Segment, Vec3};
use crate::grid::{cyclic, ComplexField, Form0, Form1, Form2, GridSpec};
use crate::potentials::{lattice_potential, LatticePotential, PoissonConfig, RasterPolicy};
use crate::vortex::VortexSystem;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::f64::consts::{PI, TAU};

/// Energy scaling `g_eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Regime {
    /// `g = |log eps|^kappa` with `1 < kappa < 2`.
    S1 { kappa: f64 },
    /// `g = |log eps|^2`.
    S2,
    /// `g = |log eps| / eps`.
    S3,
}

impl Regime {
    pub fn g(&self, eps: f64) -> f64 {
        let l = eps.ln().abs();
        match self {
            Regime::S1 { kappa } => l.powf(*kappa),
            Regime::S2 => l * l,
            Regime::S3 => l / eps,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::S1 { .. } => "s1",
            Regime::S2 => "s2",
            Regime::S3 => "s3",
        }
    }
}

/// `eta = |log eps|^-eta_exp`, `delta = |log eps|^-delta_exp`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default = "default_eta_exp")]
    pub eta_exp: f64,
    #[serde(default = "default_delta_exp")]
    pub delta_exp: f64,
}

fn default_eta_exp() -> f64 {
    0.25
}

fn default_delta_exp() -> f64 {
    0.125
}

impl Default for Schedule {
    fn default() -> Self {
        Self { eta_exp: default_eta_exp(), delta_exp: default_delta_exp() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryParams {
    pub eps: f64,
    pub regime: Regime,
    #[serde(default)]
    pub schedule: Schedule,
}

impl RecoveryParams {
    pub fn new(eps: f64, regime: Regime) -> Self {
        Self { eps, regime, schedule: Schedule::default() }
    }

    pub fn g(&self) -> f64 {
        self.regime.g(self.eps)
    }

    /// Momentum weight `g^-1/2`.
    pub fn h(&self) -> f64 {
        self.g().powf(-0.5)
    }

    /// Line weight in the subcritical regime, `|log eps| / g`.
    pub fn h_prime(&self) -> f64 {
        self.eps.ln().abs() / self.g()
    }

    /// Weight carried by each vortex line.
    pub fn line_weight(&self) -> f64 {
        match self.regime {
            Regime::S1 { .. } => self.h_prime(),
            _ => self.h(),
        }
    }

    pub fn eta(&self) -> f64 {
        self.eps.ln().abs().powf(-self.schedule.eta_exp)
    }

    pub fn delta(&self) -> f64 {
        self.eps.ln().abs().powf(-self.schedule.delta_exp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if let Regime::S1 { kappa } = self.regime {
            if !(kappa > 1.0 && kappa < 2.0) {
                return Err(Error::InvalidParameter(format!("s1 exponent must lie in (1, 2), got {kappa}")));
            }
            let ratio = self.h() / self.h_prime();
            if ratio >= 0.5 {
                return Err(Error::ParameterRejection(format!(
                    "h / h' = {ratio:.3} is not small at eps = {}; decrease eps or kappa",
                    self.eps
                )));
            }
        }
        let eta = self.eta();
        if self.h() >= eta * eta {
            return Err(Error::ParameterRejection(format!("h = {} is not below eta^2 = {}", self.h(), eta * eta)));
        }
        Ok(())
    }
}

/// Distances from `n` points to the segments, capped at `cap`.
pub fn capped_distances(segs: &[Segment], cap: f64, n: usize, point: impl Fn(usize) -> Vec3 + Sync) -> Vec<f64> {
    if segs.is_empty() || !(cap > 0.0) {
        return vec![cap.max(0.0); n];
    }
    let key = |x: Vec3| [(x.x / cap).floor() as i64, (x.y / cap).floor() as i64, (x.z / cap).floor() as i64];
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (s, seg) in segs.iter().enumerate() {
        let (a, b) = (seg.start(), seg.end());
        let pieces = ((b - a).norm() / cap).ceil().max(1.0) as usize;
        for p in 0..pieces {
            let x0 = a + (b - a) * (p as f64 / pieces as f64);
            let x1 = a + (b - a) * ((p + 1) as f64 / pieces as f64);
            let lo = key(x0.inf(&x1).add_scalar(-cap));
            let hi = key(x0.sup(&x1).add_scalar(cap));
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let list = buckets.entry([i, j, k]).or_default();
                        if list.last() != Some(&s) {
                            list.push(s);
                        }
                    }
                }
            }
        }
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = point(i);
            let mut d = cap;
            if let Some(list) = buckets.get(&key(x)) {
                for &s in list {
                    d = d.min(point_segment_distance(x, segs[s].start(), segs[s].end()));
                }
            }
            d
        })
        .collect()
}

/// `rho = min(dist(x, Gamma) / eps, 1)` at the vertices.
pub fn modulus_profile(grid: GridSpec, gamma: &VortexSystem, eps: f64) -> Result<Form0> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let d = capped_distances(&gamma.segments, eps, grid.len(), |i| grid.vertex_position(i));
    Ok(Form0 { grid, data: d.into_iter().map(|x| x / eps).collect() })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeOrder {
    #[default]
    Bfs,
    Dfs,
}

/// Largest admissible distance of an unpierced circulation from `2 pi Z`.
pub const DEFECT_TOLERANCE: f64 = 0.05 * TAU;

/// Unit field `exp(i theta)` with `theta` integrated from the edge phase
/// densities `a` along a spanning tree rooted at vertex 0. Faces where
/// `pierced` is nonzero may carry any circulation; elsewhere circulations
/// must be multiples of `2 pi`.
pub fn phase_assemble(a: &Form1, pierced: Option<&Form2>, order: TreeOrder) -> Result<ComplexField> {
    let g = a.grid;
    let dx = g.spacing;
    let curl = a.d();
    for n in 0..3 {
        for i in 0..g.len() {
            if !g.face_valid(n, i) || pierced.is_some_and(|p| p.comps[n][i] != 0.0) {
                continue;
            }
            let c = curl.comps[n][i] * dx * dx;
            let defect = (c - TAU * (c / TAU).round()).abs();
            if defect > DEFECT_TOLERANCE {
                return Err(Error::CirculationDefect { axis: n, vertex: i, defect });
            }
        }
    }
    let mut theta = vec![f64::NAN; g.len()];
    let mut frontier = VecDeque::new();
    theta[0] = 0.0;
    frontier.push_back(0usize);
    while let Some(v) = match order {
        TreeOrder::Bfs => frontier.pop_front(),
        TreeOrder::Dfs => frontier.pop_back(),
    } {
        for axis in 0..3 {
            if let Some(w) = g.step(v, axis, 1).filter(|_| g.edge_valid(axis, v)) {
                if theta[w].is_nan() {
                    theta[w] = theta[v] + a.comps[axis][v] * dx;
                    frontier.push_back(w);
                }
            }
            if let Some(w) = g.step(v, axis, -1).filter(|&w| g.edge_valid(axis, w)) {
                if theta[w].is_nan() {
                    theta[w] = theta[v] - a.comps[axis][w] * dx;
                    frontier.push_back(w);
                }
            }
        }
    }
    Ok(ComplexField { grid: g, data: theta.into_iter().map(|t| Complex64::from_polar(1.0, t)).collect() })
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub u: ComplexField,
    pub rho: Form0,
    /// Edge phase densities integrated into the phase.
    pub phase: Form1,
    pub potential: Option<LatticePotential>,
}

/// `u = rho_eps * exp(i 2 pi (phi + alpha / h))`: `phi` integrates the
/// lattice potential of `gamma` divided by its weight, `alpha` is the
/// exact momentum potential (`p = d alpha`) and `h = g^-1/2`.
pub fn recovery_field(
    grid: GridSpec,
    gamma: &VortexSystem,
    alpha: Option<&Form0>,
    params: &RecoveryParams,
) -> Result<Recovery> {
    params.validate()?;
    gamma.validate()?;
    let mut phase = Form1::zeros(grid);
    let mut potential = None;
    if !gamma.is_empty() {
        let lp = lattice_potential(&extend_boundary_ends(gamma, &grid), grid, RasterPolicy::Clip, &PoissonConfig::default())?;
        phase.axpy(TAU / gamma.h, &lp.v);
        potential = Some(lp);
    }
    if let Some(al) = alpha {
        crate::grid::check_same(&al.grid, &grid)?;
        phase.axpy(TAU / params.h(), &al.d());
    }
    let v = phase_assemble(&phase, potential.as_ref().map(|p| &p.raster), TreeOrder::Bfs)?;
    let rho = modulus_profile(grid, gamma, params.eps)?;
    let u = ComplexField { grid, data: v.data.iter().zip(&rho.data).map(|(z, r)| z * *r).collect() };
    Ok(Recovery { u, rho, phase, potential })
}

/// Open curves ending on the box boundary, continued one cell outward so
/// their raster closes through the boundary faces.
pub fn extend_boundary_ends(gamma: &VortexSystem, grid: &GridSpec) -> VortexSystem {
    let mut out = gamma.clone();
    if grid.periodic() {
        return out;
    }
    let lo = Vec3::from(grid.origin);
    let hi = lo + Vec3::from(grid.extent());
    let tol = 1e-9 * grid.spacing;
    let on_boundary = |x: Vec3| (0..3).any(|a| (x[a] - lo[a]).abs() <= tol || (x[a] - hi[a]).abs() <= tol);
    for l in &gamma.loops {
        let (first, last) = (l[0], l[l.len() - 1]);
        if gamma.segments[first].a == gamma.segments[last].b {
            continue;
        }
        let s = gamma.segments[first];
        if on_boundary(s.start()) {
            out.segments[first] = Segment::new(s.start() - s.tangent() * grid.spacing, s.end());
        }
        let s = out.segments[last];
        if on_boundary(s.end()) {
            out.segments[last] = Segment::new(s.start(), s.end() + s.tangent() * grid.spacing);
        }
    }
    out
}

/// Energy split by distance of the cell centre to the lines: tube
/// `d <= eps`, annulus `eps < d <= r`, and the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySplit {
    pub total: f64,
    pub core: f64,
    pub interaction: f64,
    pub momentum: f64,
    /// Potential part `int W / eps^2`, contained in the three terms above.
    pub potential: f64,
    pub radius: f64,
}

pub fn energy_split(u: &ComplexField, gamma: &VortexSystem, eps: f64, radius: f64) -> Result<EnergySplit> {
    let g = u.grid;
    let r = radius.max(eps);
    let rep = energy(u, eps, &StandardWell, None)?;
    let dist = capped_distances(&gamma.segments, 2.0 * r, g.len(), |i| g.cell_center(i));
    let vol = g.spacing.powi(3);
    let (mut core, mut inter, mut mom) = (0.0, 0.0, 0.0);
    for i in 0..g.len() {
        if !g.cell_valid(i) {
            continue;
        }
        let e = rep.density.data[i];
        if dist[i] <= eps {
            core += e;
        } else if dist[i] <= r {
            inter += e;
        } else {
            mom += e;
        }
    }
    Ok(EnergySplit {
        total: rep.total,
        core: core * vol,
        interaction: inter * vol,
        momentum: mom * vol,
        potential: rep.potential,
        radius: r,
    })
}

/// Smallest distance between segments of different loops.
pub fn loop_separation(gamma: &VortexSystem) -> f64 {
    let mut owner = vec![usize::MAX; gamma.segments.len()];
    for (l, segs) in gamma.loops.iter().enumerate() {
        for &s in segs {
            owner[s] = l;
        }
    }
    crate::lines::min_distance_where(&gamma.segments, |i, j| owner[i] == owner[j])
}

/// Vorticity argument of the limit energy.
#[derive(Clone, Copy, Debug)]
pub enum LimitVorticity<'a> {
    None,
    /// Unit-multiplicity lines: `pi` per unit length.
    Lines(&'a VortexSystem),
    Measure(&'a Form2),
}

/// `||J|| + ||v||^2 / 2`.
pub fn limit_energy(j: LimitVorticity, v: Option<&Form1>) -> f64 {
    let mass = match j {
        LimitVorticity::None => 0.0,
        LimitVorticity::Lines(s) => PI * s.total_length(),
        LimitVorticity::Measure(q) => q.mass(),
    };
    mass + 0.5 * v.map_or(0.0, |v| v.dot(v))
}

/// `||dv|| / 2 + ||v - A||^2 / 2 + ||dA - dA_ex||^2 / 2`, infinite when
/// `||dv||` exceeds `mass_cap`.
pub fn limit_f(v: &Form1, a: &Form1, a_ex: &Form1, mass_cap: f64) -> Result<f64> {
    crate::grid::check_same(&v.grid, &a.grid)?;
    crate::grid::check_same(&v.grid, &a_ex.grid)?;
    let dv = v.d().mass();
    if dv > mass_cap {
        return Ok(f64::INFINITY);
    }
    let mut diff = v.clone();
    diff.axpy(-1.0, a);
    let mut curl = a.d();
    curl.axpy(-1.0, &a_ex.d());
    Ok(0.5 * dv + 0.5 * diff.dot(&diff) + 0.5 * curl.dot(&curl))
}

/// Exact potential `alpha = v0 . x / (2 pi)` of a constant momentum `v0`.
pub fn constant_momentum_potential(grid: GridSpec, v0: [f64; 3]) -> Form0 {
    let v = Vec3::from(v0);
    Form0::from_fn(grid, |i| v.dot(&grid.vertex_position(i)) / TAU)
}

/// Plaquette winding numbers of the edge phases of `u`, for diagnostics.
pub fn plaquette_windings(u: &ComplexField) -> Form2 {
    let g = u.grid;
    let mut out = Form2::zeros(g);
    let arg = |i: usize, j: usize| (u.data[i].conj() * u.data[j]).arg();
    for n in 0..3 {
        let (b, c) = cyclic(n);
        for i in 0..g.len() {
            if !g.face_valid(n, i) {
                continue;
            }
            let (Some(ib), Some(ic)) = (g.step(i, b, 1), g.step(i, c, 1)) else { continue };
            let Some(ibc) = g.step(ib, c, 1) else { continue };
            let w = arg(i, ib) + arg(ib, ibc) + arg(ibc, ic) + arg(ic, i);
            out.comps[n][i] = (w / TAU).round();
        }
    }
    out
}

#[cfg(test)]
mod tests;
