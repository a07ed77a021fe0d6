//! Energy sweeps over `eps` for a smeared ring of vorticity.

use super::{constant_momentum_potential, energy_split, loop_separation, recovery_field, Regime, RecoveryParams, Schedule};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grid::{Boundary, GridSpec};
use crate::potentials::{lattice_potential, PoissonConfig, RasterPolicy};
use crate::vortex::VortexSystem;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform vorticity `flux / (pi a^2)` in the solid torus of major radius
/// `radius` and cross-section radius `a`, circulating about `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingBundle {
    pub center: [f64; 3],
    pub radius: f64,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    pub cross_section: f64,
    /// Total flux of `dp` through a meridian half-plane.
    pub flux: f64,
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl RingBundle {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.cross_section > 0.0 && self.cross_section < self.radius) {
            return Err(Error::InvalidParameter("ring needs 0 < cross_section < radius".into()));
        }
        if !(self.flux > 0.0 && self.flux.is_finite()) {
            return Err(Error::InvalidParameter("ring flux must be positive".into()));
        }
        if Vec3::from(self.axis).norm() == 0.0 {
            return Err(Error::InvalidParameter("ring axis must be nonzero".into()));
        }
        Ok(())
    }

    /// `count` rings of weight `flux / count` at sunflower points of the
    /// cross-section disc, polygons with sides of about `spacing`.
    pub fn rings(&self, count: usize, spacing: f64) -> VortexSystem {
        let h = self.flux / count as f64;
        let golden = PI * (3.0 - 5f64.sqrt());
        let n = Vec3::from(self.axis).normalize();
        let mut out = VortexSystem::new(h);
        for k in 0..count {
            let r = self.cross_section * ((k as f64 + 0.5) / count as f64).sqrt();
            let t = golden * k as f64;
            let radius = self.radius + r * t.cos();
            let center = Vec3::from(self.center) + n * (r * t.sin());
            let sides = (((std::f64::consts::TAU * radius / spacing).ceil() as usize).div_ceil(4) * 4).max(32);
            out.merge(&VortexSystem::circle(center, radius, n, sides, h));
        }
        out
    }

    /// `||dp||_1` of the smooth bundle (Pappus).
    pub fn vorticity_mass(&self) -> f64 {
        2.0 * PI * self.radius * self.flux
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level {
    pub eps: f64,
    /// Vertices per side of the unit box grid.
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub bundle: Option<RingBundle>,
    /// Constant exact part `v0` of the momentum.
    #[serde(default)]
    pub momentum: [f64; 3],
    pub regime: Regime,
    #[serde(default)]
    pub schedule: Schedule,
    pub levels: Vec<Level>,
    /// Interaction annulus radius as a fraction of the ring separation.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Rings used for the reference momentum of the smooth bundle.
    #[serde(default = "default_reference_rings")]
    pub reference_rings: usize,
}

fn default_mu() -> f64 {
    0.5
}

fn default_reference_rings() -> usize {
    160
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub eps: f64,
    pub n: usize,
    pub g: f64,
    pub h: f64,
    /// Weight actually carried by each ring, `flux / rings`.
    pub weight: f64,
    pub rings: usize,
    pub energy: f64,
    pub energy_over_g: f64,
    pub core_over_g: f64,
    pub interaction_over_g: f64,
    pub momentum_over_g: f64,
    pub potential_over_g: f64,
    /// `(core + interaction) / energy`.
    pub vorticity_share: f64,
    /// `int W / eps^2` over the energy.
    pub w_ratio: f64,
    /// `|E/g - limit| / limit`.
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    pub gap_non_increasing: bool,
    pub w_ratio_decreasing: bool,
    pub vorticity_share_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub regime: String,
    pub limit: f64,
    pub limit_vorticity: f64,
    pub limit_momentum: f64,
    pub rows: Vec<GammaRow>,
    pub trends: Trends,
}

fn unit_box(n: usize) -> Result<GridSpec> {
    if n < 4 {
        return Err(Error::InvalidParameter("levels need at least 4 vertices per side".into()));
    }
    GridSpec::new([n; 3], 1.0 / (n - 1) as f64, [0.0; 3], Boundary::Box)
}

/// `2 pi^2 ||p||^2` for the smooth bundle, from a dense ring sampling.
fn bundle_momentum(b: &RingBundle, n: usize, rings: usize) -> Result<f64> {
    let grid = unit_box(n)?;
    let sys = b.rings(rings.max(1), grid.spacing);
    let lp = lattice_potential(&sys, grid, RasterPolicy::Clip, &PoissonConfig::default())?;
    Ok(2.0 * PI * PI * lp.v.dot(&lp.v))
}

fn run_level(cfg: &SweepConfig, level: &Level, limit: f64) -> Result<GammaRow> {
    let params = RecoveryParams { eps: level.eps, regime: cfg.regime, schedule: cfg.schedule };
    params.validate()?;
    let grid = unit_box(level.n)?;
    let g = params.g();
    let (gamma, rings) = match &cfg.bundle {
        Some(b) => {
            let k = (b.flux / params.line_weight() - 1e-9).ceil().max(1.0) as usize;
            (b.rings(k, grid.spacing), k)
        }
        None => (VortexSystem::new(params.line_weight()), 0),
    };
    let alpha = (cfg.momentum != [0.0; 3]).then(|| constant_momentum_potential(grid, cfg.momentum));
    let rec = recovery_field(grid, &gamma, alpha.as_ref(), &params)?;
    let sep = if rings > 1 { loop_separation(&gamma) } else { 1.0 };
    let split = energy_split(&rec.u, &gamma, level.eps, cfg.mu * sep)?;
    let e = split.total;
    let over_g = e / g;
    let gap = if limit > 0.0 { (over_g - limit).abs() / limit } else { over_g.abs() };
    let ratio = |x: f64| if e > 0.0 { x / e } else { 0.0 };
    Ok(GammaRow {
        eps: level.eps,
        n: level.n,
        g,
        h: params.h(),
        weight: gamma.h,
        rings,
        energy: e,
        energy_over_g: over_g,
        core_over_g: split.core / g,
        interaction_over_g: split.interaction / g,
        momentum_over_g: split.momentum / g,
        potential_over_g: split.potential / g,
        vorticity_share: ratio(split.core + split.interaction),
        w_ratio: ratio(split.potential),
        gap,
        error: None,
    })
}

/// Energy of the recovery construction at each level next to the limit
/// `||J|| + ||v||^2 / 2` of the smooth data.
pub fn gamma_sweep(cfg: &SweepConfig) -> Result<GammaReport> {
    if cfg.levels.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one level".into()));
    }
    if let Some(b) = &cfg.bundle {
        b.validate()?;
    }
    let v0 = Vec3::from(cfg.momentum);
    let exact = 0.5 * v0.norm_squared();
    let (limit_vorticity, coexact) = match (&cfg.bundle, cfg.regime) {
        (None, _) => (0.0, 0.0),
        (Some(b), Regime::S1 { .. }) => (PI * b.vorticity_mass(), 0.0),
        (Some(b), reg) => {
            let finest = cfg.levels.iter().map(|l| l.n).max().unwrap();
            let m = bundle_momentum(b, finest, cfg.reference_rings)?;
            (if reg == Regime::S2 { PI * b.vorticity_mass() } else { 0.0 }, m)
        }
    };
    let limit_momentum = exact + coexact;
    let limit = limit_vorticity + limit_momentum;
    let mut levels = cfg.levels.clone();
    levels.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let rows: Vec<GammaRow> = levels
        .par_iter()
        .map(|l| {
            run_level(cfg, l, limit).unwrap_or_else(|e| GammaRow {
                eps: l.eps,
                n: l.n,
                g: cfg.regime.g(l.eps),
                h: f64::NAN,
                weight: f64::NAN,
                rings: 0,
                energy: f64::NAN,
                energy_over_g: f64::NAN,
                core_over_g: f64::NAN,
                interaction_over_g: f64::NAN,
                momentum_over_g: f64::NAN,
                potential_over_g: f64::NAN,
                vorticity_share: f64::NAN,
                w_ratio: f64::NAN,
                gap: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let ok: Vec<&GammaRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let pairs = |f: &dyn Fn(&GammaRow, &GammaRow) -> bool| ok.len() == rows.len() && ok.windows(2).all(|w| f(w[0], w[1]));
    let trends = Trends {
        gap_non_increasing: pairs(&|a, b| b.gap <= a.gap),
        w_ratio_decreasing: pairs(&|a, b| b.w_ratio < a.w_ratio),
        vorticity_share_decreasing: pairs(&|a, b| b.vorticity_share < a.vorticity_share),
    };
    Ok(GammaReport { regime: cfg.regime.name().into(), limit, limit_vorticity, limit_momentum, rows, trends })
}

#[cfg(test)]
pub(super) fn bundle_momentum_for_tests(b: &RingBundle, n: usize, rings: usize) -> Result<f64> {
    bundle_momentum(b, n, rings)
}
