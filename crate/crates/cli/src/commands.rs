//! One function per subcommand: load, run, write.

use crate::config::*;
use crate::output::{fmt_f64, OutDir};
use anyhow::{anyhow, bail, Context, Result};
use gl3d::binio::{read_field, Field};
use gl3d::dec::ExteriorDerivative;
use gl3d::extract::{choose_offset, extract_vorticity, offset_candidates, w11_gap, CoarseLattice};
use gl3d::field::{energy, jacobian_smooth, modulus_defect, StandardWell};
use gl3d::lines::{discretize, verify_properties, PropertyReport, VerifyOptions};
use gl3d::mincon::minimal_connection;
use gl3d::pl::{unit_block, PLOneForm, PLOneFormJson};
use gl3d::potentials::{biot_savart_field, biot_savart_system, hodge_decompose, linking_number, Linking};
use gl3d::rational::Q;
use gl3d::recovery::{constant_momentum_potential, curvature_residual, gamma_sweep, recovery_field, RecoveryParams, SweepConfig};
use gl3d::{ComplexField, Form0, Form1, Vec3};
use serde::Serialize;
use std::f64::consts::TAU;
use std::path::Path;
use std::str::FromStr;

/// Binary field with its grid origin restored from the `<file>.json`
/// sidecar when one sits next to it; the binary header has no origin.
fn read_any(path: &Path) -> Result<Field> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut field = read_field(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let sidecar = path.with_file_name(format!("{name}.json"));
    if let Ok(text) = std::fs::read_to_string(&sidecar) {
        let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("reading {}", sidecar.display()))?;
        let g: gl3d::GridSpec =
            serde_json::from_value(v["grid"].clone()).with_context(|| format!("grid in {}", sidecar.display()))?;
        let cur = field.grid();
        if g.dims != cur.dims || g.spacing != cur.spacing || g.boundary != cur.boundary {
            bail!("{} describes a different grid than {}", sidecar.display(), path.display());
        }
        match &mut field {
            Field::Complex(u) => u.grid.origin = g.origin,
            Field::Form1(w) => w.grid.origin = g.origin,
            Field::Form2(q) => q.grid.origin = g.origin,
            Field::Form3(r) => r.grid.origin = g.origin,
        }
    }
    Ok(field)
}

fn read_complex(path: &Path) -> Result<ComplexField> {
    match read_any(path)? {
        Field::Complex(u) => Ok(u),
        _ => bail!("{} does not hold a complex field", path.display()),
    }
}

fn read_form1(path: &Path) -> Result<Form1> {
    match read_any(path)? {
        Field::Form1(w) => Ok(w),
        _ => bail!("{} does not hold a 1-form", path.display()),
    }
}

fn system_segments(s: &gl3d::VortexSystem) -> Vec<([f64; 3], [f64; 3], f64)> {
    s.segments.iter().map(|g| (g.a, g.b, s.h)).collect()
}

#[derive(Serialize)]
struct SynthesizeSummary {
    grid: gl3d::GridSpec,
    eps: f64,
    g: f64,
    h: f64,
    line_weight: f64,
    segments: usize,
    loops: usize,
    min_modulus: f64,
    field: &'static str,
}

pub fn synthesize(cfg: &Loaded<SynthesizeConfig>, out: &OutDir) -> Result<()> {
    let c = &cfg.config;
    let grid = c.grid.spec().context("grid")?;
    let params = RecoveryParams { eps: c.eps, regime: c.regime, schedule: c.schedule };
    params.validate().context("stage parameters")?;
    let gamma = build_system(cfg, &c.filaments, params.line_weight())?;
    let alpha = (c.momentum != [0.0; 3]).then(|| constant_momentum_potential(grid, c.momentum));
    let rec = recovery_field(grid, &gamma, alpha.as_ref(), &params).context("stage recovery")?;
    out.field("field.bin", &Field::Complex(rec.u.clone()))?;
    if !gamma.is_empty() {
        out.vtk_lines("filaments.vtk", &system_segments(&gamma))?;
    }
    out.json(
        "synthesize.json",
        &SynthesizeSummary {
            grid,
            eps: params.eps,
            g: params.g(),
            h: params.h(),
            line_weight: params.line_weight(),
            segments: gamma.segments.len(),
            loops: gamma.loops.len(),
            min_modulus: rec.u.data.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min),
            field: "field.bin",
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ExtractSummary {
    cell: usize,
    offset: [usize; 3],
    mass: f64,
    pierced: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    w11_gap: Option<gl3d::mincon::flat::FlatNormEstimate>,
    vorticity: gl3d::extract::DiscreteVorticity,
}

pub fn extract(cfg: &Loaded<ExtractConfig>, out: &OutDir) -> Result<()> {
    let c = &cfg.config;
    let u = read_complex(&cfg.resolve(&c.field))?;
    let lattice = match c.offset {
        Some(off) => CoarseLattice::new(u.grid, c.cell, off)?,
        None => {
            let eps = c.eps.ok_or_else(|| anyhow!("field `eps` is required when `offset` is absent"))?;
            let cands = offset_candidates(c.cell, c.candidates, out.provenance.seed);
            choose_offset(&u, c.cell, &cands, eps).context("stage offset selection")?
        }
    };
    let nu = extract_vorticity(&u, &lattice, c.min_modulus).context("stage extraction")?;
    let gap = match &c.flat {
        Some(opts) => Some(w11_gap(&jacobian_smooth(&u), &nu, opts).context("stage flat norm")?),
        None => None,
    };
    let segs: Vec<_> = nu.segments().into_iter().map(|(s, w)| (s.a, s.b, w)).collect();
    out.vtk_lines("vorticity.vtk", &segs)?;
    out.json(
        "vorticity.json",
        &ExtractSummary {
            cell: c.cell,
            offset: lattice.offset,
            mass: nu.mass(),
            pierced: nu.dual_edges.len(),
            w11_gap: gap,
            vorticity: nu,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct EnergySummary {
    eps: f64,
    total: f64,
    kinetic: f64,
    potential: f64,
    modulus_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy_over_g: Option<f64>,
}

pub fn energy_cmd(cfg: &Loaded<EnergyConfig>, out: &OutDir) -> Result<()> {
    let c = &cfg.config;
    let u = read_complex(&cfg.resolve(&c.field))?;
    let e = energy(&u, c.eps, &StandardWell, None).context("stage energy")?;
    let g = c.regime.map(|r| r.g(c.eps));
    out.json(
        "energy.json",
        &EnergySummary {
            eps: c.eps,
            total: e.total,
            kinetic: e.total - e.potential,
            potential: e.potential,
            modulus_defect: modulus_defect(&u),
            g,
            energy_over_g: g.map(|g| e.total / g),
        },
    )?;
    Ok(())
}

fn rational(s: &str) -> Result<Q> {
    Q::from_str(s.trim()).map_err(|_| anyhow!("bad rational {s:?}"))
}

fn load_form(cfg: &Loaded<DiscretizeConfig>) -> Result<PLOneForm> {
    match &cfg.config.form {
        FormSource::Linear { block, a, b } => {
            if *block < 1 {
                bail!("field `block` must be positive");
            }
            let mut aq: [gl3d::rational::Q3; 3] = Default::default();
            for c in 0..3 {
                for j in 0..3 {
                    aq[c][j] = rational(&a[c][j])?;
                }
            }
            let mut bq: gl3d::rational::Q3 = Default::default();
            if let Some(b) = b {
                for c in 0..3 {
                    bq[c] = rational(&b[c])?;
                }
            }
            Ok(PLOneForm::from_linear(unit_block(*block)?, aq, bq))
        }
        FormSource::File { path } => {
            let p = cfg.resolve(path);
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            let j: PLOneFormJson = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok(PLOneForm::from_json(&j)?)
        }
    }
}

#[derive(Serialize)]
struct DiscretizeOut<'a> {
    summary: &'a gl3d::lines::DiscretizeSummary,
    total_variation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    properties: Option<PropertyReport>,
    system: &'a gl3d::VortexSystem,
}

pub fn discretize_cmd(cfg: &Loaded<DiscretizeConfig>, out: &OutDir) -> Result<()> {
    let p = load_form(cfg).context("stage form")?;
    let params = cfg.config.params();
    let d = discretize(&p, &params).context("stage discretization")?;
    let properties = if cfg.config.verify {
        Some(verify_properties(&d.system, &p, d.summary.eta, &VerifyOptions::default()).context("stage verification")?)
    } else {
        None
    };
    out.vtk_lines("lines.vtk", &system_segments(&d.system))?;
    out.json(
        "discretize.json",
        &DiscretizeOut { summary: &d.summary, total_variation: p.total_variation(), properties, system: &d.system },
    )?;
    Ok(())
}

pub fn mincon(cfg: &Loaded<MinconConfig>, out: &OutDir) -> Result<()> {
    let c = &cfg.config;
    let pos: Vec<Vec3> = c.positive.iter().map(|p| Vec3::from(*p)).collect();
    let neg: Vec<Vec3> = c.negative.iter().map(|p| Vec3::from(*p)).collect();
    let conn = minimal_connection(&pos, &neg, &c.mode).context("stage minimal connection")?;
    out.json("mincon.json", &conn)?;
    Ok(())
}

fn waves_potential(grid: gl3d::GridSpec, waves: &[Wave]) -> Form0 {
    let len = grid.extent();
    Form0::from_fn(grid, |i| {
        let x = grid.vertex_position(i);
        waves
            .iter()
            .map(|w| {
                let ph: f64 = (0..3).map(|a| TAU * w.k[a] as f64 * (x[a] - grid.origin[a]) / len[a]).sum();
                w.amplitude * ph.cos()
            })
            .sum()
    })
}

fn hodge_input(cfg: &Loaded<HodgeConfig>) -> Result<Form1> {
    match &cfg.config.source {
        HodgeSource::File { path } => read_form1(&cfg.resolve(path)),
        HodgeSource::Gradient { grid, waves } => {
            let g = grid.spec()?;
            Ok(waves_potential(g, waves).d())
        }
        HodgeSource::Mixed { grid, waves, constant, swirl } => {
            let g = grid.spec()?;
            let mut p = waves_potential(g, waves).d();
            let ly = g.extent()[1];
            let extra = Form1::from_fn(g, |a, i| {
                let y = g.edge_midpoint(a, i)[1] - g.origin[1];
                constant[a] + if a == 0 { swirl * (TAU * y / ly).sin() } else { 0.0 }
            });
            p.axpy(1.0, &extra);
            Ok(p)
        }
    }
}

#[derive(Serialize)]
struct HodgeOut {
    report: gl3d::potentials::HodgeReport,
    norm_p: f64,
    norm_gamma: f64,
    norm_d_alpha: f64,
    norm_dstar_beta: f64,
}

pub fn hodge(cfg: &Loaded<HodgeConfig>, out: &OutDir) -> Result<()> {
    let p = hodge_input(cfg).context("stage input")?;
    let parts = hodge_decompose(&p, &cfg.config.poisson).context("stage hodge")?;
    let norm = |w: &Form1| w.dot(w).sqrt();
    if cfg.config.dump {
        out.field("gamma.bin", &Field::Form1(parts.gamma.clone()))?;
        out.field("d_alpha.bin", &Field::Form1(parts.d_alpha.clone()))?;
        out.field("dstar_beta.bin", &Field::Form1(parts.dstar_beta.clone()))?;
    }
    out.json(
        "hodge.json",
        &HodgeOut {
            report: parts.report(&p),
            norm_p: norm(&p),
            norm_gamma: norm(&parts.gamma),
            norm_d_alpha: norm(&parts.d_alpha),
            norm_dstar_beta: norm(&parts.dstar_beta),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct PointValue {
    x: [f64; 3],
    /// `None` on the filaments.
    field: Option<[f64; 3]>,
}

#[derive(Serialize)]
struct BiotOut {
    h: f64,
    segments: usize,
    points: Vec<PointValue>,
    linking: Vec<Linking>,
}

pub fn biot_savart(cfg: &Loaded<BiotSavartConfig>, out: &OutDir) -> Result<()> {
    let c = &cfg.config;
    let gamma = build_system(cfg, &c.filaments, c.h)?;
    let points = c
        .points
        .iter()
        .map(|x| PointValue { x: *x, field: biot_savart_system(&gamma, Vec3::from(*x)).map(Into::into) })
        .collect();
    let mut linking = Vec::new();
    for (k, probe) in c.probes.iter().enumerate() {
        let pts: Vec<Vec3> = probe.iter().map(|p| Vec3::from(*p)).collect();
        linking.push(linking_number(&pts, &gamma).with_context(|| format!("stage linking, probe {k}"))?);
    }
    if let Some(g) = &c.grid {
        let grid = g.spec().context("grid")?;
        out.field("biot_savart.bin", &Field::Form1(biot_savart_field(&gamma, &grid)))?;
    }
    out.json("biot_savart.json", &BiotOut { h: gamma.h, segments: gamma.segments.len(), points, linking })?;
    Ok(())
}

pub const GAMMA_COLUMNS: [&str; 16] = [
    "eps",
    "n",
    "g",
    "h",
    "weight",
    "rings",
    "energy",
    "energy_over_g",
    "core_over_g",
    "interaction_over_g",
    "momentum_over_g",
    "potential_over_g",
    "vorticity_share",
    "w_ratio",
    "gap",
    "error",
];

pub fn gamma_sweep_cmd(cfg: &Loaded<SweepConfig>, out: &OutDir) -> Result<()> {
    let report = gamma_sweep(&cfg.config).context("stage gamma sweep")?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![fmt_f64(r.eps), r.n.to_string(), fmt_f64(r.g), fmt_f64(r.h), fmt_f64(r.weight), r.rings.to_string()];
            v.extend(
                [
                    r.energy,
                    r.energy_over_g,
                    r.core_over_g,
                    r.interaction_over_g,
                    r.momentum_over_g,
                    r.potential_over_g,
                    r.vorticity_share,
                    r.w_ratio,
                    r.gap,
                ]
                .map(fmt_f64),
            );
            v.push(r.error.clone().unwrap_or_default());
            v
        })
        .collect();
    out.csv("gamma.csv", &GAMMA_COLUMNS, &rows)?;
    out.json("gamma.json", &report)?;
    if let Some(r) = report.rows.iter().find(|r| r.error.is_some()) {
        log::warn!("row eps = {} failed: {}", r.eps, r.error.as_deref().unwrap_or(""));
    }
    Ok(())
}

pub fn curvature(cfg: &Loaded<CurvatureConfig>, out: &OutDir) -> Result<()> {
    let c = &cfg.config;
    let (pts, closed) = c.filament.points()?;
    let j = Vec3::from(c.j);
    let rep = curvature_residual(&pts, closed, |_| j).context("stage curvature")?;
    out.json("curvature.json", &rep)?;
    Ok(())
}
