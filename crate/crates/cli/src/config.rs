//! Versioned JSON run configurations.

use anyhow::{anyhow, bail, Context, Result};
use gl3d::lines::DiscretizeParams;
use gl3d::mincon::flat::FlatNormOptions;
use gl3d::mincon::ConnectionMode;
use gl3d::potentials::PoissonConfig;
use gl3d::recovery::{Regime, Schedule};
use gl3d::{Boundary, GridSpec, Vec3, VortexSystem};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u64 = 1;

/// A parsed config with its hash and the directory relative paths
/// resolve against.
pub struct Loaded<T> {
    pub config: T,
    pub hash: String,
    pub base: PathBuf,
}

impl<T> Loaded<T> {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

/// Parse `text` for `command`: the top level must carry
/// `schema_version`, everything else must match `T` exactly.
pub fn parse<T: DeserializeOwned>(command: &str, text: &str, base: PathBuf) -> Result<Loaded<T>> {
    let mut value: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
    let obj = value.as_object_mut().ok_or_else(|| anyhow!("config must be a JSON object"))?;
    match obj.remove("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(v) => bail!("field `schema_version`: unsupported value {v}, expected {SCHEMA_VERSION}"),
        None => bail!("missing field `schema_version`"),
    }
    // keys of serde_json maps are sorted, so this serialization is canonical
    let canonical = serde_json::to_vec(&value)?;
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update([0]);
    hasher.update(&canonical);
    let hash = hex::encode(hasher.finalize());
    let config = serde_json::from_value(value).map_err(|e| anyhow!("invalid {command} config: {e}"))?;
    Ok(Loaded { config, hash, base })
}

pub fn load<T: DeserializeOwned>(command: &str, path: &Path) -> Result<Loaded<T>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(command, &text, base)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: [usize; 3],
    pub spacing: f64,
    #[serde(default)]
    pub origin: [f64; 3],
    pub boundary: Boundary,
}

impl GridConfig {
    pub fn spec(&self) -> gl3d::Result<GridSpec> {
        GridSpec::new(self.dims, self.spacing, self.origin, self.boundary)
    }
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_sides() -> usize {
    64
}

fn default_trefoil_sides() -> usize {
    128
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilamentSpec {
    Line {
        a: [f64; 3],
        b: [f64; 3],
    },
    Polyline {
        points: Vec<[f64; 3]>,
        #[serde(default)]
        closed: bool,
    },
    Circle {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "z_axis")]
        axis: [f64; 3],
        #[serde(default = "default_sides")]
        sides: usize,
    },
    Trefoil {
        center: [f64; 3],
        scale: f64,
        #[serde(default = "default_trefoil_sides")]
        sides: usize,
    },
    /// A `VortexSystem` JSON file.
    System {
        path: PathBuf,
    },
}

/// Merge the filaments into one system of weight `h`.
pub fn build_system<T>(loaded: &Loaded<T>, specs: &[FilamentSpec], h: f64) -> Result<VortexSystem> {
    let mut out = VortexSystem::new(h);
    for (k, s) in specs.iter().enumerate() {
        let part = match s {
            FilamentSpec::Line { a, b } => VortexSystem::line(Vec3::from(*a), Vec3::from(*b), h),
            FilamentSpec::Polyline { points, closed } => {
                let mut v = VortexSystem::new(h);
                let pts: Vec<Vec3> = points.iter().map(|p| Vec3::from(*p)).collect();
                v.push_polyline(&pts, *closed);
                v
            }
            FilamentSpec::Circle { center, radius, axis, sides } => {
                if *sides < 3 || Vec3::from(*axis).norm() == 0.0 {
                    bail!("filament {k}: circle needs sides >= 3 and a nonzero axis");
                }
                VortexSystem::circle(Vec3::from(*center), *radius, Vec3::from(*axis), *sides, h)
            }
            FilamentSpec::Trefoil { center, scale, sides } => {
                if *sides < 3 {
                    bail!("filament {k}: trefoil needs sides >= 3");
                }
                VortexSystem::trefoil(Vec3::from(*center), *scale, *sides, h)
            }
            FilamentSpec::System { path } => {
                let p = loaded.resolve(path);
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                let mut v: VortexSystem =
                    serde_json::from_str(&text).with_context(|| format!("parsing vortex system {}", p.display()))?;
                v.h = h;
                v
            }
        };
        out.merge(&part);
    }
    out.validate().context("filaments")?;
    Ok(out)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub grid: GridConfig,
    pub eps: f64,
    pub regime: Regime,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub filaments: Vec<FilamentSpec>,
    /// Constant exact momentum `v0`.
    #[serde(default)]
    pub momentum: [f64; 3],
}

fn default_candidates() -> usize {
    gl3d::extract::DEFAULT_CANDIDATES
}

fn default_min_modulus() -> f64 {
    gl3d::extract::DEFAULT_MIN_MODULUS
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    /// Complex field in the binary format.
    pub field: PathBuf,
    /// Coarse cell size in fine spacings.
    pub cell: usize,
    /// Fixed offset; when absent the lowest-energy candidate is used.
    #[serde(default)]
    pub offset: Option<[usize; 3]>,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    /// Needed for the offset search and the flat-norm gap.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_min_modulus")]
    pub min_modulus: f64,
    /// When set, also report the flat-norm distance to the Jacobian.
    #[serde(default)]
    pub flat: Option<FlatNormOptions>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub field: PathBuf,
    pub eps: f64,
    /// Adds `g` and `E / g` to the report.
    #[serde(default)]
    pub regime: Option<Regime>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormSource {
    /// `sum_c (a[c] . x + b[c]) dx_c` on the block of `block^3` cubes of
    /// side `1/block`; entries are rationals like `"-1/4"`.
    Linear {
        block: i64,
        a: [[String; 3]; 3],
        #[serde(default)]
        b: Option<[String; 3]>,
    },
    /// A serialized PL form.
    File { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeConfig {
    pub form: FormSource,
    pub eta: f64,
    pub h: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Check mass, separation and angle properties.
    #[serde(default)]
    pub verify: bool,
}

fn default_tol() -> f64 {
    1e-3
}

impl DiscretizeConfig {
    pub fn params(&self) -> DiscretizeParams {
        DiscretizeParams { eta: self.eta, h: self.h, tol: self.tol }
    }
}

fn balanced() -> ConnectionMode {
    ConnectionMode::Balanced
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinconConfig {
    pub positive: Vec<[f64; 3]>,
    pub negative: Vec<[f64; 3]>,
    #[serde(default = "balanced")]
    pub mode: ConnectionMode,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wave {
    /// Integer wave vector in units of `2 pi / L`.
    pub k: [i64; 3],
    pub amplitude: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HodgeSource {
    /// A 1-form in the binary format.
    File { path: PathBuf },
    /// `p = d f` with `f = sum a cos(2 pi k . x / L)`.
    Gradient { grid: GridConfig, waves: Vec<Wave> },
    /// `p = d f + c` for a constant 1-form `c` plus a coexact swirl
    /// `s (sin(2 pi y / L) dx)`.
    Mixed { grid: GridConfig, waves: Vec<Wave>, constant: [f64; 3], swirl: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HodgeConfig {
    pub source: HodgeSource,
    #[serde(default)]
    pub poisson: PoissonConfig,
    /// Write the three parts as binary 1-forms.
    #[serde(default)]
    pub dump: bool,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiotSavartConfig {
    pub filaments: Vec<FilamentSpec>,
    #[serde(default = "unit_weight")]
    pub h: f64,
    /// Sample the field on this grid and write it as a binary 1-form.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    /// Closed probe polylines for linking numbers.
    #[serde(default)]
    pub probes: Vec<Vec<[f64; 3]>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "z_axis")]
        axis: [f64; 3],
        vertices: usize,
    },
    Polyline {
        points: Vec<[f64; 3]>,
        #[serde(default)]
        closed: bool,
    },
}

impl CurveSpec {
    pub fn points(&self) -> Result<(Vec<Vec3>, bool)> {
        match self {
            CurveSpec::Circle { center, radius, axis, vertices } => {
                let n = Vec3::from(*axis);
                if n.norm() == 0.0 {
                    bail!("circle axis must be nonzero");
                }
                let sys = VortexSystem::circle(Vec3::from(*center), *radius, n, *vertices, 1.0);
                Ok((sys.segments.iter().map(|s| s.start()).collect(), true))
            }
            CurveSpec::Polyline { points, closed } => Ok((points.iter().map(|p| Vec3::from(*p)).collect(), *closed)),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub filament: CurveSpec,
    /// Constant current `j` (a 1-form, identified with a vector).
    #[serde(default)]
    pub j: [f64; 3],
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mincon(text: &str) -> Result<Loaded<MinconConfig>> {
        parse("mincon", text, PathBuf::new())
    }

    #[test]
    fn schema_version_is_required() {
        let e = mincon(r#"{"positive": [], "negative": []}"#).err().unwrap();
        assert!(e.to_string().contains("schema_version"));
        let e = mincon(r#"{"schema_version": 9, "positive": [], "negative": []}"#).err().unwrap();
        assert!(e.to_string().contains("unsupported"));
    }

    #[test]
    fn unknown_fields_are_named() {
        let e = mincon(r#"{"schema_version": 1, "positive": [], "negative": [], "weights": 1}"#).err().unwrap();
        assert!(e.to_string().contains("weights"), "{e}");
        let e = parse::<SynthesizeConfig>(
            "synthesize",
            r#"{"schema_version": 1, "grid": {"dims": [4,4,4], "spacing": 0.25, "boundary": "box"},
                "eps": 0.1, "regime": {"kind": "s2"},
                "filaments": [{"kind": "line", "a": [0,0,0], "b": [1,1,1], "c": 2}]}"#,
            PathBuf::new(),
        )
        .err()
        .unwrap();
        assert!(format!("{e:#}").contains("`c`"), "{e:#}");
    }

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a = mincon(r#"{"schema_version": 1, "positive": [[0,0,0]], "negative": [[1,0,0]]}"#).unwrap();
        let b = mincon("{\"negative\":[[1,0,0]],\n \"positive\":[[0,0,0]], \"schema_version\":1}").unwrap();
        let c = mincon(r#"{"schema_version": 1, "positive": [[0,0,0]], "negative": [[2,0,0]]}"#).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
        assert_eq!(a.hash.len(), 64);
    }

    #[test]
    fn discretize_tolerance_defaults() {
        let l = parse::<DiscretizeConfig>(
            "discretize",
            r#"{"schema_version": 1, "form": {"kind": "linear", "block": 1,
                "a": [["0","-1/4","0"],["1/4","0","0"],["0","0","0"]]}, "eta": 0.2, "h": 0.125}"#,
            PathBuf::new(),
        )
        .unwrap();
        assert_eq!(l.config.params().h, 0.125);
        assert_eq!(l.config.params().tol, 1e-3);
    }
}
