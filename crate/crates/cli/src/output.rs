//! Output files: pinned-precision JSON, CSV and legacy VTK, each stamped
//! with the run provenance.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub const TOOL: &str = "gl3d";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub stage: &'static str,
    pub seed: u64,
}

impl Provenance {
    pub fn line(&self) -> String {
        format!("{} {} stage={} config={} seed={}", self.tool, self.version, self.stage, self.config_hash, self.seed)
    }
}

/// Seventeen significant digits, the same on every platform.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty printer that writes every float with [`fmt_f64`].
struct Pinned<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Pinned<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Pinned(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

pub struct OutDir {
    pub dir: PathBuf,
    pub provenance: Provenance,
}

impl OutDir {
    pub fn new(dir: &Path, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), provenance })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        log::info!("wrote {}", p.display());
        Ok(p)
    }

    /// JSON object with a leading `provenance` member; `body` must
    /// serialize to an object.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf> {
        self.write(name, &to_json_bytes(&Stamped { provenance: &self.provenance, body })?)
    }

    /// CSV with a `#` provenance line, then the header and rows.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut buf = format!("# {}\n", self.provenance.line()).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        self.write(name, &buf)
    }

    /// Legacy ASCII POLYDATA with one line cell per segment and a
    /// per-cell `weight` scalar.
    pub fn vtk_lines(&self, name: &str, segments: &[([f64; 3], [f64; 3], f64)]) -> Result<PathBuf> {
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\n");
        s.push_str(&self.provenance.line());
        s.push_str("\nASCII\nDATASET POLYDATA\n");
        s.push_str(&format!("POINTS {} double\n", 2 * segments.len()));
        for (a, b, _) in segments {
            for p in [a, b] {
                s.push_str(&format!("{} {} {}\n", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])));
            }
        }
        s.push_str(&format!("LINES {} {}\n", segments.len(), 3 * segments.len()));
        for k in 0..segments.len() {
            s.push_str(&format!("2 {} {}\n", 2 * k, 2 * k + 1));
        }
        s.push_str(&format!("CELL_DATA {}\nSCALARS weight double 1\nLOOKUP_TABLE default\n", segments.len()));
        for (_, _, w) in segments {
            s.push_str(&fmt_f64(*w));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    /// Binary lattice field plus a `<name>.json` provenance sidecar.
    pub fn field(&self, name: &str, field: &gl3d::binio::Field) -> Result<PathBuf> {
        let mut buf = Vec::new();
        gl3d::binio::write_field(&mut buf, field)?;
        let p = self.write(name, &buf)?;
        #[derive(Serialize)]
        struct Sidecar {
            file: String,
            grid: gl3d::GridSpec,
        }
        self.json(&format!("{name}.json"), &Sidecar { file: name.into(), grid: field.grid() })?;
        Ok(p)
    }
}
