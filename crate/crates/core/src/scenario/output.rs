//! File emission: CSV tables with fixed column order, JSON documents and a
//! checksummed manifest written after every other file.
//!
//! Floats are written as the shortest decimal that parses back to the same
//! value. Adiabaticity values are capped at [`ADIABATICITY_CAP`] so the
//! files never contain `inf`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adiabaticity::{AdiabaticityMap, AdiabaticityTrace, AxisRange, ADIABATICITY_CAP};
use crate::error::{Error, Result};
use crate::simulator::EchoTrain;
use crate::theory::{FirstOrder, ModeTrace};

use super::config::RunConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Shortest round-trip decimal, in exponent form for very small or large magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Caps adiabaticity for serialization.
pub fn cap(a: f64) -> f64 {
    if a.is_nan() {
        a
    } else {
        a.min(ADIABATICITY_CAP)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to reproduce and verify a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Seconds since the Unix epoch when the run started.
    pub timestamp: u64,
    pub wall_clock_seconds: f64,
    pub adiabaticity_cap: f64,
    pub config: RunConfig,
    pub outputs: Vec<OutputFile>,
}

/// A tabular CSV document.
#[derive(Clone, Debug, Default)]
pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    body: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { comments: Vec::new(), header: header.iter().map(|s| s.to_string()).collect(), body: String::new() }
    }

    /// Adds a `# ...` line above the header row.
    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            self.body.push_str(&format_float(*v));
        }
        self.body.push('\n');
    }

    /// Row with a leading integer column.
    pub fn indexed_row(&mut self, index: usize, values: &[f64]) {
        debug_assert_eq!(values.len() + 1, self.header.len());
        write!(self.body, "{index}").expect("writing to a String");
        for v in values {
            self.body.push(',');
            self.body.push_str(&format_float(*v));
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        out.push_str(&self.body);
        out
    }
}

/// `echo_index,tau,omega0_norm,Mx,My,Mz`.
pub fn echo_table(train: &EchoTrain) -> Table {
    let mut t = Table::new(&["echo_index", "tau", "omega0_norm", "Mx", "My", "Mz"]);
    for r in &train.records {
        t.indexed_row(r.index, &[r.tau, r.omega0, r.m.x, r.m.y, r.m.z]);
    }
    t
}

/// `cycle,tau,omega0_norm,a0,cp_magnitude,adiabaticity`.
pub fn mode_table(trace: &ModeTrace) -> Table {
    let mut t = Table::new(&["cycle", "tau", "omega0_norm", "a0", "cp_magnitude", "adiabaticity"]);
    for r in &trace.records {
        t.indexed_row(r.cycle, &[r.tau, r.omega0, r.a0, r.cp_magnitude, cap(r.adiabaticity)]);
    }
    t
}

/// `tau,omega0_norm,Mx,My_abs,inv_adiabaticity`.
pub fn first_order_table(points: &[FirstOrder]) -> Table {
    let mut t = Table::new(&["tau", "omega0_norm", "Mx", "My_abs", "inv_adiabaticity"]);
    for p in points {
        t.row(&[p.tau, p.omega0, p.mx, p.my_abs, p.inv_a]);
    }
    t
}

/// `tau,omega0_norm,omega1_norm,adiabaticity`.
pub fn adiabaticity_table(trace: &AdiabaticityTrace) -> Table {
    let mut t = Table::new(&["tau", "omega0_norm", "omega1_norm", "adiabaticity"]);
    for s in &trace.samples {
        t.row(&[s.tau, s.omega0, s.omega1, cap(s.adiabaticity)]);
    }
    t
}

fn axis_line(name: &str, axis: &str, r: &AxisRange) -> String {
    format!("{axis}: {name} min={} max={} count={}", r.min, r.max, r.count)
}

/// Row-major grid: the `x` axis varies fastest. `values[iy * nx + ix]`.
pub fn grid_table(x_name: &str, x: &AxisRange, y_name: &str, y: &AxisRange, value_name: &str, values: &[f64]) -> Table {
    let mut t = Table::new(&[x_name, y_name, value_name])
        .comment(axis_line(x_name, "x", x))
        .comment(axis_line(y_name, "y", y))
        .comment(format!("value: {value_name} cap={ADIABATICITY_CAP}"));
    let (xs, ys) = (x.values(), y.values());
    for (iy, &yv) in ys.iter().enumerate() {
        for (ix, &xv) in xs.iter().enumerate() {
            t.row(&[xv, yv, values[iy * xs.len() + ix]]);
        }
    }
    t
}

pub fn map_table(map: &AdiabaticityMap) -> Table {
    let values: Vec<f64> = map.values.iter().map(|&v| cap(v)).collect();
    grid_table("omega0_norm", &map.omega0, map.kind.y_name(), &map.y, map.kind.value_name(), &values)
}

/// Collects the files of one run inside an output directory.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputSet { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        let digest = Sha256::digest(bytes);
        let sha256 = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").expect("writing to a String");
            s
        });
        self.files.retain(|f| f.name != name);
        self.files.push(OutputFile { name: name.to_string(), bytes: bytes.len() as u64, sha256 });
        log::debug!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write_bytes(name, table.render().as_bytes())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes the manifest last and returns it.
    pub fn finish(mut self, command: &str, config: &RunConfig, started: SystemTime) -> Result<RunManifest> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            timestamp: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_seconds: started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0),
            adiabaticity_cap: ADIABATICITY_CAP,
            config: config.clone(),
            outputs: self.files.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numerical(format!("cannot serialize manifest: {e}")))?;
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}
