//! CSV tables, plot script and run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const TIME_UNIT: &str = "1/omega_m";
/// Dimensionless quantities (probabilities, correlation ratios).
pub const UNITLESS: &str = "1";
pub const FREQUENCY_UNIT: &str = "omega_m";
pub const QUANTA_UNIT: &str = "quanta";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// Undefined value, written as an empty field.
    Missing,
    Text(String),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Num(v) => {
                let _ = write!(out, "{v:.16e}");
            }
            Cell::Missing => {}
            Cell::Text(s) => out.push_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub label: String,
    pub unit: String,
}

impl Column {
    pub fn new(label: impl Into<String>, unit: &str) -> Self {
        Self { label: label.into(), unit: unit.to_string() }
    }
}

/// One CSV file: a key column followed by value columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Self { name: name.into(), columns, rows: Vec::new() }
    }

    /// Time series with the given value columns.
    pub fn series(name: impl Into<String>, times: &[f64], columns: Vec<(Column, Vec<Cell>)>) -> Self {
        let mut header = vec![Column::new("time", TIME_UNIT)];
        header.extend(columns.iter().map(|(c, _)| c.clone()));
        let mut table = Self::new(name, header);
        for (i, &t) in times.iter().enumerate() {
            let mut row = vec![Cell::Num(t)];
            row.extend(columns.iter().map(|(_, v)| v[i].clone()));
            table.rows.push(row);
        }
        table
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.columns.iter().map(|c| format!("{} [{}]", c.label, c.unit)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    /// Numeric column by label (key column included).
    pub fn column(&self, label: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c.label == label)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Num(v) => Some(v),
                    _ => None,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, status: CheckStatus, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status, detail: detail.into() }
    }

    pub fn verdict(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if ok { CheckStatus::Pass } else { CheckStatus::Fail }, detail)
    }
}

/// Everything an experiment produces before anything touches the disk.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub results: Map<String, Value>,
    pub checks: Vec<CheckRecord>,
    /// Additional files as `(name, contents)`.
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub resolved_config: Value,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub results: Map<String, Value>,
}

pub const MANIFEST_NAME: &str = "manifest.json";
pub const PLOT_SCRIPT_NAME: &str = "plot.py";

pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Matplotlib script drawing every table against its key column.
pub fn plot_script(tables: &[Table]) -> String {
    let mut s = String::from(
        "#!/usr/bin/env python3\n\
         # Renders every CSV of this run to PNG next to it: python3 plot.py\n\
         import csv, pathlib\n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\n\
         HERE = pathlib.Path(__file__).resolve().parent\n\
         TABLES = [\n",
    );
    for t in tables {
        let numeric = t.rows.first().is_some_and(|r| r.iter().all(|c| !matches!(c, Cell::Text(_))));
        if numeric && t.columns.len() > 1 {
            let _ = writeln!(s, "    {:?},", t.file_name());
        }
    }
    s.push_str(
        "]\n\n\
         for name in TABLES:\n\
         \x20   with open(HERE / name) as fh:\n\
         \x20       rows = list(csv.reader(fh))\n\
         \x20   header, body = rows[0], rows[1:]\n\
         \x20   x = [float(r[0]) for r in body]\n\
         \x20   fig, ax = plt.subplots(figsize=(7, 3.5))\n\
         \x20   for k, label in enumerate(header[1:], start=1):\n\
         \x20       pts = [(xi, float(r[k])) for xi, r in zip(x, body) if r[k] != \"\"]\n\
         \x20       ax.plot([p[0] for p in pts], [p[1] for p in pts], label=label)\n\
         \x20   ax.set_xlabel(header[0])\n\
         \x20   ax.legend(fontsize=\"small\")\n\
         \x20   fig.tight_layout()\n\
         \x20   fig.savefig(HERE / (pathlib.Path(name).stem + \".png\"), dpi=120)\n\
         \x20   plt.close(fig)\n",
    );
    s
}

/// Writes tables, plot script and finally the manifest; returns the
/// manifest as written.
pub fn write_run(
    dir: &Path,
    output: &RunOutput,
    resolved_config: Value,
    wall_clock_seconds: f64,
) -> CliResult<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut outputs = Vec::new();
    for t in &output.tables {
        let name = t.file_name();
        write_atomic(&dir.join(&name), t.to_csv().as_bytes())?;
        outputs.push(name);
    }
    for (name, contents) in &output.files {
        write_atomic(&dir.join(name), contents.as_bytes())?;
        outputs.push(name.clone());
    }
    if !output.tables.is_empty() {
        write_atomic(&dir.join(PLOT_SCRIPT_NAME), plot_script(&output.tables).as_bytes())?;
        outputs.push(PLOT_SCRIPT_NAME.to_string());
    }
    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        resolved_config,
        wall_clock_seconds,
        outputs,
        checks: output.checks.clone(),
        results: output.results.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::config(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}

/// Output directory: explicit path, then the config's, then
/// `$PPS_OUTPUT_DIR/<name>`, then `./pps-output/<name>`.
pub fn output_dir(explicit: Option<&Path>, configured: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = explicit.or(configured) {
        return p.to_path_buf();
    }
    let root = std::env::var_os("PPS_OUTPUT_DIR").map_or_else(|| PathBuf::from("pps-output"), PathBuf::from);
    root.join(name)
}
