//! Output files: `report.json` and `table_*.csv`, each carrying the run
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// config path, or `builtin:<name>`
    pub source: String,
    pub seed: u64,
    pub n: Vec<usize>,
    pub reps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub restarts: usize,
    pub theta_zero: bool,
    pub out: String,
    pub version: String,
    /// seconds since the Unix epoch; the only field that varies between
    /// identical runs
    pub timestamp: u64,
}

/// JSON number, or a string for the infinity marker and NaN.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|v| num(*v)).collect())
}

pub fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self { name, header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct Output {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl Output {
    pub fn write(&self, body: Value, tables: &[Table]) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let manifest = serde_json::to_value(&self.manifest).expect("manifest serialises");
        let mut written = Vec::new();
        let report = json!({ "manifest": manifest, "report": body });
        let path = self.dir.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
        written.push(path);
        for t in tables {
            let path = self.dir.join(format!("table_{}.csv", t.name));
            write_table(&path, &manifest, t)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn write_table(path: &Path, manifest: &Value, t: &Table) -> std::io::Result<()> {
    let mut text = format!("# manifest: {manifest}\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    text.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8 csv"));
    fs::write(path, text)
}
