//! Artifact serialization: JSON with round-trip floats, CSV tables, bundle
//! export and the consolidated report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::dirac::DiracBundle;
use crate::error::{Error, Result};
use crate::linop::LinOp;

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Host and timing data kept out of the deterministic payload.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub unix_time: u64,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub host: String,
}

impl RunMeta {
    pub fn now(elapsed_seconds: f64, threads: usize) -> Self {
        let host = std::env::var("HOSTNAME")
            .ok()
            .or_else(|| fs::read_to_string("/etc/hostname").ok().map(|s| s.trim().to_string()))
            .unwrap_or_default();
        RunMeta {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            elapsed_seconds,
            threads,
            host,
        }
    }
}

/// Fails early if `dir` cannot be created or written.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".spectral-forge-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Writes `<stem>.json` (payload) and `<stem>.meta.json` (header block).
pub fn write_artifact<T: Serialize>(dir: &Path, stem: &str, payload: &T, meta: &RunMeta) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, to_json(payload)?)?;
    fs::write(dir.join(format!("{stem}.meta.json")), to_json(meta)?)?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

fn write_bin(path: &Path, op: &LinOp) -> Result<()> {
    let m = op.mat();
    let mut bytes = Vec::with_capacity(m.nrows() * m.ncols() * 16);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct BlockEntry {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize)]
struct BundleHeader<'a, D: Serialize> {
    descriptor: &'a D,
    layout: &'static str,
    lambda: f64,
    blocks: Vec<BlockEntry>,
}

/// Dumps Δ_A, D1, D2, D3 as row-major little-endian (re, im) f64 pairs with
/// a JSON header describing the files.
pub fn export_bundle<D: Serialize>(bundle: &DiracBundle, descriptor: &D, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut blocks = Vec::new();
    for (name, op) in [("delta_a", bundle.delta_a()), ("d1", bundle.d1()), ("d2", bundle.d2()), ("d3", bundle.d3())] {
        let file = format!("{name}.bin");
        write_bin(&dir.join(&file), op)?;
        blocks.push(BlockEntry { name: name.to_string(), file, rows: op.dim(), cols: op.dim() });
    }
    let header = BundleHeader {
        descriptor,
        layout: "row-major, little-endian f64 pairs (re, im)",
        lambda: bundle.lambda(),
        blocks,
    };
    let path = dir.join("bundle.json");
    fs::write(&path, to_json(&header)?)?;
    Ok(path)
}

/// One artifact found by [`consolidate`].
#[derive(Debug, Clone, Serialize)]
pub struct IndexEntry {
    pub name: String,
    pub kind: String,
    pub passed: Option<bool>,
    pub plots: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportIndex {
    pub sections: Vec<IndexEntry>,
    pub absent: Vec<String>,
}

fn is_artifact(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".json") && !name.ends_with(".meta.json") && name != "index.json" && name != "report.meta.json"
}

fn scalar_lines(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match x {
                    Value::Object(_) => scalar_lines(&key, x, out),
                    Value::Array(a) => {
                        let _ = writeln!(out, "- {key}: {} entries", a.len());
                    }
                    _ => {
                        let _ = writeln!(out, "- {key}: {x}");
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "- {prefix}: {other}");
        }
    }
}

fn pairs_csv(header: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn num(v: &Value) -> Option<f64> {
    v.as_f64()
}

/// Plot data carried by an artifact: (suffix, csv body).
fn plot_data(v: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let result = &v["result"];
    if let Some(table) = result["loglog"].as_array() {
        let rows = table.iter().filter_map(|r| {
            let a = r.as_array()?;
            Some(vec![fmt_f64(num(&a[0])?), fmt_f64(num(&a[1])?), fmt_f64(num(&a[2])?)])
        });
        out.push(("counting".to_string(), pairs_csv("x,y,fit", rows)));
    }
    if let Some(rows) = result["rows"].as_array() {
        if rows.first().is_some_and(|r| r.get("pair_id").is_some()) {
            let mut by_pair: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
            for r in rows {
                if let (Some(q), Some(d), Some(id)) = (num(&r["q"]), num(&r["distance"]), r["pair_id"].as_str()) {
                    by_pair.entry(id.to_string()).or_default().push(vec![fmt_f64(q), fmt_f64(d)]);
                }
            }
            for (id, rows) in by_pair {
                let safe: String = id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
                out.push((format!("sweep_{safe}"), pairs_csv("x,y", rows.into_iter())));
            }
        } else if rows.first().is_some_and(|r| r.get("size").is_some()) {
            let rows = rows.iter().filter_map(|r| {
                let l = num(&r["norm_d1"])?.max(num(&r["norm_di"])?);
                Some(vec![r["size"].to_string(), fmt_f64(l)])
            });
            out.push(("sweep".to_string(), pairs_csv("x,y", rows)));
        }
    }
    out
}

/// Merges the artifacts in `dir` into `report.md`, `index.json` and plot
/// files. Names in `expected` without an artifact are listed as absent.
pub fn consolidate(dir: &Path, expected: &[String]) -> Result<ReportIndex> {
    let mut files: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file() && is_artifact(p)).collect(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::Io(e)),
    };
    files.sort();
    let mut body = String::from("# spectral-forge report\n");
    let mut sections = Vec::new();
    for path in &files {
        let text = fs::read_to_string(path)?;
        let Ok(v) = serde_json::from_str::<Value>(&text) else { continue };
        let Some(kind) = v.get("kind").and_then(|k| k.as_str()).map(str::to_string) else { continue };
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let passed = v.get("passed").and_then(|p| p.as_bool());
        let _ = writeln!(body, "\n## {name} ({kind})\n");
        if let Some(p) = passed {
            let _ = writeln!(body, "status: {}\n", if p { "pass" } else { "FAIL" });
        }
        scalar_lines("", &v, &mut body);
        let mut plots = Vec::new();
        for (suffix, csv) in plot_data(&v) {
            let file = format!("plot_{name}_{suffix}.csv");
            fs::write(dir.join(&file), &csv)?;
            let _ = writeln!(body, "- plot data: {file}");
            if suffix == "counting" {
                let _ = writeln!(body, "\n```\n{}```", csv);
            }
            plots.push(file);
        }
        sections.push(IndexEntry { name, kind, passed, plots });
    }
    let absent: Vec<String> =
        expected.iter().filter(|e| !sections.iter().any(|s| &s.name == *e)).cloned().collect();
    if !absent.is_empty() {
        let _ = writeln!(body, "\n## absent artifacts\n");
        for a in &absent {
            let _ = writeln!(body, "- {a}");
        }
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.md"), &body)?;
    let index = ReportIndex { sections, absent };
    fs::write(dir.join("index.json"), to_json(&index)?)?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        let v = serde_json::json!({ "a": 0.1, "b": [1.0 / 3.0, -2.5e-300], "c": 7 });
        let s = to_json(&v).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"][0].as_f64().unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(back["c"], 7);
    }

    #[test]
    fn empty_dir_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let idx = consolidate(dir.path(), &[]).unwrap();
        assert!(idx.sections.is_empty());
        let body = fs::read_to_string(dir.path().join("report.md")).unwrap();
        assert!(!body.contains("## "));
    }

    #[test]
    fn missing_expected_is_listed() {
        let dir = tempfile::tempdir().unwrap();
        let idx = consolidate(dir.path(), &["dimension".to_string()]).unwrap();
        assert_eq!(idx.absent, vec!["dimension".to_string()]);
    }
}
