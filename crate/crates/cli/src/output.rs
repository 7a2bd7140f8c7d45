//! Deterministic artifact writers.

use crate::config::Format;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::Path;

pub const SCHEMA_PREFIX: &str = "cavity-phase";

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("own formatting parses")
}

/// 12 significant digits, printed in the shortest form that reads back exactly.
pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(v);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e12).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    /// Artifact name inside the schema string, e.g. `grid`.
    pub artifact: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(artifact: &str, columns: &[&str]) -> Self {
        Table { artifact: artifact.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn schema(&self) -> String {
        schema(&self.artifact)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = format!("#schema={}\r\n", self.schema()).into_bytes();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_num(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            w.write_record(&fields).expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory flush"));
        out
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(cell_json)).collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("schema".into(), Value::String(self.schema()));
        top.insert("columns".into(), Value::Array(self.columns.iter().cloned().map(Value::String).collect()));
        top.insert("rows".into(), Value::Array(rows));
        json_bytes(&Value::Object(top))
    }

    pub fn encode(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn schema(artifact: &str) -> String {
    format!("{SCHEMA_PREFIX}.{artifact}.v1")
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => serde_json::Number::from_f64(round12(*v)).map_or(Value::Null, Value::Number),
        Cell::Int(i) => Value::from(*i),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Empty => Value::Null,
    }
}

/// Pretty JSON; object keys come out sorted because `Map` is ordered.
pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("JSON values serialise");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
    pub schema: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub job: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> Vec<u8> {
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|f| {
                let mut m = Map::new();
                m.insert("path".into(), Value::String(f.path.clone()));
                m.insert("sha256".into(), Value::String(f.sha256.clone()));
                m.insert("bytes".into(), Value::from(f.bytes));
                m.insert("schema".into(), Value::String(f.schema.clone()));
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        top.insert("schema".into(), Value::String(schema("manifest")));
        top.insert("job".into(), Value::String(self.job.clone()));
        top.insert("config_sha256".into(), Value::String(self.config_sha256.clone()));
        top.insert("files".into(), Value::Array(files));
        json_bytes(&Value::Object(top))
    }
}

/// Writes tables one after another and records their hashes.
pub fn write_tables(dir: &Path, tables: &[Table], format: Format) -> io::Result<Vec<ManifestEntry>> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for t in tables {
        let name = format!("{}.{}", t.artifact, format.name());
        let bytes = t.encode(format);
        fs::write(dir.join(&name), &bytes)?;
        entries.push(ManifestEntry { path: name, sha256: sha256_hex(&bytes), bytes: bytes.len(), schema: t.schema() });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(format_num(0.1 + 0.2), "0.3");
        assert_eq!(format_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_num(-2.0 / 3.0 * 1e-7), "-6.66666666667e-8");
        assert_eq!(format_num(123456789012345.0), "1.23456789012e14");
        assert_eq!(format_num(0.0), "0");
        assert_eq!(format_num(5e-324), "5e-324");
    }

    #[test]
    fn csv_quotes_and_header() {
        let mut t = Table::new("demo", &["name", "value"]);
        t.push(vec!["a,b".into(), Cell::Num(1.5)]);
        t.push(vec!["say \"hi\"".into(), Cell::Empty]);
        let s = String::from_utf8(t.to_csv()).unwrap();
        assert_eq!(s, "#schema=cavity-phase.demo.v1\r\nname,value\r\n\"a,b\",1.5\r\n\"say \"\"hi\"\"\",\r\n");
    }

    #[test]
    fn json_keys_sorted() {
        let mut t = Table::new("demo", &["zeta", "alpha"]);
        t.push(vec![Cell::Num(2.0), Cell::Int(3)]);
        let s = String::from_utf8(t.to_json()).unwrap();
        let a = s.find("\"alpha\"").unwrap();
        let z = s.find("\"zeta\": 2").unwrap();
        assert!(a < z);
        assert!(s.find("\"columns\"").unwrap() < s.find("\"rows\"").unwrap());
        assert!(s.contains("\"schema\": \"cavity-phase.demo.v1\""));
    }
}
