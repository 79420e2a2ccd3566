//! JSON and CSV input/output.
//!
//! JSON output is byte-stable: object keys are sorted and every float is
//! written like C's `%.17g`, which round-trips f64 exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix2, Matrix4};
use serde_json::{Map, Value};

use crate::channels::{KrausChannel, SparseOp};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentReport, Table};
use crate::fock::{FockBasis, FockState, StateKind};
use crate::linalg::{CMatrix, CVector, C64};
use crate::mueller::{JonesMatrix, MuellerMatrix};
use crate::stokes::StokesVector;

/// Objects that can live in a JSON file.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Stokes(StokesVector),
    Jones(JonesMatrix),
    Mueller(MuellerMatrix),
    State(FockState),
    Channel(KrausChannel),
    Report(ExperimentReport),
}

impl Document {
    pub fn type_name(&self) -> &'static str {
        match self {
            Self::Stokes(_) => "stokes",
            Self::Jones(_) => "jones_matrix",
            Self::Mueller(_) => "mueller_matrix",
            Self::State(_) => "fock_state",
            Self::Channel(_) => "kraus_channel",
            Self::Report(_) => "experiment_report",
        }
    }
}

/// C-style `%.17g`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        strip_zeros(&fixed)
    } else {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Serialize with sorted keys and `%.17g` floats.
pub fn to_json_string(value: &Value) -> Result<String> {
    let mut out = String::new();
    write_value(value, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) -> Result<()> {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                let x = n.as_f64().expect("finite float");
                out.push_str(&format_g17(x));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).map_err(|e| Error::Io(e.to_string()))?),
        Value::Array(items) => {
            // Short numeric rows stay on one line.
            if items.iter().all(|x| x.is_number()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out)?;
                }
                out.push(']');
                return Ok(());
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out)?;
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                let _ = write!(out, "{}: ", serde_json::to_string(key).map_err(|e| Error::Io(e.to_string()))?);
                write_value(&map[*key], indent + 1, out)?;
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
    Ok(())
}

fn num(x: f64) -> Result<Value> {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| Error::Io(format!("cannot write non-finite number {x}")))
}

fn real_rows(rows: impl Iterator<Item = Vec<f64>>) -> Result<Value> {
    Ok(Value::Array(
        rows.map(|r| r.into_iter().map(num).collect::<Result<Vec<_>>>().map(Value::Array))
            .collect::<Result<Vec<_>>>()?,
    ))
}

fn complex_matrix_value(m: &CMatrix) -> Result<Value> {
    let mut obj = Map::new();
    obj.insert("re".into(), real_rows((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()))?);
    obj.insert("im".into(), real_rows((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()))?);
    Ok(Value::Object(obj))
}

pub fn to_value(doc: &Document) -> Result<Value> {
    let mut obj = Map::new();
    obj.insert("type".into(), Value::String(doc.type_name().into()));
    match doc {
        Document::Stokes(s) => {
            obj.insert("s".into(), Value::Array(s.to_array().iter().map(|x| num(*x)).collect::<Result<_>>()?));
        }
        Document::Jones(j) => {
            let m = CMatrix::from_fn(2, 2, |r, c| j.0[(r, c)]);
            obj.insert("matrix".into(), complex_matrix_value(&m)?);
        }
        Document::Mueller(m) => {
            obj.insert("m".into(), real_rows(m.rows().iter().map(|r| r.to_vec()))?);
        }
        Document::State(s) => {
            obj.insert("n_max".into(), Value::from(s.basis.n_max));
            obj.insert("leakage".into(), num(s.leakage)?);
            match &s.kind {
                StateKind::Pure(v) => {
                    obj.insert("kind".into(), Value::String("pure".into()));
                    obj.insert("re".into(), Value::Array(v.iter().map(|z| num(z.re)).collect::<Result<_>>()?));
                    obj.insert("im".into(), Value::Array(v.iter().map(|z| num(z.im)).collect::<Result<_>>()?));
                }
                StateKind::Density(rho) => {
                    obj.insert("kind".into(), Value::String("density".into()));
                    obj.insert("rho".into(), complex_matrix_value(rho)?);
                }
            }
        }
        Document::Channel(ch) => {
            obj.insert("n_max".into(), Value::from(ch.basis.n_max));
            obj.insert("label".into(), Value::String(ch.label.clone()));
            obj.insert(
                "ops".into(),
                Value::Array(ch.ops.iter().map(|k| complex_matrix_value(&k.to_dense())).collect::<Result<_>>()?),
            );
        }
        Document::Report(r) => {
            let v = serde_json::to_value(r).map_err(|e| Error::Io(e.to_string()))?;
            if let Value::Object(m) = v {
                obj.extend(m);
            }
        }
    }
    Ok(Value::Object(obj))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::schema(path, format!("missing field \"{key}\"")))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::schema(path, "expected a number"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::schema(path, "expected a nonnegative integer"))
}

fn real_vector(v: &Value, path: &str, len: Option<usize>) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::schema(path, "expected an array"))?;
    if let Some(n) = len {
        if arr.len() != n {
            return Err(Error::schema(path, format!("expected {n} entries, found {}", arr.len())));
        }
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| as_f64(x, &format!("{path}[{i}]")))
        .collect()
}

/// Parse a rows × cols real matrix, naming the offending row on failure.
pub fn real_matrix(v: &Value, path: &str, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
    let arr = v.as_array().ok_or_else(|| Error::schema(path, "expected an array of rows"))?;
    if arr.len() != rows {
        return Err(Error::schema(path, format!("expected {rows} rows, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, row)| {
            let p = format!("{path}[{i}]");
            let r = row.as_array().ok_or_else(|| Error::schema(&p, format!("row {i} is not an array")))?;
            if r.len() != cols {
                return Err(Error::schema(&p, format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            real_vector(row, &p, Some(cols))
        })
        .collect()
}

fn complex_matrix(v: &Value, path: &str, dim: usize) -> Result<CMatrix> {
    let obj = v.as_object().ok_or_else(|| Error::schema(path, "expected an object with re and im"))?;
    let re = real_matrix(field(obj, "re", path)?, &format!("{path}.re"), dim, dim)?;
    let im = real_matrix(field(obj, "im", path)?, &format!("{path}.im"), dim, dim)?;
    Ok(CMatrix::from_fn(dim, dim, |i, j| C64::new(re[i][j], im[i][j])))
}

pub fn from_value(v: &Value) -> Result<Document> {
    let obj = v.as_object().ok_or_else(|| Error::schema("$", "expected a JSON object"))?;
    let ty = field(obj, "type", "$")?
        .as_str()
        .ok_or_else(|| Error::schema("$.type", "expected a string"))?;
    match ty {
        "stokes" => {
            let s = real_vector(field(obj, "s", "$")?, "$.s", Some(4))?;
            Ok(Document::Stokes(StokesVector::from_array([s[0], s[1], s[2], s[3]])))
        }
        "jones_matrix" => {
            let m = complex_matrix(field(obj, "matrix", "$")?, "$.matrix", 2)?;
            Ok(Document::Jones(JonesMatrix(Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))))
        }
        "mueller_matrix" => {
            let m = real_matrix(field(obj, "m", "$")?, "$.m", 4, 4)?;
            Ok(Document::Mueller(MuellerMatrix(Matrix4::from_fn(|i, j| m[i][j]))))
        }
        "fock_state" => {
            let n_max = as_usize(field(obj, "n_max", "$")?, "$.n_max")?;
            let basis = FockBasis::new(n_max);
            let d = basis.dim();
            let leakage = match obj.get("leakage") {
                Some(x) => as_f64(x, "$.leakage")?,
                None => 0.0,
            };
            let kind = field(obj, "kind", "$")?
                .as_str()
                .ok_or_else(|| Error::schema("$.kind", "expected a string"))?;
            match kind {
                "pure" => {
                    let re = real_vector(field(obj, "re", "$")?, "$.re", Some(d))?;
                    let im = real_vector(field(obj, "im", "$")?, "$.im", Some(d))?;
                    let v = CVector::from_fn(d, |i, _| C64::new(re[i], im[i]));
                    Ok(Document::State(FockState::pure(basis, v, leakage)?))
                }
                "density" => {
                    let rho = complex_matrix(field(obj, "rho", "$")?, "$.rho", d)?;
                    Ok(Document::State(FockState::density(basis, rho, leakage)?))
                }
                other => Err(Error::schema("$.kind", format!("unknown state kind \"{other}\""))),
            }
        }
        "kraus_channel" => {
            let n_max = as_usize(field(obj, "n_max", "$")?, "$.n_max")?;
            let basis = FockBasis::new(n_max);
            let label = obj.get("label").and_then(Value::as_str).unwrap_or("").to_string();
            let ops = field(obj, "ops", "$")?
                .as_array()
                .ok_or_else(|| Error::schema("$.ops", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(k, op)| Ok(SparseOp::from_dense(&complex_matrix(op, &format!("$.ops[{k}]"), basis.dim())?, 0.0)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Document::Channel(KrausChannel::new(basis, ops, label)))
        }
        "experiment_report" => {
            let mut m = obj.clone();
            m.remove("type");
            serde_json::from_value(Value::Object(m))
                .map(Document::Report)
                .map_err(|e| Error::schema("$", e.to_string()))
        }
        other => Err(Error::schema("$.type", format!("unknown document type \"{other}\""))),
    }
}

pub fn parse(text: &str) -> Result<Document> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    from_value(&v)
}

pub fn load(path: impl AsRef<Path>) -> Result<Document> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn to_string(doc: &Document) -> Result<String> {
    to_json_string(&to_value(doc)?)
}

pub fn save(path: impl AsRef<Path>, doc: &Document) -> Result<()> {
    std::fs::write(path, to_string(doc)?)?;
    Ok(())
}

/// One table as CSV with a header row.
pub fn table_csv(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).map_err(|e| Error::Io(e.to_string()))?;
    for row in &table.rows {
        if row.len() != table.columns.len() {
            return Err(Error::LengthMismatch {
                expected: table.columns.len(),
                got: row.len(),
            });
        }
        w.write_record(row.iter().map(|x| format_g17(*x)))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Write each table of a report. A single table goes to `path`; several go to
/// `<stem>_<table>.csv` next to it. Returns the files written.
pub fn emit_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let path = path.as_ref();
    if report.tables.len() == 1 {
        std::fs::write(path, table_csv(&report.tables[0])?)?;
        return Ok(vec![path.to_path_buf()]);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let dir = path.parent().unwrap_or(Path::new("."));
    report
        .tables
        .iter()
        .map(|t| {
            let p = dir.join(format!("{stem}_{}.csv", t.name));
            std::fs::write(&p, table_csv(t)?)?;
            Ok(p)
        })
        .collect()
}
