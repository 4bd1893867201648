//! Result rows and their CSV/JSON serialization.
//!
//! The CSV header is fixed to the field order below; floats carry 17
//! significant digits so a read-back reproduces the exact bits.
//! Non-finite values serialize as the literal strings `inf`, `-inf` and
//! `nan` in both formats (JSON carries them as strings since JSON has no
//! non-finite numbers).

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

/// One result record; the unit of every serialized experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub trial: usize,
    pub seed: u64,
    pub sweep_name: String,
    pub sweep_value: String,
    /// Target index the bound columns refer to; -1 for rows that are not
    /// target-specific.
    pub target: i64,
    pub peb_exact_m: f64,
    pub peb_approx_m: f64,
    pub crlb_m2: f64,
    pub min_sinr_db: f64,
    pub min_se_bps_hz: f64,
    pub iterations: u64,
    pub status: String,
    pub runtime_ms: f64,
}

/// Fixed CSV header in `ResultRow` field order.
pub const CSV_HEADER: &str = "experiment,trial,seed,sweep_name,sweep_value,target,peb_exact_m,\
peb_approx_m,crlb_m2,min_sinr_db,min_se_bps_hz,iterations,status,runtime_ms";

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        other => other
            .parse()
            .map_err(|_| Error::Argument(format!("bad float field `{other}`"))),
    }
}

fn float_value(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_float(x))
    }
}

fn value_float(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::Argument(format!("non-f64 number in `{key}`"))),
        Value::String(s) => parse_float(s),
        other => Err(Error::Argument(format!("bad value for `{key}`: {other}"))),
    }
}

/// CSV document for a row list; header-only when empty.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.trial,
            r.seed,
            r.sweep_name,
            r.sweep_value,
            r.target,
            fmt_float(r.peb_exact_m),
            fmt_float(r.peb_approx_m),
            fmt_float(r.crlb_m2),
            fmt_float(r.min_sinr_db),
            fmt_float(r.min_se_bps_hz),
            r.iterations,
            r.status,
            fmt_float(r.runtime_ms),
        ));
    }
    out
}

/// JSON document: an array of objects with identical keys.
pub fn rows_to_json(rows: &[ResultRow]) -> String {
    let array: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            obj.insert("experiment".into(), json!(r.experiment));
            obj.insert("trial".into(), json!(r.trial));
            obj.insert("seed".into(), json!(r.seed));
            obj.insert("sweep_name".into(), json!(r.sweep_name));
            obj.insert("sweep_value".into(), json!(r.sweep_value));
            obj.insert("target".into(), json!(r.target));
            obj.insert("peb_exact_m".into(), float_value(r.peb_exact_m));
            obj.insert("peb_approx_m".into(), float_value(r.peb_approx_m));
            obj.insert("crlb_m2".into(), float_value(r.crlb_m2));
            obj.insert("min_sinr_db".into(), float_value(r.min_sinr_db));
            obj.insert("min_se_bps_hz".into(), float_value(r.min_se_bps_hz));
            obj.insert("iterations".into(), json!(r.iterations));
            obj.insert("status".into(), json!(r.status));
            obj.insert("runtime_ms".into(), float_value(r.runtime_ms));
            Value::Object(obj)
        })
        .collect();
    serde_json::to_string_pretty(&Value::Array(array)).expect("json encoding")
}

/// Parse a CSV document produced by [`rows_to_csv`].
pub fn read_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Argument("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Argument("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(Error::Argument(format!(
                "expected 14 fields, got {}",
                f.len()
            )));
        }
        rows.push(ResultRow {
            experiment: f[0].to_string(),
            trial: f[1]
                .parse()
                .map_err(|_| Error::Argument("bad trial".into()))?,
            seed: f[2]
                .parse()
                .map_err(|_| Error::Argument("bad seed".into()))?,
            sweep_name: f[3].to_string(),
            sweep_value: f[4].to_string(),
            target: f[5]
                .parse()
                .map_err(|_| Error::Argument("bad target".into()))?,
            peb_exact_m: parse_float(f[6])?,
            peb_approx_m: parse_float(f[7])?,
            crlb_m2: parse_float(f[8])?,
            min_sinr_db: parse_float(f[9])?,
            min_se_bps_hz: parse_float(f[10])?,
            iterations: f[11]
                .parse()
                .map_err(|_| Error::Argument("bad iterations".into()))?,
            status: f[12].to_string(),
            runtime_ms: parse_float(f[13])?,
        });
    }
    Ok(rows)
}

/// Parse a JSON document produced by [`rows_to_json`].
pub fn read_results_json(text: &str) -> Result<Vec<ResultRow>> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("bad JSON: {e}")))?;
    let array = value
        .as_array()
        .ok_or_else(|| Error::Argument("expected a JSON array".into()))?;
    let field = |obj: &Map<String, Value>, key: &str| -> Result<Value> {
        obj.get(key)
            .cloned()
            .ok_or_else(|| Error::Argument(format!("missing key `{key}`")))
    };
    array
        .iter()
        .map(|item| {
            let obj = item
                .as_object()
                .ok_or_else(|| Error::Argument("expected row objects".into()))?;
            Ok(ResultRow {
                experiment: field(obj, "experiment")?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                trial: field(obj, "trial")?.as_u64().unwrap_or(0) as usize,
                seed: field(obj, "seed")?.as_u64().unwrap_or(0),
                sweep_name: field(obj, "sweep_name")?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                sweep_value: field(obj, "sweep_value")?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                target: field(obj, "target")?.as_i64().unwrap_or(-1),
                peb_exact_m: value_float(&field(obj, "peb_exact_m")?, "peb_exact_m")?,
                peb_approx_m: value_float(&field(obj, "peb_approx_m")?, "peb_approx_m")?,
                crlb_m2: value_float(&field(obj, "crlb_m2")?, "crlb_m2")?,
                min_sinr_db: value_float(&field(obj, "min_sinr_db")?, "min_sinr_db")?,
                min_se_bps_hz: value_float(&field(obj, "min_se_bps_hz")?, "min_se_bps_hz")?,
                iterations: field(obj, "iterations")?.as_u64().unwrap_or(0),
                status: field(obj, "status")?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                runtime_ms: value_float(&field(obj, "runtime_ms")?, "runtime_ms")?,
            })
        })
        .collect()
}

/// Write rows to `path` in the requested format.
pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => rows_to_csv(rows),
        OutputFormat::Json => rows_to_json(rows),
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
