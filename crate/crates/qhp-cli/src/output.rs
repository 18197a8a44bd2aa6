//! Row records and their CSV/JSON forms.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

pub const HEADER: [&str; 8] = ["i0", "j0", "method", "value", "err_lo", "err_hi", "status", "runtime_ms"];

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub i0: u32,
    pub j0: u32,
    pub method: String,
    pub value: f64,
    /// Lower end of the interval claimed to contain the probability.
    pub err_lo: f64,
    pub err_hi: f64,
    pub status: String,
    pub runtime_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl Row {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

fn json_f64(v: f64) -> Value {
    // kept as a string so the 17-digit form survives; JSON has no NaN
    if v.is_finite() {
        Value::String(fmt_f64(v))
    } else {
        Value::Null
    }
}

fn row_json(r: &Row) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("i0".into(), r.i0.into());
    m.insert("j0".into(), r.j0.into());
    m.insert("method".into(), r.method.clone().into());
    m.insert("value".into(), json_f64(r.value));
    m.insert("err_lo".into(), json_f64(r.err_lo));
    m.insert("err_hi".into(), json_f64(r.err_hi));
    m.insert("status".into(), r.status.clone().into());
    m.insert("runtime_ms".into(), r.runtime_ms.into());
    if let Some(msg) = &r.message {
        m.insert("message".into(), msg.clone().into());
    }
    if !r.detail.is_null() {
        m.insert("detail".into(), r.detail.clone());
    }
    Value::Object(m)
}

pub fn write_rows(out: &mut dyn Write, rows: &[Row], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(HEADER)?;
            for r in rows {
                w.write_record([
                    r.i0.to_string(),
                    r.j0.to_string(),
                    r.method.clone(),
                    fmt_f64(r.value),
                    fmt_f64(r.err_lo),
                    fmt_f64(r.err_hi),
                    r.status.clone(),
                    r.runtime_ms.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let v = Value::Array(rows.iter().map(row_json).collect());
            serde_json::to_writer_pretty(&mut *out, &v)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub i0: u32,
    pub j0: u32,
    pub methods: Vec<String>,
    pub max_discrepancy: f64,
    pub tol: f64,
    pub pass: bool,
}

pub const COMPARE_HEADER: [&str; 6] = ["i0", "j0", "methods", "max_discrepancy", "tol", "pass"];

pub fn write_comparisons(out: &mut dyn Write, rows: &[Comparison], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(COMPARE_HEADER)?;
            for c in rows {
                w.write_record([
                    c.i0.to_string(),
                    c.j0.to_string(),
                    c.methods.join(";"),
                    fmt_f64(c.max_discrepancy),
                    fmt_f64(c.tol),
                    c.pass.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "i0": c.i0, "j0": c.j0, "methods": c.methods,
                        "max_discrepancy": json_f64(c.max_discrepancy),
                        "tol": json_f64(c.tol), "pass": c.pass,
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &v)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
