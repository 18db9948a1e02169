//! JSON instance files.
//!
//! Schema: `{"h": int, "n": int, "ell": [int], "c": [[real]], "w": [[real]]}`
//! with an optional trailing `"hub_ids": [int]` holding the external label of
//! each hub. Hubs are re-sorted by spoke length on load; labels follow them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use starhub_core::{Instance, InstanceError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("invalid instance: {0}")]
    Invalid(#[from] InstanceError),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    h: usize,
    n: usize,
    ell: Vec<u64>,
    c: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    #[serde(default)]
    hub_ids: Option<Vec<usize>>,
}

fn field(field: &'static str, message: String) -> IoError {
    IoError::Field { field, message }
}

pub fn read_instance(text: &str) -> Result<Instance, IoError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.ell.len() != raw.h {
        return Err(field("ell", format!("has {} entries but h = {}", raw.ell.len(), raw.h)));
    }
    if raw.c.len() != raw.n {
        return Err(field("c", format!("has {} rows but n = {}", raw.c.len(), raw.n)));
    }
    if let Some(p) = raw.c.iter().position(|row| row.len() != raw.h) {
        return Err(field("c", format!("row {p} has {} entries but h = {}", raw.c[p].len(), raw.h)));
    }
    if raw.w.len() != raw.n {
        return Err(field("w", format!("has {} rows but n = {}", raw.w.len(), raw.n)));
    }
    if let Some(p) = raw.w.iter().position(|row| row.len() != raw.n) {
        return Err(field("w", format!("row {p} has {} entries but n = {}", raw.w[p].len(), raw.n)));
    }
    let ids = raw.hub_ids.unwrap_or_else(|| (0..raw.h).collect());
    Ok(Instance::with_hub_ids(raw.ell, raw.c, raw.w, ids)?)
}

pub fn read_instance_file(path: &Path) -> Result<Instance, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    read_instance(&text)
}

/// `x` with 17 significant digits in the style of C's `%.17g`, which always
/// round-trips an `f64`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    trim_fraction(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_row<T>(out: &mut String, row: &[T], fmt: impl Fn(&T) -> String) {
    out.push('[');
    for (k, v) in row.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt(v));
    }
    out.push(']');
}

fn write_matrix(out: &mut String, key: &str, rows: &[Vec<f64>]) {
    let _ = write!(out, "  \"{key}\": [\n");
    for (k, row) in rows.iter().enumerate() {
        out.push_str("    ");
        write_row(out, row, |&v| format_real(v));
        out.push_str(if k + 1 < rows.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]");
}

/// Canonical text of `inst`: hubs in sorted order, `hub_ids` present only
/// when it is not the identity.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"h\": {},", inst.hub_count());
    let _ = writeln!(out, "  \"n\": {},", inst.nonhub_count());
    out.push_str("  \"ell\": ");
    write_row(&mut out, inst.spoke_lengths(), |v| v.to_string());
    out.push_str(",\n");
    write_matrix(&mut out, "c", inst.collection_costs());
    out.push_str(",\n");
    write_matrix(&mut out, "w", inst.flows());
    let ids = inst.hub_ids();
    if ids.iter().enumerate().any(|(k, &id)| k != id) {
        out.push_str(",\n  \"hub_ids\": ");
        write_row(&mut out, ids, |v| v.to_string());
    }
    out.push_str("\n}\n");
    out
}

pub fn write_instance_file(path: &Path, inst: &Instance) -> Result<(), IoError> {
    fs::write(path, write_instance(inst)).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}
