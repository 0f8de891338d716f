//! Deterministic CSV and JSON output.

use std::io::Write;
use std::path::Path;

use msd_relax::{Matrix, Measure};
use serde_json::{json, Value};

use crate::CliError;

/// `x` with 12 significant digits, like C's `%.12g`; always a `.` separator.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes `bytes` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// CSV with a header row; numbers are pre-formatted by the caller.
pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))
}

/// Pretty JSON with a trailing newline; object keys are sorted.
pub fn json_bytes(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("JSON values serialize");
    out.push(b'\n');
    out
}

fn vector_json(m: &Matrix) -> Value {
    match m.as_slice() {
        [x] => json!(x),
        xs => json!(xs),
    }
}

/// A measure in the input schema; boundary atoms appear as atoms at the endpoints.
pub fn measure_json(mu: &Measure) -> Value {
    let (a, b) = mu.domain();
    let density = mu.density();
    let pieces: Vec<Vec<Value>> = density.pieces().iter().map(|p| p.iter().map(vector_json).collect()).collect();
    let [left, right] = mu.boundary_atoms();
    let mut atoms: Vec<Value> = Vec::new();
    if let Some(w) = left {
        atoms.push(json!({"x": a, "w": vector_json(&w)}));
    }
    atoms.extend(mu.atoms().iter().map(|at| json!({"x": at.x, "w": vector_json(&at.weight)})));
    if let Some(w) = right {
        atoms.push(json!({"x": b, "w": vector_json(&w)}));
    }
    let cantor: Vec<Value> = mu
        .cantor_parts()
        .iter()
        .map(|c| json!({"map": [c.scale, c.offset], "w": vector_json(&c.weight)}))
        .collect();
    json!({
        "domain": [a, b],
        "density": {"breakpoints": density.breaks(), "pieces": pieces},
        "atoms": atoms,
        "cantor": cantor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(2.0 / 3.0 * 1e6), "666666.666667");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_sig(0.0001), "0.0001");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
    }

    #[test]
    fn rounding_can_carry_into_the_exponent() {
        assert_eq!(fmt_sig(9.9999999999999e11), "1e+12");
        assert_eq!(fmt_sig(0.99999999999999), "1");
    }

    #[test]
    fn measures_serialize_in_the_input_schema() {
        let mu = Measure::dirac((-1.0, 1.0), -1.0, Matrix::scalar(2.0)).unwrap();
        let v = measure_json(&mu);
        assert_eq!(v["atoms"][0], json!({"x": -1.0, "w": 2.0}));
        assert_eq!(v["domain"], json!([-1.0, 1.0]));
    }
}
