//! Report assembly: every number in `report.json` is an object carrying its
//! `source`, and `curves.csv` rows are written at 17 significant digits.

use std::fmt::Write as _;

use chaos_bounds::numerics::Quadrature;
use serde_json::{json, Map, Value};

pub const MEASURED: &str = "measured";

/// {"value", "source"}.
pub fn num(value: f64, source: &str) -> Value {
    json!({ "value": value, "source": source })
}

pub fn measured(value: f64) -> Value {
    num(value, MEASURED)
}

/// A count or other exact integer.
pub fn int(value: u128, source: &str) -> Value {
    json!({ "value": value, "source": source })
}

/// A quadrature result with its achieved error estimate.
pub fn quad(q: &Quadrature<f64>, source: &str) -> Value {
    json!({
        "value": q.value,
        "source": source,
        "error_estimate": q.error,
        "converged": q.converged,
    })
}

/// A value whose accuracy is tracked separately, flagged when unconverged.
pub fn estimate(value: f64, source: &str, error: f64, converged: bool) -> Value {
    json!({
        "value": value,
        "source": source,
        "error_estimate": error,
        "converged": converged,
    })
}

pub fn opt(value: Option<f64>, source: &str) -> Value {
    value.map_or(Value::Null, |v| num(v, source))
}

/// Cumulants κ_lo..κ_hi keyed by order.
pub fn by_order(values: impl IntoIterator<Item = (usize, f64)>, source: &str) -> Value {
    let mut m = Map::new();
    for (j, v) in values {
        m.insert(j.to_string(), num(v, source));
    }
    Value::Object(m)
}

/// One plot-ready point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub series: String,
    pub param: f64,
    pub z: f64,
    pub measured: Option<f64>,
    pub error: Option<f64>,
    pub predicted: Option<f64>,
}

pub const CSV_HEADER: &str = "series,param,z,measured,error,predicted";

fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        write!(out, "{v:.16e}").expect("writing to a String");
    }
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.series);
        cell(&mut out, Some(r.param));
        cell(&mut out, Some(r.z));
        cell(&mut out, r.measured);
        cell(&mut out, r.error);
        cell(&mut out, r.predicted);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        let rows = [CurveRow {
            series: "s".into(),
            param: 0.1,
            z: -1.0,
            measured: Some(1.0 / 3.0),
            error: None,
            predicted: Some(0.0),
        }];
        let csv = curves_csv(&rows);
        let line = csv.lines().nth(1).unwrap();
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[4], "");
        assert_eq!(cells[3].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(cells[1].parse::<f64>().unwrap(), 0.1);
        assert_eq!(cells[3], "3.3333333333333331e-1");
    }

    #[test]
    fn flagged_values_carry_error() {
        let v = estimate(1.0, "x", 1e-3, false);
        assert_eq!(v["error_estimate"], 1e-3);
        assert_eq!(v["converged"], false);
    }
}
