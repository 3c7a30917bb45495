//! Deterministic JSON and CSV emission: every number is rounded to 15 significant digits.

use serde::Serialize;
use serde_json::{Number, Value};

use crate::linalg::{ComplexMatrix, C64};

pub const SIGNIFICANT_DIGITS: usize = 15;

/// Rounds to 15 significant digits; `-0.0` becomes `0.0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let y: f64 = s.parse().expect("formatted float parses");
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

/// Shortest decimal text of `round_sig(x)`, as JSON would print it.
pub fn fmt_num(x: f64) -> String {
    let y = round_sig(x);
    if y.is_finite() {
        serde_json::to_string(&y).expect("finite float serializes")
    } else {
        "null".to_string()
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| Number::from_f64(round_sig(x)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

/// Serializes `value` to a JSON tree with all floats rounded.
pub fn to_value<T: Serialize>(value: &T) -> Value {
    round_value(serde_json::to_value(value).expect("report types serialize"))
}

/// Pretty JSON text with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(value)).expect("value serializes");
    s.push('\n');
    s
}

/// `[re, im]`.
pub fn complex_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Row-major nested `[[ [re, im], ... ], ...]`.
pub fn matrix_pairs(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| complex_pair(m[(i, j)])).collect())
        .collect()
}

pub fn vector_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().copied().map(complex_pair).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding_keeps_fifteen_digits() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265358979");
        assert_eq!(fmt_num(-0.0), "0.0");
        assert_eq!(fmt_num(1.0), "1.0");
        assert_eq!(fmt_num(1.234e-20), "1.234e-20");
        assert_eq!(round_sig(2.0f64.sqrt() / 4.0), 0.353553390593274);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn nested_values_are_rounded() {
        let v = to_value(&json!({"a": [0.1 + 0.2, 1], "b": {"c": std::f64::consts::E}}));
        assert_eq!(v, json!({"a": [0.3, 1], "b": {"c": 2.71828182845905}}));
    }
}
