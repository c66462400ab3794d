//! Number formatting shared by the CSV and JSON writers.

use serde_json::{Number, Value};

/// 17 significant digits: positional for decimal exponents in `[-5, 16]`,
/// scientific otherwise.
pub fn number(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0.0000000000000000".to_string();
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("scientific format") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..=16).contains(&exp) {
        format!("{v:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

/// A JSON number carrying the same text as [`number`]; `null` if not finite.
pub fn json_number(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(number(v).parse::<Number>().expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

/// Rows of already formatted fields.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
