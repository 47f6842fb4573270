//! Number formatting and parsing for the CSV files.

use crate::error::{Error, Result};

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// enough to round-trip any `f64`.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        strip_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            strip_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn strip_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Reads a numeric table with the given header. Blank lines and `#` comments are skipped.
pub fn parse_numeric_csv(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header {
            if fields != header {
                return Err(err(format!(
                    "expected header '{}', got '{line}'",
                    header.join(",")
                )));
            }
            seen_header = true;
            continue;
        }
        if fields.len() != header.len() {
            return Err(err(format!(
                "expected {} fields, got {}",
                header.len(),
                fields.len()
            )));
        }
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| err(format!("bad number '{f}': {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if !seen_header {
        return Err(Error::Parse {
            line: 0,
            message: format!("missing header '{}'", header.join(",")),
        });
    }
    Ok(rows)
}
