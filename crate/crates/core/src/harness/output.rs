use std::io::Write;

use serde_json::{Map, Value};

use super::TrialResult;
use crate::Result;

pub const CSV_COLUMNS: [&str; 17] = [
    "protocol",
    "n",
    "d",
    "b",
    "gamma",
    "eps_target",
    "delta",
    "eps_accounted_closed",
    "eps_accounted_rdp",
    "mse_mean",
    "mse_stderr",
    "l1_mean",
    "bits_total",
    "bits_per_client",
    "trials",
    "seed",
    "infeasible",
];

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e12)`. Non-finite values print as `inf`, `-inf`, `nan`.
pub fn fmt_g12(x: f64) -> String {
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
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cells(r: &TrialResult) -> Vec<String> {
    vec![
        r.protocol.name().to_string(),
        r.n.to_string(),
        r.d.to_string(),
        fmt_g12(r.b),
        fmt_g12(r.gamma),
        fmt_g12(r.eps_target),
        fmt_g12(r.delta),
        fmt_g12(r.eps_accounted_closed),
        fmt_g12(r.eps_accounted_rdp),
        fmt_g12(r.mse_mean),
        fmt_g12(r.mse_stderr),
        fmt_g12(r.l1_mean),
        r.bits_total.to_string(),
        fmt_g12(r.bits_per_client),
        r.trials.to_string(),
        r.seed.to_string(),
        r.infeasible.to_string(),
    ]
}

pub fn write_csv_header<W: Write>(out: &mut W) -> Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    Ok(())
}

pub fn write_csv_row<W: Write>(out: &mut W, row: &TrialResult) -> Result<()> {
    writeln!(out, "{}", cells(row).join(","))?;
    Ok(())
}

pub fn to_csv(rows: &[TrialResult]) -> String {
    let mut buf = Vec::new();
    write_csv_header(&mut buf).expect("in-memory write");
    for r in rows {
        write_csv_row(&mut buf, r).expect("in-memory write");
    }
    String::from_utf8(buf).expect("ascii output")
}

fn number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = fmt_g12(x).parse().expect("formatted float parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

/// The row as a JSON object with the CSV column names. Non-finite numbers
/// become `null`.
pub fn json_row(r: &TrialResult) -> Value {
    let mut m = Map::new();
    m.insert("protocol".into(), Value::String(r.protocol.name().into()));
    m.insert("n".into(), r.n.into());
    m.insert("d".into(), r.d.into());
    m.insert("b".into(), number(r.b));
    m.insert("gamma".into(), number(r.gamma));
    m.insert("eps_target".into(), number(r.eps_target));
    m.insert("delta".into(), number(r.delta));
    m.insert(
        "eps_accounted_closed".into(),
        number(r.eps_accounted_closed),
    );
    m.insert("eps_accounted_rdp".into(), number(r.eps_accounted_rdp));
    m.insert("mse_mean".into(), number(r.mse_mean));
    m.insert("mse_stderr".into(), number(r.mse_stderr));
    m.insert("l1_mean".into(), number(r.l1_mean));
    m.insert("bits_total".into(), r.bits_total.into());
    m.insert("bits_per_client".into(), number(r.bits_per_client));
    m.insert("trials".into(), r.trials.into());
    m.insert("seed".into(), r.seed.into());
    m.insert("infeasible".into(), r.infeasible.into());
    Value::Object(m)
}

pub fn to_json(rows: &[TrialResult]) -> String {
    let arr: Vec<Value> = rows.iter().map(json_row).collect();
    serde_json::to_string_pretty(&Value::Array(arr)).expect("json values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(0.1), "0.1");
        assert_eq!(fmt_g12(-2.5), "-2.5");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(123456.789), "123456.789");
        assert_eq!(fmt_g12(1e-5), "1e-05");
        assert_eq!(fmt_g12(0.000123), "0.000123");
        assert_eq!(fmt_g12(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g12(2.0 / 3.0 * 1e13), "6.66666666667e+12");
        assert_eq!(fmt_g12(999999999999.9), "1e+12");
        assert_eq!(fmt_g12(f64::INFINITY), "inf");
    }
}
