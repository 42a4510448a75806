//! CSV rows for [`McResult`].

use std::io;
use std::path::Path;

use lp_kappa::McResult;

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "m",
    "n",
    "trials",
    "seed",
    "estimate",
    "stderr",
    "bound",
    "degenerate_count",
    "pass",
];

/// `x` with 9 significant digits, in the style of C's `%.9g`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn record(r: &McResult) -> [String; 10] {
    let opt = |v: Option<f64>| v.map(format_real).unwrap_or_default();
    [
        r.experiment.clone(),
        r.m.to_string(),
        r.n.to_string(),
        r.trials.to_string(),
        r.seed.to_string(),
        format_real(r.estimate),
        opt(r.stderr),
        opt(r.bound),
        r.degenerate_count.to_string(),
        r.pass.to_string(),
    ]
}

pub fn csv_string(results: &[McResult]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in results {
        w.write_record(record(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn write_csv(results: &[McResult], path: &Path) -> io::Result<()> {
    std::fs::write(path, csv_string(results))
}

/// Reads rows written by [`csv_string`]; `details` come back empty.
pub fn read_csv(text: &str) -> Result<Vec<McResult>, String> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = |field: &str| format!("row {}: bad {field}", i + 1);
        let int = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(CSV_HEADER[k]));
        let real = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(CSV_HEADER[k]));
        let opt = |k: usize| {
            if rec[k].is_empty() {
                Ok(None)
            } else {
                real(k).map(Some)
            }
        };
        out.push(McResult {
            experiment: rec[0].to_string(),
            m: int(1)? as usize,
            n: int(2)? as usize,
            trials: int(3)?,
            seed: int(4)?,
            estimate: real(5)?,
            stderr: opt(6)?,
            bound: opt(7)?,
            degenerate_count: int(8)?,
            pass: rec[9].parse().map_err(|_| bad("pass"))?,
            details: Vec::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(8.0622577483), "8.06225775");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333");
        assert_eq!(format_real(123456789.4), "123456789");
        assert_eq!(format_real(1234567891.0), "1.23456789e+09");
        assert_eq!(format_real(1.5e-7), "1.5e-07");
        assert_eq!(format_real(0.0001), "0.0001");
        assert_eq!(format_real(-2.0), "-2");
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert_eq!(format_real(0.0), "0");
    }

    #[test]
    fn header_only() {
        assert_eq!(csv_string(&[]), format!("{}\n", CSV_HEADER.join(",")));
    }
}
