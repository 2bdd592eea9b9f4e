//! CSV and JSON file formats.
//!
//! Every CSV starts with a `# schema_version=1` comment line followed by a header row.
//! Spectra use the header `frequency_hz,psd_w_per_hz` and keep `rbw_hz` and `kind` in a
//! JSON sidecar next to the CSV (`name.csv` → `name.json`). Time series use `time_s,value`.

use std::io::Write;
use std::path::{Path, PathBuf};

use eotk_core::dynamics::TimeSeries;
use eotk_core::spectra::{Spectrum, SpectrumKind};
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, CliResult, InBlock};

pub const SPECTRUM_HEADER: [&str; 2] = ["frequency_hz", "psd_w_per_hz"];
pub const TIME_SERIES_HEADER: [&str; 2] = ["time_s", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSidecar {
    pub rbw_hz: f64,
    pub kind: SpectrumKind,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Formats a float so that parsing it back gives the same bits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

/// Serializes a table: schema comment, header, one row per record.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::numerical(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::numerical(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| CliError::numerical(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| CliError::numerical(e.to_string()))?;
    Ok(format!("# schema_version={SCHEMA_VERSION}\n{body}"))
}

/// Reads a two-column numeric CSV with the given header. Errors carry the file line number.
pub fn read_two_columns(path: &Path, header: [&str; 2]) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_two_columns(&text, header).map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

pub fn parse_two_columns(text: &str, header: [&str; 2]) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let head = r.headers().map_err(|e| CliError::input(format!("line 1: {e}")))?.clone();
    if head.len() == 0 {
        return Err(CliError::input("file is empty"));
    }
    let got: Vec<&str> = head.iter().collect();
    if got != header {
        let line = head.position().map_or(1, |p| p.line());
        return Err(CliError::input(format!("line {line}: expected header `{}`, found `{}`", header.join(","), got.join(","))));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::input(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(CliError::input(format!("line {line}: expected 2 fields, found {}", rec.len())));
        }
        let parse = |s: &str| -> CliResult<f64> {
            let v: f64 = s.parse().map_err(|_| CliError::input(format!("line {line}: `{s}` is not a number")))?;
            if !v.is_finite() {
                return Err(CliError::input(format!("line {line}: `{s}` is not finite")));
            }
            Ok(v)
        };
        a.push(parse(&rec[0])?);
        b.push(parse(&rec[1])?);
    }
    if a.is_empty() {
        return Err(CliError::input("no data rows"));
    }
    Ok((a, b))
}

pub fn read_spectrum(path: &Path) -> CliResult<Spectrum> {
    let (f, p) = read_two_columns(path, SPECTRUM_HEADER)?;
    let side_path = sidecar_path(path);
    let text = std::fs::read_to_string(&side_path).map_err(|e| CliError::input(format!("cannot read sidecar {}: {e}", side_path.display())))?;
    let side: SpectrumSidecar = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", side_path.display())))?;
    Spectrum::new(f, p, side.rbw_hz, side.kind).in_block(&path.display().to_string())
}

pub fn spectrum_csv(s: &Spectrum) -> CliResult<String> {
    let rows: Vec<Vec<String>> = s.frequency.iter().zip(&s.psd).map(|(f, p)| vec![fmt_f64(*f), fmt_f64(*p)]).collect();
    csv_string(&SPECTRUM_HEADER, &rows)
}

pub fn sidecar_json(s: &Spectrum) -> String {
    let side = SpectrumSidecar { rbw_hz: s.rbw, kind: s.kind };
    let mut out = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    out.push('\n');
    out
}

pub fn write_spectrum(path: &Path, s: &Spectrum) -> CliResult<()> {
    std::fs::write(path, spectrum_csv(s)?)?;
    std::fs::write(sidecar_path(path), sidecar_json(s))?;
    Ok(())
}

pub fn read_time_series(path: &Path) -> CliResult<TimeSeries> {
    let (t, v) = read_two_columns(path, TIME_SERIES_HEADER)?;
    TimeSeries::new(t, v).in_block(&path.display().to_string())
}

pub fn time_series_csv(ts: &TimeSeries) -> CliResult<String> {
    let rows: Vec<Vec<String>> = ts.time.iter().zip(&ts.values).map(|(t, v)| vec![fmt_f64(*t), fmt_f64(*v)]).collect();
    csv_string(&TIME_SERIES_HEADER, &rows)
}

/// Pretty JSON with a trailing newline.
pub fn json_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::numerical(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `out` or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.0, -1.5e-300, 6.672e9, 1.0 / 3.0, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn parse_reports_line_numbers() {
        let ok = "# schema_version=1\nfrequency_hz,psd_w_per_hz\n1,2\n3,4\n";
        assert_eq!(parse_two_columns(ok, SPECTRUM_HEADER).unwrap(), (vec![1.0, 3.0], vec![2.0, 4.0]));
        let bad = "# schema_version=1\nfrequency_hz,psd_w_per_hz\n1,2\n3,x\n";
        let e = parse_two_columns(bad, SPECTRUM_HEADER).unwrap_err();
        assert!(e.message.contains("line 4"), "{}", e.message);
        let short = "# schema_version=1\nfrequency_hz,psd_w_per_hz\n1,2\n3\n";
        let e = parse_two_columns(short, SPECTRUM_HEADER).unwrap_err();
        assert!(e.message.contains("line 4"), "{}", e.message);
        assert!(parse_two_columns("time_s,value\n1,2\n", SPECTRUM_HEADER).is_err());
        assert!(parse_two_columns("", SPECTRUM_HEADER).is_err());
    }

    #[test]
    fn csv_has_schema_line_and_header() {
        let s = csv_string(&["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(s, "# schema_version=1\na,b\n1,2\n");
    }
}
