//! Tabular experiment reports in CSV or JSON.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Column order of every report.
pub const COLUMNS: [&str; 9] = [
    "experiment",
    "method",
    "mean",
    "variance",
    "rel_accuracy",
    "work",
    "iterations",
    "runs",
    "wall_ms",
];

/// Aggregate of one experiment. `mean` and `variance` refer to the
/// discounted price estimates across runs; `work` is the mean per run and
/// `iterations` is NaN for non-splitting methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub method: String,
    #[serde(deserialize_with = "nan_or_f64")]
    pub mean: f64,
    #[serde(deserialize_with = "nan_or_f64")]
    pub variance: f64,
    #[serde(deserialize_with = "nan_or_f64")]
    pub rel_accuracy: f64,
    #[serde(deserialize_with = "nan_or_f64")]
    pub work: f64,
    #[serde(deserialize_with = "nan_or_f64")]
    pub iterations: f64,
    pub runs: u64,
    #[serde(deserialize_with = "nan_or_f64")]
    pub wall_ms: f64,
}

fn nan_or_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }
    Ok(match Option::<Num>::deserialize(d)? {
        None => f64::NAN,
        Some(Num::F(x)) => x,
        Some(Num::S(s)) if s.is_empty() => f64::NAN,
        Some(Num::S(s)) => s.parse().map_err(serde::de::Error::custom)?,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

/// Writes `rows` to `path`, creating or truncating it.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_report(rows, format, file)
}

pub fn write_report<W: Write>(rows: &[ReportRow], format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            if rows.is_empty() {
                w.write_record(COLUMNS)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            out.write_all(to_json(rows).as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// JSON array of row objects. Floats use the shortest representation that
/// round-trips; non-finite values become `null`.
pub fn to_json(rows: &[ReportRow]) -> String {
    let mut s = String::from("[");
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str("\n  {");
        let _ = write!(
            s,
            "\"experiment\": {}, \"method\": {}, \"mean\": {}, \"variance\": {}, \
             \"rel_accuracy\": {}, \"work\": {}, \"iterations\": {}, \"runs\": {}, \"wall_ms\": {}",
            serde_json::Value::from(r.experiment.as_str()),
            serde_json::Value::from(r.method.as_str()),
            json_num(r.mean),
            json_num(r.variance),
            json_num(r.rel_accuracy),
            json_num(r.work),
            json_num(r.iterations),
            r.runs,
            json_num(r.wall_ms),
        );
        s.push('}');
    }
    if !rows.is_empty() {
        s.push('\n');
    }
    s.push_str("]\n");
    s
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        "null".into()
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_json(path: &Path) -> Result<Vec<ReportRow>> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ReportRow {
        ReportRow {
            experiment: "bs \"extreme\"".into(),
            method: "ams".into(),
            mean: 2.4351e-10,
            variance: 1.0 / 3.0 * 1e-21,
            rel_accuracy: 0.1,
            work: 7.5e6,
            iterations: f64::NAN,
            runs: 50,
            wall_ms: 12.5,
        }
    }

    fn same(a: &ReportRow, b: &ReportRow) -> bool {
        let f = |x: f64, y: f64| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan());
        a.experiment == b.experiment
            && a.method == b.method
            && f(a.mean, b.mean)
            && f(a.variance, b.variance)
            && f(a.rel_accuracy, b.rel_accuracy)
            && f(a.work, b.work)
            && f(a.iterations, b.iterations)
            && a.runs == b.runs
            && f(a.wall_ms, b.wall_ms)
    }

    #[test]
    fn csv_header_and_round_trip() {
        let mut buf = Vec::new();
        write_report(&[row()], ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        let back: Vec<ReportRow> = csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert!(same(&back[0], &row()));
    }

    #[test]
    fn json_round_trip_preserves_bits() {
        let text = to_json(&[row(), row()]);
        assert!(text.contains("\"iterations\": null"));
        let back: Vec<ReportRow> = serde_json::from_str(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert!(same(&back[1], &row()));
    }

    #[test]
    fn empty_reports() {
        let mut buf = Vec::new();
        write_report(&[], ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), COLUMNS.join(","));
        assert_eq!(to_json(&[]), "[]\n");
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
