use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "algorithm",
    "node_count",
    "failure_rate",
    "avg_delivery_time_h",
    "avg_computation_time_s",
    "avg_distance_km",
    "runs",
];

/// Averages over the completed runs of one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub algorithm: String,
    pub node_count: usize,
    pub failure_rate: f64,
    /// hours
    pub avg_delivery_time: f64,
    /// seconds
    pub avg_computation_time: f64,
    /// km
    pub avg_distance: f64,
    pub runs: usize,
}

/// `printf("%g")`: six significant digits, trailing zeros dropped, exponent
/// form outside `[1e-4, 1e6)`.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    trim(&format!("{:.*}", (5 - exp) as usize, x)).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn sorted(records: &[MetricsRecord]) -> Vec<&MetricsRecord> {
    let mut rows: Vec<&MetricsRecord> = records.iter().collect();
    rows.sort_by(|a, b| {
        a.algorithm
            .cmp(&b.algorithm)
            .then(a.node_count.cmp(&b.node_count))
            .then(a.failure_rate.total_cmp(&b.failure_rate))
    });
    rows
}

/// Writes the header and one row per record, sorted by
/// (algorithm, node_count, failure_rate).
pub fn write_metrics<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in sorted(records) {
        w.write_record([
            r.algorithm.clone(),
            r.node_count.to_string(),
            format_g(r.failure_rate),
            format_g(r.avg_delivery_time),
            format_g(r.avg_computation_time),
            format_g(r.avg_distance),
            r.runs.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_metrics(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_metrics(records, std::io::BufWriter::new(file))
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let bad = |e: csv::Error| Error::ConfigInvalid(format!("metrics csv: {e}"));
    let header = rdr.headers().map_err(bad)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::ConfigInvalid(format!(
            "unexpected metrics header {header:?}"
        )));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::ConfigInvalid(format!("metrics csv: {s:?}: {e}")))
    };
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::ConfigInvalid(format!("metrics csv: {s:?}: {e}")))
    };
    rdr.records()
        .map(|row| {
            let row = row.map_err(bad)?;
            Ok(MetricsRecord {
                algorithm: row[0].to_string(),
                node_count: int(&row[1])?,
                failure_rate: num(&row[2])?,
                avg_delivery_time: num(&row[3])?,
                avg_computation_time: num(&row[4])?,
                avg_distance: num(&row[5])?,
                runs: int(&row[6])?,
            })
        })
        .collect()
}
