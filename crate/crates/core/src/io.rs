//! CSV ingestion and export of multichannel series, JSON helpers.
//!
//! CSV layout: a header row of channel labels, then one row per sample.
//! Values are written with 17 significant digits so a write/read cycle is exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::MultiChannelSeries;

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_series<R: Read>(reader: R, sample_rate_hz: f64) -> Result<MultiChannelSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let labels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if labels.is_empty() || labels.iter().all(|l| l.is_empty()) {
        return Err(Error::InvalidInput("CSV has no header row of channel labels".into()));
    }
    let mut channels = vec![Vec::new(); labels.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "row {} has {} fields, header has {}",
                row + 2,
                rec.len(),
                labels.len()
            )));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Parse(format!("row {}, column {}: '{field}' is not a number", row + 2, c + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "row {}, column {}: non-finite value",
                    row + 2,
                    c + 1
                )));
            }
            channels[c].push(v);
        }
    }
    MultiChannelSeries::new(channels, sample_rate_hz, labels)
}

pub fn read_series_file(path: &Path, sample_rate_hz: f64) -> Result<MultiChannelSeries> {
    read_series(File::open(path)?, sample_rate_hz)
}

pub fn write_series<W: Write>(series: &MultiChannelSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(series.labels())?;
    for t in 0..series.len() {
        w.write_record(series.row(t).into_iter().map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_file(series: &MultiChannelSeries, path: &Path) -> Result<()> {
    write_series(series, BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_json_file<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    write_json(value, BufWriter::new(File::create(path)?))
}
