use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FrequencyGrid, ResponseCurve};

pub const CURVE_HEADER: [&str; 2] = ["freq_GHz", "S11_dB"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    #[serde(rename = "freq_GHz")]
    freq_ghz: f64,
    #[serde(rename = "S11_dB")]
    s11_db: f64,
}

/// A curve as stored on disk: strictly increasing, not necessarily uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCurve {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedCurve {
    /// Linear interpolation; clamps to the end samples outside the table.
    pub fn value_at(&self, f: f64) -> f64 {
        let n = self.freqs.len();
        if f <= self.freqs[0] {
            return self.values[0];
        }
        if f >= self.freqs[n - 1] {
            return self.values[n - 1];
        }
        let i = self.freqs.partition_point(|&g| g <= f) - 1;
        let t = (f - self.freqs[i]) / (self.freqs[i + 1] - self.freqs[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    pub fn resample(&self, grid: &FrequencyGrid) -> Result<ResponseCurve> {
        let values = grid
            .frequencies()
            .into_iter()
            .map(|f| self.value_at(f).min(0.0))
            .collect();
        ResponseCurve::new(*grid, values)
    }
}

/// Writes `freq_GHz,S11_dB` rows. Floats use the shortest exact representation.
pub fn save_curve(path: &Path, curve: &ResponseCurve) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for (f, v) in curve.grid.frequencies().into_iter().zip(&curve.values) {
        w.serialize(Row {
            freq_ghz: f,
            s11_db: *v,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_tabulated(path: &Path) -> Result<TabulatedCurve> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(Error::Parse(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            CURVE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for (row_no, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if !row.freq_ghz.is_finite() || !row.s11_db.is_finite() {
            return Err(Error::Parse(format!(
                "{}: non-finite value in data row {}",
                path.display(),
                row_no + 1
            )));
        }
        if let Some(&prev) = freqs.last() {
            if row.freq_ghz <= prev {
                return Err(Error::NonMonotoneFrequency { row: row_no + 1 });
            }
        }
        freqs.push(row.freq_ghz);
        values.push(row.s11_db);
    }
    if freqs.len() < 2 {
        return Err(Error::Parse(format!(
            "{}: need at least 2 samples",
            path.display()
        )));
    }
    Ok(TabulatedCurve { freqs, values })
}

/// Loads a curve and resamples it onto `grid`.
pub fn load_curve(path: &Path, grid: &FrequencyGrid) -> Result<ResponseCurve> {
    load_tabulated(path)?.resample(grid)
}
