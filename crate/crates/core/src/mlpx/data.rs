//! Series loading, chronological split and lag-window datasets.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Reads one numeric column from a headered CSV file.
pub fn load_series(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    let idx = headers.iter().position(|h| h.trim() == column).ok_or_else(|| {
        Error::Data(format!("{}: column '{column}' not found", path.display()))
    })?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let cell = rec.get(idx).ok_or_else(|| {
            Error::Data(format!("{}: line {line}: missing column '{column}'", path.display()))
        })?;
        let v: f64 = cell.trim().parse().map_err(|_| {
            Error::Data(format!("{}: line {line}: '{cell}' is not a number", path.display()))
        })?;
        if !v.is_finite() {
            return Err(Error::Data(format!("{}: line {line}: non-finite value", path.display())));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Chronological split at `floor(frac * len)`, standardized with the
/// training part's mean and (population) standard deviation.
pub fn split_standardize(series: &[f64], train_frac: f64) -> Result<(Vec<f64>, Vec<f64>, Scaler)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!("train_frac must be in (0, 1), got {train_frac}")));
    }
    let cut = (train_frac * series.len() as f64).floor() as usize;
    if cut < 2 || cut >= series.len() {
        return Err(Error::invalid(format!(
            "split of {} points at {train_frac} leaves an empty or singleton part",
            series.len()
        )));
    }
    let (tr, te) = series.split_at(cut);
    let mean = tr.iter().sum::<f64>() / tr.len() as f64;
    let var = tr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / tr.len() as f64;
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(Error::Degenerate("training split has zero standard deviation".into()));
    }
    let scaler = Scaler { mean, std };
    Ok((
        tr.iter().map(|&v| scaler.apply(v)).collect(),
        te.iter().map(|&v| scaler.apply(v)).collect(),
        scaler,
    ))
}

/// Lag windows over a series: window `t` has inputs
/// `[y_t, y_{t-1}, ..., y_{t-p+1}]` and targets `y_{t+1}, ..., y_{t+h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    series: Vec<f64>,
    p: usize,
    h: usize,
    ends: Vec<usize>,
}

impl WindowSet {
    /// Every window whose inputs and targets lie inside `series`.
    pub fn new(series: Vec<f64>, p: usize, h: usize) -> Result<Self> {
        if p == 0 || h == 0 {
            return Err(Error::invalid("lags and horizon must be >= 1"));
        }
        if series.len() < p + h {
            return Err(Error::TooFewSamples {
                need: p + h,
                got: series.len(),
            });
        }
        let ends = (p - 1..series.len() - h).collect();
        Ok(Self { series, p, h, ends })
    }

    /// Keeps the last `n` windows.
    pub fn tail(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.ends.len() {
            return Err(Error::TooFewSamples {
                need: n.max(1),
                got: self.ends.len(),
            });
        }
        Ok(Self {
            series: self.series.clone(),
            p: self.p,
            h: self.h,
            ends: self.ends[self.ends.len() - n..].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn horizon(&self) -> usize {
        self.h
    }

    pub fn input_into(&self, i: usize, buf: &mut [f64]) {
        let t = self.ends[i];
        for (j, b) in buf.iter_mut().enumerate().take(self.p) {
            *b = self.series[t - j];
        }
    }

    pub fn input(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.p];
        self.input_into(i, &mut v);
        v
    }

    /// `y_{t+k}` for `k` in `1..=h`.
    pub fn targets(&self, i: usize) -> &[f64] {
        let t = self.ends[i];
        &self.series[t + 1..=t + self.h]
    }
}
