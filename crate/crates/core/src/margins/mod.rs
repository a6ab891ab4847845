//! Margins, ramp loss, and the spectrally-normalized margin distribution.
//!
//! The normalized margin of `(x, y)` divides the raw multiclass margin
//! `F(x)_y - max_{i≠y} F(x)_i` by `R_A · ‖X‖_2 / n`, which makes margin
//! distributions comparable across datasets and across training.

pub mod summary;

use std::path::Path;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::Network;
use crate::output::{fmt17, read_csv, ser_f64, ser_f64_opt, write_csv};

pub use summary::{summarize_values, Histogram, Kde, Summary};

/// `v_y - max_{i≠y} v_i` for a 1-based label `y`.
pub fn margin_operator(v: &[f64], y: usize) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::param(format!(
            "margin needs at least 2 classes, got {}",
            v.len()
        )));
    }
    if y == 0 || y > v.len() {
        return Err(Error::param(format!("label {y} outside 1..={}", v.len())));
    }
    let other = v
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != y - 1)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(v[y - 1] - other)
}

/// Ramp loss: 0 below `-γ`, `1 + r/γ` on `[-γ, 0]`, 1 above 0.
pub fn ramp_loss(r: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param(format!("ramp width must be positive, got {gamma}")));
    }
    Ok(if r < -gamma {
        0.0
    } else if r > 0.0 {
        1.0
    } else {
        1.0 + r / gamma
    })
}

/// 0-based index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn check_outputs(outputs: &Matrix, ds: &Dataset) -> Result<()> {
    if outputs.cols() != ds.num_classes() {
        return Err(Error::dim(format!(
            "network has {} outputs but the dataset has {} classes",
            outputs.cols(),
            ds.num_classes()
        )));
    }
    Ok(())
}

/// Raw margins of network outputs (examples as rows) against 1-based labels.
pub fn raw_margins(outputs: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    outputs
        .iter_rows()
        .zip(labels)
        .map(|(row, &y)| margin_operator(row, y))
        .collect()
}

/// Mean of `ℓ_γ(-M(F(x_i), y_i))` over precomputed raw margins.
pub fn ramp_risk_from_margins(raw: &[f64], gamma: f64) -> Result<f64> {
    if raw.is_empty() {
        return Err(Error::param("empty margin sample"));
    }
    let mut total = 0.0;
    for &m in raw {
        total += ramp_loss(-m, gamma)?;
    }
    Ok(total / raw.len() as f64)
}

/// Empirical ramp risk `n^{-1} Σ_i ℓ_γ(-M(F(x_i), y_i))`.
pub fn ramp_risk_empirical(net: &Network, ds: &Dataset, gamma: f64) -> Result<f64> {
    ramp_loss(0.0, gamma)?;
    let out = net.forward(ds.features())?;
    check_outputs(&out, ds)?;
    ramp_risk_from_margins(&raw_margins(&out, ds.labels())?, gamma)
}

/// Fraction of rows whose argmax (lowest index on ties) differs from the label.
pub fn error_rate_from_outputs(outputs: &Matrix, labels: &[usize]) -> f64 {
    let wrong = outputs
        .iter_rows()
        .zip(labels)
        .filter(|(row, &y)| argmax(row) + 1 != y)
        .count();
    wrong as f64 / labels.len() as f64
}

/// Classification error of the network on a dataset.
pub fn error_rate(net: &Network, ds: &Dataset) -> Result<f64> {
    let out = net.forward(ds.features())?;
    check_outputs(&out, ds)?;
    Ok(error_rate_from_outputs(&out, ds.labels()))
}

/// Median of the strictly positive raw margins, or 1.0 if there are none.
pub fn default_gamma(raw: &[f64]) -> f64 {
    let mut pos: Vec<f64> = raw.iter().copied().filter(|&m| m > 0.0).collect();
    if pos.is_empty() {
        return 1.0;
    }
    pos.sort_by(f64::total_cmp);
    summary::quantile_sorted(&pos, 0.5)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginDistribution {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    /// `R_A · ‖X‖_2 / n`.
    #[serde(serialize_with = "ser_f64")]
    pub normalizer: f64,
    #[serde(serialize_with = "ser_f64_opt")]
    pub gamma_used: Option<f64>,
}

/// Location and spread of the normalized margins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginDigest {
    #[serde(serialize_with = "ser_f64")]
    pub mean: f64,
    #[serde(serialize_with = "ser_f64")]
    pub std: f64,
    #[serde(serialize_with = "ser_f64")]
    pub min: f64,
    #[serde(serialize_with = "ser_f64")]
    pub q25: f64,
    #[serde(serialize_with = "ser_f64")]
    pub median: f64,
    #[serde(serialize_with = "ser_f64")]
    pub q75: f64,
    #[serde(serialize_with = "ser_f64")]
    pub max: f64,
    #[serde(serialize_with = "ser_f64")]
    pub normalizer: f64,
}

impl MarginDistribution {
    /// Normalizes raw margins by `R_A · ‖X‖_2 / n`.
    pub fn from_raw(raw: Vec<f64>, spectral_complexity: f64, data_norm: f64) -> Result<Self> {
        if !(spectral_complexity > 0.0) || !spectral_complexity.is_finite() {
            return Err(Error::Degenerate(format!(
                "spectral complexity must be positive to normalize margins, got {spectral_complexity}"
            )));
        }
        if !(data_norm > 0.0) {
            return Err(Error::Degenerate(
                "data matrix is zero; the margin normalizer vanishes".into(),
            ));
        }
        if raw.is_empty() {
            return Err(Error::param("empty margin sample"));
        }
        let normalizer = spectral_complexity * data_norm / raw.len() as f64;
        let normalized = raw.iter().map(|m| m / normalizer).collect();
        Ok(Self {
            raw,
            normalized,
            normalizer,
            gamma_used: None,
        })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_used = Some(gamma);
        self
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn mean_normalized(&self) -> f64 {
        self.normalized.iter().sum::<f64>() / self.normalized.len() as f64
    }

    pub fn digest(&self) -> MarginDigest {
        let v = &self.normalized;
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        MarginDigest {
            mean,
            std,
            min: sorted[0],
            q25: summary::quantile_sorted(&sorted, 0.25),
            median: summary::quantile_sorted(&sorted, 0.5),
            q75: summary::quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            normalizer: self.normalizer,
        }
    }

    /// Histogram and KDE of the normalized margins.
    pub fn summarize(&self, bins: usize) -> Result<Summary> {
        summarize_values(&self.normalized, bins)
    }
}

/// Raw and normalized margins of `net` on `ds` given its spectral complexity.
pub fn margin_distribution(
    net: &Network,
    ds: &Dataset,
    spectral_complexity: f64,
) -> Result<MarginDistribution> {
    let out = net.forward(ds.features())?;
    check_outputs(&out, ds)?;
    let raw = raw_margins(&out, ds.labels())?;
    MarginDistribution::from_raw(raw, spectral_complexity, ds.data_norm())
}

pub const MARGIN_CSV_HEADER: [&str; 3] = ["index", "raw_margin", "normalized_margin"];
pub const HISTOGRAM_CSV_HEADER: [&str; 3] = ["bin_left", "bin_right", "density"];
pub const KDE_CSV_HEADER: [&str; 2] = ["kde_x", "kde_density"];

pub fn write_margins_csv(path: impl AsRef<Path>, md: &MarginDistribution) -> Result<()> {
    let rows: Vec<Vec<String>> = md
        .raw
        .iter()
        .zip(&md.normalized)
        .enumerate()
        .map(|(i, (r, z))| vec![i.to_string(), fmt17(*r), fmt17(*z)])
        .collect();
    write_csv(path, &MARGIN_CSV_HEADER, &rows)
}

/// Reads back a margin CSV as `(raw, normalized)` columns.
pub fn read_margins_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = read_csv(path, &MARGIN_CSV_HEADER)?;
    Ok(rows.iter().map(|r| (r[1], r[2])).unzip())
}

pub fn write_summary_csvs(
    histogram_path: impl AsRef<Path>,
    kde_path: impl AsRef<Path>,
    s: &Summary,
) -> Result<()> {
    let h = &s.histogram;
    let rows: Vec<Vec<String>> = h
        .edges
        .windows(2)
        .zip(&h.density)
        .map(|(e, d)| vec![fmt17(e[0]), fmt17(e[1]), fmt17(*d)])
        .collect();
    write_csv(histogram_path, &HISTOGRAM_CSV_HEADER, &rows)?;
    let rows: Vec<Vec<String>> = s
        .kde
        .x
        .iter()
        .zip(&s.kde.density)
        .map(|(x, d)| vec![fmt17(*x), fmt17(*d)])
        .collect();
    write_csv(kde_path, &KDE_CSV_HEADER, &rows)
}
