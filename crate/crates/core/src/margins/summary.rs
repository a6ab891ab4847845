//! Histogram and Gaussian KDE summaries of a margin sample.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::ser_f64_vec;

/// Points at which the KDE curve is sampled.
pub const KDE_POINTS: usize = 256;
/// Smallest bandwidth the KDE will use.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;
/// The KDE grid extends this many bandwidths past the sample range.
const KDE_PAD: f64 = 6.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// Bin edges, one more than the number of bins.
    #[serde(serialize_with = "ser_f64_vec")]
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// `count / (n · width)` so that `Σ density · width = 1`.
    #[serde(serialize_with = "ser_f64_vec")]
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Fraction of the sample in each bin.
    pub fn masses(&self) -> Vec<f64> {
        let n: usize = self.counts.iter().sum();
        self.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }

    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kde {
    #[serde(serialize_with = "crate::output::ser_f64")]
    pub bandwidth: f64,
    #[serde(serialize_with = "ser_f64_vec")]
    pub x: Vec<f64>,
    #[serde(serialize_with = "ser_f64_vec")]
    pub density: Vec<f64>,
}

impl Kde {
    /// Trapezoid integral of the sampled curve.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }

    /// Grid point with the highest density.
    pub fn mode(&self) -> f64 {
        let i = self
            .density
            .iter()
            .enumerate()
            .fold(0, |best, (i, &d)| if d > self.density[best] { i } else { best });
        self.x[i]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub histogram: Histogram,
    pub kde: Kde,
}

/// Equal-width histogram over `[min, max]` and a Gaussian KDE with
/// Silverman's bandwidth sampled at [`KDE_POINTS`] points.
///
/// A constant sample gets one unit-width bin centred on the value and a KDE
/// at the bandwidth floor.
pub fn summarize_values(values: &[f64], bins: usize) -> Result<Summary> {
    if bins < 2 {
        return Err(Error::param(format!("need at least 2 bins, got {bins}")));
    }
    if values.is_empty() {
        return Err(Error::param("cannot summarize an empty sample"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::param(format!("non-finite margin {v}")));
    }
    Ok(Summary {
        histogram: histogram(values, bins),
        kde: kde(values),
    })
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn histogram(values: &[f64], bins: usize) -> Histogram {
    let n = values.len() as f64;
    let (lo, hi) = min_max(values);
    if lo == hi {
        return Histogram {
            edges: vec![lo - 0.5, lo + 0.5],
            counts: vec![values.len()],
            density: vec![1.0],
        };
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / (n * (e[1] - e[0])))
        .collect();
    Histogram {
        edges,
        counts,
        density,
    }
}

/// Silverman's rule of thumb `0.9 · min(σ, IQR/1.34) · n^{-1/5}`, floored.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return BANDWIDTH_FLOOR;
    }
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(BANDWIDTH_FLOOR)
}

/// Linear-interpolation quantile of an ascending sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

fn kde(values: &[f64]) -> Kde {
    let h = silverman_bandwidth(values);
    let (lo, hi) = min_max(values);
    let (a, b) = (lo - KDE_PAD * h, hi + KDE_PAD * h);
    let step = (b - a) / (KDE_POINTS - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * PI).sqrt());
    let x: Vec<f64> = (0..KDE_POINTS).map(|i| a + step * i as f64).collect();
    let density = x
        .iter()
        .map(|&t| {
            norm * values
                .iter()
                .map(|&v| {
                    let u = (t - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Kde {
        bandwidth: h,
        x,
        density,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    #[test]
    fn two_point_histogram() {
        let s = summarize_values(&[0.0, 1.0], 2).unwrap();
        assert_eq!(s.histogram.masses(), vec![0.5, 0.5]);
        assert!((s.histogram.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kde_of_normal_samples_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = summarize_values(&v, 30).unwrap();
        assert!((s.kde.integral() - 1.0).abs() < 1e-6, "{}", s.kde.integral());
        assert!((s.histogram.integral() - 1.0).abs() < 1e-6);
        assert_eq!(s.kde.x.len(), KDE_POINTS);
    }

    #[test]
    fn kde_mode_of_tight_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = Normal::new(3.0, 0.05).unwrap();
        let v: Vec<f64> = (0..500).map(|_| d.sample(&mut rng)).collect();
        let s = summarize_values(&v, 10).unwrap();
        assert!((s.kde.mode() - 3.0).abs() < 0.1);
    }

    #[test]
    fn constant_sample_is_degenerate_but_normalized() {
        let s = summarize_values(&[2.0; 7], 5).unwrap();
        assert_eq!(s.histogram.bins(), 1);
        assert_eq!(s.kde.bandwidth, BANDWIDTH_FLOOR);
        assert!((s.kde.integral() - 1.0).abs() < 1e-6);
        assert!((s.histogram.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs() {
        assert!(summarize_values(&[1.0, 2.0], 1).is_err());
        assert!(summarize_values(&[], 4).is_err());
    }
}
