//! A ReLU network computing the linear map `x ↦ ⟨a, x⟩` with spectral
//! product `2‖a‖₂`, and a Monte-Carlo estimate of the empirical Rademacher
//! complexity of bounded linear predictors.
//!
//! The first layer maps `x` to `(⟨a,x⟩, -⟨a,x⟩, 0, …)`, middle layers copy
//! the two active coordinates, and the last layer returns their difference:
//! `σ(⟨a,x⟩) - σ(-⟨a,x⟩) = ⟨a,x⟩`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};
use crate::network::{Layer, Network, Nonlinearity};
use crate::output::ser_f64;

/// Builds the depth-`hidden.len() + 1` network for `a`. `hidden` lists the
/// widths of the ReLU layers, each at least 2. The output layer is linear.
pub fn build_linear_network(a: &[f64], hidden: &[usize]) -> Result<Network> {
    if hidden.is_empty() {
        return Err(Error::param("depth must be at least 2 (one hidden layer)"));
    }
    if let Some(w) = hidden.iter().find(|&&w| w < 2) {
        return Err(Error::param(format!("hidden widths must be >= 2, got {w}")));
    }
    if a.is_empty() {
        return Err(Error::param("a must be nonempty"));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::param("a must be nonzero"));
    }
    let d = a.len();
    let first = Matrix::from_fn(hidden[0], d, |i, j| match i {
        0 => a[j],
        1 => -a[j],
        _ => 0.0,
    });
    let mut layers = vec![Layer::with_zero_reference(first, Nonlinearity::Relu)?];
    for w in hidden.windows(2) {
        let m = Matrix::from_fn(w[1], w[0], |i, j| if i == j && i < 2 { 1.0 } else { 0.0 });
        layers.push(Layer::with_zero_reference(m, Nonlinearity::Relu)?);
    }
    let last_w = hidden[hidden.len() - 1];
    let last = Matrix::from_fn(1, last_w, |_, j| match j {
        0 => 1.0,
        1 => -1.0,
        _ => 0.0,
    });
    layers.push(Layer::with_zero_reference(last, Nonlinearity::Identity)?);
    Network::new(layers)
}

/// Same as [`build_linear_network`] with every hidden width equal to 2.
pub fn build_linear_network_depth(a: &[f64], depth: usize) -> Result<Network> {
    if depth < 2 {
        return Err(Error::param(format!("depth must be >= 2, got {depth}")));
    }
    build_linear_network(a, &vec![2; depth - 1])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RademacherEstimate {
    /// Mean over trials of `r ‖Σ_t ε_t x_t‖₂ / n`.
    #[serde(serialize_with = "ser_f64")]
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / √trials).
    #[serde(serialize_with = "ser_f64")]
    pub std_error: f64,
    pub trials: usize,
}

/// Monte-Carlo estimate of `n^{-1} E sup_{‖a‖≤r} Σ_t ε_t ⟨a, x_t⟩ = r E‖Σ_t ε_t x_t‖₂ / n`
/// over examples `x_t` (rows of `x`). Trial `i` draws its signs from stream
/// `i` of a generator seeded with `seed`.
pub fn rademacher_linear_estimate(x: &Matrix, r: f64, trials: usize, seed: u64) -> Result<RademacherEstimate> {
    if x.is_empty() {
        return Err(Error::param("data matrix is empty"));
    }
    if trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param(format!("radius must be positive, got {r}")));
    }
    let n = x.rows() as f64;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut sum = vec![0.0; x.cols()];
            for row in x.iter_rows() {
                let e = if rng.random::<bool>() { 1.0 } else { -1.0 };
                axpy(e, row, &mut sum);
            }
            r * sum.iter().map(|v| v * v).sum::<f64>().sqrt() / n
        })
        .collect();
    let tf = trials as f64;
    let mean = values.iter().sum::<f64>() / tf;
    let std_error = if trials > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (tf - 1.0);
        (var / tf).sqrt()
    } else {
        0.0
    };
    Ok(RademacherEstimate { mean, std_error, trials })
}

/// `(1/√2) r ‖X‖₂ / n`: the Khintchine–Kahane floor used as the test constant.
pub fn khintchine_floor(x: &Matrix, r: f64) -> f64 {
    r * crate::data::data_norm(x) / (2f64.sqrt() * x.rows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_norm;

    #[test]
    fn construction_identity() {
        let net = build_linear_network_depth(&[1.0, 0.0], 3).unwrap();
        let out = net.forward(&Matrix::from_rows(&[[0.5, -2.0]]).unwrap()).unwrap();
        assert_eq!(out.get(0, 0), 0.5);
        let out = net.forward(&Matrix::from_rows(&[[-0.5, 1.0]]).unwrap()).unwrap();
        assert_eq!(out.get(0, 0), -0.5);
    }

    #[test]
    fn spectral_product() {
        let net = build_linear_network(&[3.0, 4.0], &[3, 5, 2]).unwrap();
        let p: f64 = net.layers().iter().map(|l| spectral_norm(l.weight()).unwrap()).product();
        assert!((p - 10.0).abs() < 1e-10);
        let out = net.forward(&Matrix::from_rows(&[[1.0, 1.0]]).unwrap()).unwrap();
        assert!((out.get(0, 0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        assert!(build_linear_network(&[1.0], &[]).is_err());
        assert!(build_linear_network(&[1.0], &[2, 1]).is_err());
        assert!(build_linear_network(&[0.0, 0.0], &[2]).is_err());
    }

    #[test]
    fn single_example_is_exact() {
        let x = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        let e = rademacher_linear_estimate(&x, 2.0, 50, 1).unwrap();
        assert!((e.mean - 10.0).abs() < 1e-12);
        assert!(e.std_error < 1e-12);
    }

    #[test]
    fn homogeneous_in_r_and_seeded() {
        let x = Matrix::random_uniform(20, 3, 4);
        let a = rademacher_linear_estimate(&x, 1.0, 200, 9).unwrap();
        let b = rademacher_linear_estimate(&x, 2.0, 200, 9).unwrap();
        assert!((b.mean - 2.0 * a.mean).abs() < 1e-12);
        assert_eq!(a, rademacher_linear_estimate(&x, 1.0, 200, 9).unwrap());
    }

    #[test]
    fn orthogonal_rows_clear_the_floor() {
        let x = Matrix::identity(16).scaled(0.7);
        let e = rademacher_linear_estimate(&x, 1.5, 10_000, 2).unwrap();
        assert!(e.mean >= khintchine_floor(&x, 1.5) - 3.0 * e.std_error);
    }
}
