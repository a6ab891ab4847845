//! Capacity measures of a network: spectral complexity `R_A`, the PAC-Bayes
//! comparator, covering-number sizes and the per-layer cover budget.

mod bounds;

pub use bounds::*;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, norm_2_1_of_transpose, spectral_norm, Exponent};
use crate::network::Network;
use crate::output::{ser_f64, ser_f64_vec};

/// Per-layer norms entering the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LayerNorms {
    /// Spectral norm `‖A_i‖_σ`.
    #[serde(serialize_with = "ser_f64")]
    pub s: f64,
    /// `‖A_i^T - M_i^T‖_{2,1}`.
    #[serde(serialize_with = "ser_f64")]
    pub b: f64,
    /// Lipschitz constant of the nonlinearity w.r.t. `l_2`.
    #[serde(serialize_with = "ser_f64")]
    pub rho: f64,
}

impl LayerNorms {
    pub fn new(s: f64, b: f64, rho: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) || !(b >= 0.0 && b.is_finite()) {
            return Err(Error::param(format!("norms must be finite and >= 0, got s={s}, b={b}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::param(format!("Lipschitz constant must be > 0, got {rho}")));
        }
        Ok(Self { s, b, rho })
    }
}

pub fn layer_norms(net: &Network) -> Result<Vec<LayerNorms>> {
    net.layers()
        .iter()
        .map(|l| {
            let diff = l.weight().sub(l.reference())?;
            Ok(LayerNorms {
                s: spectral_norm(l.weight())?,
                b: norm_2_1_of_transpose(&diff)?,
                rho: l.nonlinearity().lipschitz(Exponent::Finite(2.0)),
            })
        })
        .collect()
}

/// `‖A_i - M_i‖_2` (Frobenius) per layer, for the PAC-Bayes comparator.
pub fn frobenius_deltas(net: &Network) -> Result<Vec<f64>> {
    net.layers()
        .iter()
        .map(|l| frobenius_norm(&l.weight().sub(l.reference())?))
        .collect()
}

fn check_norms(norms: &[LayerNorms]) -> Result<()> {
    if norms.is_empty() {
        return Err(Error::param("need at least one layer"));
    }
    if let Some(i) = norms.iter().position(|n| !(n.s > 0.0)) {
        return Err(Error::Degenerate(format!(
            "layer {} has spectral norm 0; b_i/s_i is undefined",
            i + 1
        )));
    }
    Ok(())
}

fn lipschitz_product(norms: &[LayerNorms]) -> f64 {
    norms.iter().map(|n| n.rho * n.s).product()
}

fn ratio_sum(norms: &[LayerNorms]) -> f64 {
    norms.iter().map(|n| (n.b / n.s).powf(2.0 / 3.0)).sum()
}

/// `R_A = (∏ ρ_i s_i) (Σ (b_i/s_i)^{2/3})^{3/2}`.
///
/// Zero when every `b_i` is zero (see [`is_degenerate`]).
pub fn spectral_complexity(norms: &[LayerNorms]) -> Result<f64> {
    check_norms(norms)?;
    Ok(lipschitz_product(norms) * ratio_sum(norms).powf(1.5))
}

/// True when the network coincides with its references (`b_i = 0` for all
/// layers), so `R_A = 0` and margins cannot be normalized.
pub fn is_degenerate(norms: &[LayerNorms]) -> bool {
    norms.iter().all(|n| n.b == 0.0)
}

/// PAC-Bayes comparator `(∏ ρ_i s_i) · L · (Σ W ‖A_i - M_i‖_2² / s_i²)^{1/2}`.
pub fn pac_bayes_complexity(norms: &[LayerNorms], frob_deltas: &[f64], width: usize) -> Result<f64> {
    check_norms(norms)?;
    if frob_deltas.len() != norms.len() {
        return Err(Error::param(format!(
            "{} Frobenius deltas for {} layers",
            frob_deltas.len(),
            norms.len()
        )));
    }
    let w = width as f64;
    let sum: f64 = norms
        .iter()
        .zip(frob_deltas)
        .map(|(n, f)| w * f * f / (n.s * n.s))
        .sum();
    Ok(lipschitz_product(norms) * norms.len() as f64 * sum.sqrt())
}

/// Log-size of the matrix cover: `⌈a² b² m^{2/r} / ε²⌉ · ln(2dm)`.
///
/// `a` bounds `‖A‖_{q,s}`, `bx` bounds `‖X‖_p`, `r` is conjugate to `s`, and
/// `A` maps `d` inputs to `m` outputs.
pub fn matrix_cover_logsize(a: f64, bx: f64, m: usize, r: Exponent, eps: f64, d: usize) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("cover scale must be positive, got {eps}")));
    }
    if !(a > 0.0) || !(bx > 0.0) {
        return Err(Error::param(format!("norm bounds must be positive, got a={a}, b={bx}")));
    }
    if m == 0 || d == 0 {
        return Err(Error::param("dimensions must be >= 1"));
    }
    let mf = m as f64;
    Ok(cover_count(a, bx, m, r, eps) * (2.0 * d as f64 * mf).ln())
}

/// The sparsity level `k = ⌈a² b² m^{2/r} / ε²⌉`.
pub(crate) fn cover_count(a: f64, bx: f64, m: usize, r: Exponent, eps: f64) -> f64 {
    let mf = m as f64;
    (a * a * bx * bx * mf.powf(2.0 * r.reciprocal()) / (eps * eps)).ceil()
}

/// Whole-network cover log-size
/// `(‖X‖² ln(2W²)/ε²) (∏ s_j² ρ_j²) (Σ (b_i/s_i)^{2/3})³`.
pub fn network_cover_logsize(data_norm: f64, width: usize, norms: &[LayerNorms], eps: f64) -> Result<f64> {
    check_norms(norms)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("cover scale must be positive, got {eps}")));
    }
    let w = width as f64;
    let p = lipschitz_product(norms);
    Ok(data_norm * data_norm * (2.0 * w * w).ln() / (eps * eps) * p * p * ratio_sum(norms).powi(3))
}

/// Per-layer cover scales for a total resolution `ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverBudget {
    #[serde(serialize_with = "ser_f64")]
    pub eps_total: f64,
    #[serde(serialize_with = "ser_f64_vec")]
    pub eps_per_layer: Vec<f64>,
    #[serde(serialize_with = "ser_f64_vec")]
    pub alpha_weights: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub alpha_bar: f64,
}

/// Relative shrink applied to every `ε_i` per layer so that the composed
/// resolution stays `≤ ε` despite rounding.
const BUDGET_SLACK: f64 = 4.0 * f64::EPSILON;

/// `α_i = (b_i/s_i)^{2/3} / ᾱ` and `ε_i = α_i ε / (ρ_i ∏_{j>i} ρ_j s_j)`.
///
/// Layers with `b_i = 0` get `ε_i = 0`: they equal their reference and need
/// no cover.
pub fn cover_budget(eps: f64, norms: &[LayerNorms]) -> Result<CoverBudget> {
    check_norms(norms)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("cover scale must be positive, got {eps}")));
    }
    if is_degenerate(norms) {
        return Err(Error::Degenerate(
            "every layer equals its reference; nothing to cover".into(),
        ));
    }
    let raw: Vec<f64> = norms.iter().map(|n| (n.b / n.s).powf(2.0 / 3.0)).collect();
    let alpha_bar: f64 = raw.iter().sum();
    let alpha: Vec<f64> = raw.iter().map(|r| r / alpha_bar).collect();
    let shrink = 1.0 - BUDGET_SLACK * norms.len() as f64;
    let l = norms.len();
    let mut tail = 1.0;
    let mut eps_per_layer = vec![0.0; l];
    for i in (0..l).rev() {
        eps_per_layer[i] = alpha[i] * eps * shrink / (norms[i].rho * tail);
        tail *= norms[i].rho * norms[i].s;
    }
    Ok(CoverBudget {
        eps_total: eps,
        eps_per_layer,
        alpha_weights: alpha,
        alpha_bar,
    })
}

/// Composed resolution `τ = Σ_j ε_j ρ_j ∏_{l>j} ρ_l c_l`.
pub fn cover_resolution(eps_per_layer: &[f64], rho: &[f64], c: &[f64]) -> Result<f64> {
    let l = eps_per_layer.len();
    if rho.len() != l || c.len() != l {
        return Err(Error::param(format!(
            "length mismatch: {} scales, {} Lipschitz constants, {} norm bounds",
            l,
            rho.len(),
            c.len()
        )));
    }
    let mut tail = 1.0;
    let mut tau = 0.0;
    for j in (0..l).rev() {
        tau += eps_per_layer[j] * rho[j] * tail;
        tail *= rho[j] * c[j];
    }
    Ok(tau)
}
