//! Constructive Maurey sparsification and matrix-product cover elements.
//!
//! Given `U = Σ_i α_i V_i` with `α ≥ 0`, Maurey's lemma yields integer counts
//! `k_i` summing to `k` with
//! `‖U - (‖α‖₁/k) Σ k_i V_i‖² ≤ (‖α‖₁²/k) max_i ‖V_i‖²`.
//! The counts are found by sampling `k` atoms iid with probabilities
//! `α_i/‖α‖₁` and resampling until the inequality holds.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complexity::cover_count;
use crate::error::{Error, Result};
use crate::linalg::{entrywise_norm, group_norm, Exponent, Matrix};
use crate::output::ser_f64;

/// Resampling attempts before giving up.
pub const MAX_RETRIES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsifyResult {
    pub counts: Vec<usize>,
    #[serde(serialize_with = "ser_f64")]
    pub approx_error_sq: f64,
    /// `‖α‖₁²/k · max_i ‖V_i‖²`.
    #[serde(serialize_with = "ser_f64")]
    pub guarantee: f64,
    /// Failed draws before the accepted one.
    pub retries: usize,
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn check_atoms(atoms: &[Vec<f64>], alpha: &[f64]) -> Result<usize> {
    if atoms.is_empty() || atoms.len() != alpha.len() {
        return Err(Error::param(format!(
            "{} atoms with {} weights",
            atoms.len(),
            alpha.len()
        )));
    }
    let dim = atoms[0].len();
    if atoms.iter().any(|a| a.len() != dim) {
        return Err(Error::dim("atoms must share a common shape"));
    }
    if alpha.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
        return Err(Error::param("weights must be finite and nonnegative"));
    }
    if alpha.iter().all(|&a| a == 0.0) {
        return Err(Error::param("weights must not all be zero"));
    }
    Ok(dim)
}

/// `Σ_i α_i V_i`.
pub fn combination(atoms: &[Vec<f64>], alpha: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; atoms.first().map_or(0, Vec::len)];
    for (v, &a) in atoms.iter().zip(alpha) {
        if a != 0.0 {
            crate::linalg::axpy(a, v, &mut u);
        }
    }
    u
}

/// `(‖α‖₁/k) Σ_i k_i V_i` for `k = Σ k_i`.
pub fn sparse_approximation(atoms: &[Vec<f64>], alpha_l1: f64, counts: &[usize]) -> Vec<f64> {
    let k: usize = counts.iter().sum();
    let scale = alpha_l1 / k as f64;
    let w: Vec<f64> = counts.iter().map(|&c| c as f64 * scale).collect();
    combination(atoms, &w)
}

/// `‖Σ α_i V_i - (‖α‖₁/k) Σ k_i V_i‖²` evaluated directly.
pub fn maurey_error_sq(atoms: &[Vec<f64>], alpha: &[f64], counts: &[usize]) -> Result<f64> {
    check_atoms(atoms, alpha)?;
    if counts.len() != atoms.len() || counts.iter().sum::<usize>() == 0 {
        return Err(Error::param("counts must match the atoms and sum to k >= 1"));
    }
    let u = combination(atoms, alpha);
    let l1: f64 = alpha.iter().sum();
    let approx = sparse_approximation(atoms, l1, counts);
    Ok(u.iter().zip(&approx).map(|(a, b)| (a - b).powi(2)).sum())
}

/// `(‖α‖₁²/k) max_i ‖V_i‖²`.
pub fn maurey_guarantee(atoms: &[Vec<f64>], alpha: &[f64], k: usize) -> f64 {
    let l1: f64 = alpha.iter().sum();
    let max_sq = atoms.iter().map(|v| sq_norm(v)).fold(0.0, f64::max);
    l1 * l1 / k as f64 * max_sq
}

/// Finds counts meeting the Maurey guarantee by seeded resampling.
pub fn maurey_sparsify(atoms: &[Vec<f64>], alpha: &[f64], k: usize, seed: u64) -> Result<SparsifyResult> {
    check_atoms(atoms, alpha)?;
    if k == 0 {
        return Err(Error::param("k must be >= 1"));
    }
    let l1: f64 = alpha.iter().sum();
    let u = combination(atoms, alpha);
    let guarantee = maurey_guarantee(atoms, alpha, k);
    let dist = WeightedIndex::new(alpha).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for retries in 0..MAX_RETRIES {
        let mut counts = vec![0usize; atoms.len()];
        for _ in 0..k {
            counts[dist.sample(&mut rng)] += 1;
        }
        let approx = sparse_approximation(atoms, l1, &counts);
        let err: f64 = u.iter().zip(&approx).map(|(a, b)| (a - b).powi(2)).sum();
        if err <= guarantee {
            return Ok(SparsifyResult {
                counts,
                approx_error_sq: err,
                guarantee,
                retries,
            });
        }
    }
    Err(Error::Numeric(format!(
        "no draw met the Maurey guarantee in {MAX_RETRIES} attempts"
    )))
}

/// A constructed element `Ŵ` of the cover of `{XA : ‖A‖_{q,s} ≤ a}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverElement {
    #[serde(skip)]
    pub w_hat: Matrix,
    /// Sparsity level `⌈a² b² m^{2/r}/ε²⌉`.
    pub k: usize,
    /// `‖XA - Ŵ‖_2`.
    #[serde(serialize_with = "ser_f64")]
    pub error: f64,
    /// `ā √(max‖V_i‖²/k)`, which is at most `ε`.
    #[serde(serialize_with = "ser_f64")]
    pub guarantee: f64,
    #[serde(serialize_with = "ser_f64")]
    pub eps: f64,
    pub satisfied: bool,
    pub retries: usize,
}

/// Builds a cover element for `XA` at resolution `ε`, following the
/// rescaling construction: columns of `X` are normalized to unit `p`-norm
/// (`p` conjugate to `q`, `p ≤ 2`), the weights `‖X_{:,i}‖_p A_{ij}` become
/// convex weights over the signed rank-one atoms `±Y e_i e_jᵀ`, and Maurey
/// sparsification picks `k` of them.
///
/// The norm bounds are taken tight: `a = ‖A‖_{q,s}` and `b = ‖X‖_p`.
pub fn cover_element_for(a: &Matrix, x: &Matrix, eps: f64, q: f64, s: f64, seed: u64) -> Result<CoverElement> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("cover scale must be positive, got {eps}")));
    }
    let q = Exponent::new(q)?;
    let s = Exponent::new(s)?;
    let p = q.conjugate();
    let r = s.conjugate();
    if let Exponent::Finite(pv) = p {
        if pv > 2.0 + 1e-12 {
            return Err(Error::param(format!("need p <= 2 (q >= 2), got p = {pv}")));
        }
    } else {
        return Err(Error::param("need p <= 2 (q >= 2), got p = inf"));
    }
    if x.is_empty() || a.is_empty() {
        return Err(Error::dim("X and A must be nonempty"));
    }
    let (n, d) = x.shape();
    let m = a.cols();
    if a.rows() != d {
        return Err(Error::dim(format!("X is {n}x{d} but A is {}x{m}", a.rows())));
    }
    let col_p: Vec<f64> = (0..d).map(|i| p.norm(&x.col(i))).collect();
    if col_p.iter().all(|&c| c == 0.0) {
        return Err(Error::Degenerate("X is all zero".into()));
    }
    let target = x.matmul(a)?;
    let a_norm = group_norm(a, q, s)?;
    if a_norm == 0.0 {
        return Ok(CoverElement {
            w_hat: Matrix::zeros(n, m),
            k: 0,
            error: 0.0,
            guarantee: 0.0,
            eps,
            satisfied: true,
            retries: 0,
        });
    }
    let bx = entrywise_norm(x, p);
    let a_bar = a_norm * (m as f64).powf(r.reciprocal()) * bx;
    let k = cover_count(a_norm, bx, m, r, eps) as usize;

    // Atoms ±Y e_i e_jᵀ for nonzero columns i of X, flattened row-major (n×m).
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (i, &ci) in col_p.iter().enumerate() {
        if ci == 0.0 {
            continue;
        }
        let y: Vec<f64> = x.col(i).iter().map(|v| v / ci).collect();
        for j in 0..m {
            let bij = ci * a.get(i, j);
            for g in [1.0, -1.0] {
                let mut v = vec![0.0; n * m];
                for (t, yt) in y.iter().enumerate() {
                    v[t * m + j] = g * yt;
                }
                atoms.push(v);
                weights.push(if g * bij > 0.0 { bij.abs() } else { 0.0 });
            }
        }
    }
    // Spread the unused mass ā - ‖B‖₁ over a cancelling ± pair.
    let used: f64 = weights.iter().sum();
    let pad = (a_bar - used).max(0.0) / 2.0;
    weights[0] += pad;
    weights[1] += pad;

    let res = maurey_sparsify(&atoms, &weights, k, seed)?;
    let l1: f64 = weights.iter().sum();
    let w_hat = Matrix::new(n, m, sparse_approximation(&atoms, l1, &res.counts))?;
    let error = target
        .sub(&w_hat)?
        .data()
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let guarantee = res.guarantee.sqrt();
    Ok(CoverElement {
        w_hat,
        k,
        error,
        guarantee,
        eps,
        satisfied: error <= eps,
        retries: res.retries,
    })
}
