//! Dudley entropy integral and the explicit-constant generalization bounds.

use serde::Serialize;

use super::{frobenius_deltas, is_degenerate, layer_norms, pac_bayes_complexity, spectral_complexity, LayerNorms};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::margins::{default_gamma, raw_margins, ramp_risk_from_margins, MarginDistribution};
use crate::network::Network;
use crate::output::{ser_f64, ser_f64_opt};

/// Log-spaced nodes used by [`dudley_numeric`].
pub const DUDLEY_NODES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dudley {
    #[serde(serialize_with = "ser_f64")]
    pub bound: f64,
    #[serde(serialize_with = "ser_f64")]
    pub alpha: f64,
}

/// Closed form of `inf_α (4α/√n + ln(√n/α)·12√R/n)`, attained at
/// `α* = 3√(R/n)`. When `α* ≥ √n` the integral is empty and the value at
/// `α = √n` (which is 4) is returned.
pub fn dudley_closed_form(r: f64, n: usize) -> Result<Dudley> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param(format!("cover constant R must be positive, got {r}")));
    }
    if n == 0 {
        return Err(Error::param("sample size must be >= 1"));
    }
    let nf = n as f64;
    let root_n = nf.sqrt();
    let alpha = 3.0 * (r / nf).sqrt();
    if alpha >= root_n {
        return Ok(Dudley { bound: 4.0, alpha: root_n });
    }
    Ok(Dudley {
        bound: dudley_objective(r, n, alpha),
        alpha,
    })
}

/// `4α/√n + ln(√n/α)·12√R/n` at a given `α`.
pub fn dudley_objective(r: f64, n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    4.0 * alpha / nf.sqrt() + (nf.sqrt() / alpha).ln() * 12.0 * r.sqrt() / nf
}

/// `4α/√n + (12/n)∫_α^{√n} √(logN(ε)) dε` by the trapezoid rule in `u = ln ε`
/// on [`DUDLEY_NODES`] equally spaced nodes.
///
/// `log_n` must be nonnegative and nonincreasing; both are checked at the nodes.
pub fn dudley_numeric(log_n: impl Fn(f64) -> f64, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("sample size must be >= 1"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param(format!("alpha must be positive, got {alpha}")));
    }
    let nf = n as f64;
    let root_n = nf.sqrt();
    let head = 4.0 * alpha / root_n;
    if alpha >= root_n {
        return Ok(head);
    }
    let (u0, u1) = (alpha.ln(), root_n.ln());
    let h = (u1 - u0) / (DUDLEY_NODES - 1) as f64;
    let mut prev = f64::INFINITY;
    let mut integral = 0.0;
    for k in 0..DUDLEY_NODES {
        let eps = if k + 1 == DUDLEY_NODES { root_n } else { (u0 + h * k as f64).exp() };
        let v = log_n(eps);
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::param(format!("log covering number at {eps} is {v}")));
        }
        if v > prev * (1.0 + 1e-12) {
            return Err(Error::param(format!(
                "log covering number increases at {eps}: {prev} -> {v}"
            )));
        }
        prev = v;
        let w = if k == 0 || k + 1 == DUDLEY_NODES { 0.5 } else { 1.0 };
        integral += w * v.sqrt() * eps;
    }
    Ok(head + 12.0 / nf * integral * h)
}

/// The four terms of the fixed-norm bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedBound {
    #[serde(serialize_with = "ser_f64")]
    pub ramp_risk: f64,
    /// `8/n`.
    #[serde(serialize_with = "ser_f64")]
    pub term_const: f64,
    /// `72 B ln(2W) ln(n) R_A / (γ n)`.
    #[serde(serialize_with = "ser_f64")]
    pub term_complexity: f64,
    /// `3 √(ln(1/δ)/(2n))`.
    #[serde(serialize_with = "ser_f64")]
    pub term_confidence: f64,
    #[serde(serialize_with = "ser_f64")]
    pub total: f64,
}

fn check_bound_params(n: usize, gamma: f64, delta: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param(format!("gamma must be positive, got {gamma}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n < 2 {
        return Err(Error::param(format!("need n >= 2 examples, got {n}")));
    }
    Ok(())
}

fn confidence(n: usize, delta: f64) -> f64 {
    3.0 * ((1.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Bound for networks whose norms are fixed in advance (`s_i`, `b_i` given).
pub fn generalization_bound_fixed(
    ramp_risk: f64,
    data_norm: f64,
    width: usize,
    n: usize,
    gamma: f64,
    delta: f64,
    norms: &[LayerNorms],
) -> Result<FixedBound> {
    check_bound_params(n, gamma, delta)?;
    if !(data_norm > 0.0) {
        return Err(Error::param(format!("data norm must be positive, got {data_norm}")));
    }
    let r_a = spectral_complexity(norms)?;
    let nf = n as f64;
    let term_const = 8.0 / nf;
    let term_complexity =
        72.0 * data_norm * (2.0 * width as f64).ln() * nf.ln() / (gamma * nf) * r_a;
    let term_confidence = confidence(n, delta);
    Ok(FixedBound {
        ramp_risk,
        term_const,
        term_complexity,
        term_confidence,
        total: ramp_risk + term_const + term_complexity + term_confidence,
    })
}

/// Terms of the bound that holds uniformly over all norms and margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UniformBound {
    #[serde(serialize_with = "ser_f64")]
    pub term_complexity: f64,
    #[serde(serialize_with = "ser_f64")]
    pub term_confidence: f64,
    #[serde(serialize_with = "ser_f64")]
    pub total: f64,
    /// `γ < 2/n`: the bound exceeds 1 and says nothing.
    pub vacuous: bool,
}

/// Uniform bound
/// `R̂ + 8/n + 144 ln(n) ln(2W)/(γn) (∏ρ)(1+B)(Σ((1/L + b_i)∏_{j≠i}(1/L + s_j))^{2/3})^{3/2}
///  + √(9/(2n)) √(ln(1/δ) + ln(2n/γ) + 2ln(2+B) + 2Σln(2+L b_i) + 2Σln(2+L s_i))`.
pub fn uniform_bound_from_norms(
    ramp_risk: f64,
    data_norm: f64,
    width: usize,
    n: usize,
    gamma: f64,
    delta: f64,
    norms: &[LayerNorms],
) -> Result<UniformBound> {
    check_bound_params(n, gamma, delta)?;
    if norms.is_empty() {
        return Err(Error::param("need at least one layer"));
    }
    if !(data_norm >= 0.0) {
        return Err(Error::param(format!("data norm must be >= 0, got {data_norm}")));
    }
    let nf = n as f64;
    let l = norms.len() as f64;
    let inv_l = 1.0 / l;
    let rho: f64 = norms.iter().map(|x| x.rho).product();
    let sum: f64 = (0..norms.len())
        .map(|i| {
            let others: f64 = norms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, x)| inv_l + x.s)
                .product();
            ((inv_l + norms[i].b) * others).powf(2.0 / 3.0)
        })
        .sum();
    let term_complexity = 144.0 * nf.ln() * (2.0 * width as f64).ln() / (gamma * nf)
        * rho
        * (1.0 + data_norm)
        * sum.powf(1.5);
    let logs = (1.0 / delta).ln()
        + (2.0 * nf / gamma).ln()
        + 2.0 * (2.0 + data_norm).ln()
        + 2.0 * norms.iter().map(|x| (2.0 + l * x.b).ln()).sum::<f64>()
        + 2.0 * norms.iter().map(|x| (2.0 + l * x.s).ln()).sum::<f64>();
    let term_confidence = (9.0 / (2.0 * nf)).sqrt() * logs.max(0.0).sqrt();
    Ok(UniformBound {
        term_complexity,
        term_confidence,
        total: ramp_risk + 8.0 / nf + term_complexity + term_confidence,
        vacuous: gamma < 2.0 / nf,
    })
}

/// Uniform bound of `net` on `ds` at margin `γ`.
pub fn generalization_bound_uniform(net: &Network, ds: &Dataset, gamma: f64, delta: f64) -> Result<f64> {
    let norms = layer_norms(net)?;
    let out = net.forward(ds.features())?;
    let ramp = ramp_risk_from_margins(&raw_margins(&out, ds.labels())?, gamma)?;
    let u = uniform_bound_from_norms(ramp, ds.data_norm(), net.width(), ds.len(), gamma, delta, &norms)?;
    Ok(u.total)
}

/// `R̂_γ + 2·Rad + 3√(ln(1/δ)/(2n))`.
pub fn margin_bound_assembly(ramp_risk: f64, rademacher: f64, n: usize, delta: f64) -> f64 {
    ramp_risk + 2.0 * rademacher + confidence(n, delta)
}

/// Every norm, complexity and bound term for one network on one sample.
///
/// Field order is part of the JSON format.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub layer_norms: Vec<LayerNorms>,
    #[serde(rename = "R_A", serialize_with = "ser_f64")]
    pub r_a: f64,
    #[serde(rename = "R_PB", serialize_with = "ser_f64")]
    pub r_pb: f64,
    #[serde(rename = "data_norm_B", serialize_with = "ser_f64")]
    pub data_norm: f64,
    #[serde(rename = "W")]
    pub width: usize,
    pub n: usize,
    #[serde(serialize_with = "ser_f64")]
    pub gamma: f64,
    #[serde(serialize_with = "ser_f64")]
    pub delta: f64,
    #[serde(serialize_with = "ser_f64")]
    pub ramp_risk: f64,
    #[serde(serialize_with = "ser_f64")]
    pub term_const: f64,
    #[serde(serialize_with = "ser_f64")]
    pub term_complexity: f64,
    #[serde(serialize_with = "ser_f64")]
    pub term_confidence: f64,
    #[serde(serialize_with = "ser_f64")]
    pub bound_total: f64,
    #[serde(serialize_with = "ser_f64")]
    pub uniform_bound_total: f64,
    pub uniform_vacuous: bool,
    #[serde(serialize_with = "ser_f64_opt")]
    pub error_rate: Option<f64>,
    pub warnings: Vec<String>,
}

/// A bound report plus the margin distribution it was computed from.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub report: BoundReport,
    /// Raw margins, always available.
    pub raw_margins: Vec<f64>,
    /// `None` when `R_A = 0` and margins cannot be normalized.
    pub margins: Option<MarginDistribution>,
}

/// Computes the full [`BoundReport`]. Without an explicit `gamma` the
/// median positive raw margin is used.
pub fn analyze(net: &Network, ds: &Dataset, gamma: Option<f64>, delta: f64) -> Result<Analysis> {
    let out = net.forward(ds.features())?;
    if out.cols() != ds.num_classes() {
        return Err(Error::dim(format!(
            "network has {} outputs but the dataset has {} classes",
            out.cols(),
            ds.num_classes()
        )));
    }
    let raw = raw_margins(&out, ds.labels())?;
    let gamma = gamma.unwrap_or_else(|| default_gamma(&raw));
    let norms = layer_norms(net)?;
    let r_a = spectral_complexity(&norms)?;
    let r_pb = pac_bayes_complexity(&norms, &frobenius_deltas(net)?, net.width())?;
    let data_norm = ds.data_norm();
    let (n, w) = (ds.len(), net.width());
    let ramp = ramp_risk_from_margins(&raw, gamma)?;
    let fixed = generalization_bound_fixed(ramp, data_norm, w, n, gamma, delta, &norms)?;
    let uniform = uniform_bound_from_norms(ramp, data_norm, w, n, gamma, delta, &norms)?;
    let mut warnings = Vec::new();
    let margins = if is_degenerate(&norms) {
        warnings.push("every layer equals its reference: R_A = 0, margins not normalized".into());
        None
    } else {
        Some(MarginDistribution::from_raw(raw.clone(), r_a, data_norm)?.with_gamma(gamma))
    };
    if uniform.vacuous {
        warnings.push(format!("gamma < 2/n = {}: the uniform bound is vacuous", 2.0 / n as f64));
    }
    let error_rate = crate::margins::error_rate_from_outputs(&out, ds.labels());
    Ok(Analysis {
        report: BoundReport {
            layer_norms: norms,
            r_a,
            r_pb,
            data_norm,
            width: w,
            n,
            gamma,
            delta,
            ramp_risk: ramp,
            term_const: fixed.term_const,
            term_complexity: fixed.term_complexity,
            term_confidence: fixed.term_confidence,
            bound_total: fixed.total,
            uniform_bound_total: uniform.total,
            uniform_vacuous: uniform.vacuous,
            error_rate: Some(error_rate),
            warnings,
        },
        raw_margins: raw,
        margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln(s: f64, b: f64, rho: f64) -> LayerNorms {
        LayerNorms::new(s, b, rho).unwrap()
    }

    #[test]
    fn closed_form_golden() {
        let d = dudley_closed_form(9.0, 100).unwrap();
        assert!((d.alpha - 0.9).abs() < 1e-15);
        assert!((d.bound - (0.36 + 0.36 * (10.0f64 / 0.9).ln())).abs() < 1e-14);
        let tiny = dudley_closed_form(1e-20, 100).unwrap();
        assert!(tiny.bound < 1e-8);
        let big = dudley_closed_form(1e6, 100).unwrap();
        assert_eq!((big.bound, big.alpha), (4.0, 10.0));
        assert!(dudley_closed_form(0.0, 10).is_err());
    }

    #[test]
    fn numeric_trivial_cases() {
        let a = dudley_numeric(|_| 0.0, 100, 0.5).unwrap();
        assert!((a - 0.2).abs() < 1e-15);
        let b = dudley_numeric(|_| 0.0, 200, 0.5).unwrap();
        assert!((b - a / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(dudley_numeric(|_| 1.0, 4, 3.0).unwrap(), 6.0);
        assert!(dudley_numeric(|e| e, 100, 0.5).is_err());
        assert!(dudley_numeric(|_| -1.0, 100, 0.5).is_err());
    }

    #[test]
    fn numeric_matches_closed_form() {
        for r in [0.1, 1.0, 10.0, 100.0] {
            for n in [100usize, 10_000] {
                let c = dudley_closed_form(r, n).unwrap();
                let v = dudley_numeric(|e| r / (e * e), n, c.alpha).unwrap();
                assert!((v - c.bound).abs() <= 1e-4 * c.bound, "R={r} n={n}: {v} vs {}", c.bound);
            }
        }
    }

    #[test]
    fn fixed_bound_goldens() {
        let norms = [ln(4.0, 7.0, 1.0)];
        let f = generalization_bound_fixed(0.0, 1.0, 4, 100, 1.0, 0.1, &norms).unwrap();
        let want = 72.0 * 8f64.ln() * 100f64.ln() * 4.0 * (7.0 / 4.0) / 100.0;
        assert!((f.term_complexity - want).abs() < 1e-12 * want);
        let g = generalization_bound_fixed(0.0, 1.0, 4, 100, 2.0, 0.1, &norms).unwrap();
        assert_eq!(g.term_complexity, f.term_complexity / 2.0);
        assert_eq!(f.total, f.ramp_risk + f.term_const + f.term_complexity + f.term_confidence);

        let zero = generalization_bound_fixed(0.25, 1.0, 4, 50, 1.0, 0.05, &[ln(1.0, 0.0, 1.0)]).unwrap();
        let want = 0.25 + 8.0 / 50.0 + 3.0 * ((20.0f64).ln() / 100.0).sqrt();
        assert!((zero.total - want).abs() < 1e-15);

        assert!(generalization_bound_fixed(0.0, 1.0, 4, 100, 0.0, 0.1, &norms).is_err());
        assert!(generalization_bound_fixed(0.0, 1.0, 4, 100, 1.0, 1.0, &norms).is_err());
        assert!(generalization_bound_fixed(0.0, 1.0, 4, 100, 1.0, 0.0, &norms).is_err());
    }

    #[test]
    fn fixed_bound_monotone() {
        let norms = [ln(2.0, 3.0, 1.0), ln(1.5, 2.0, 1.0)];
        let mut prev = f64::INFINITY;
        for g in [0.1, 0.2, 0.5, 1.0, 3.0] {
            let t = generalization_bound_fixed(0.1, 2.0, 5, 200, g, 0.1, &norms).unwrap().total;
            assert!(t <= prev);
            prev = t;
        }
        let mut prev = f64::INFINITY;
        for n in 3..400 {
            let t = generalization_bound_fixed(0.1, 2.0, 5, n, 1.0, 0.1, &norms).unwrap().total;
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn uniform_skeleton() {
        let u = uniform_bound_from_norms(0.0, 0.0, 3, 100, 1.0, 0.1, &[ln(2.0, 0.0, 1.0)]).unwrap();
        let want = 144.0 * 100f64.ln() * 6f64.ln() / 100.0;
        assert!((u.term_complexity - want).abs() < 1e-12 * want);
        let logs = 10f64.ln() + 200f64.ln() + 2.0 * 2f64.ln() + 2.0 * 2f64.ln() + 2.0 * 4f64.ln();
        assert!((u.term_confidence - (9.0f64 / 200.0).sqrt() * logs.sqrt()).abs() < 1e-14);
        assert!(!u.vacuous);
        let v = uniform_bound_from_norms(0.0, 0.0, 3, 100, 0.01, 0.1, &[ln(2.0, 0.0, 1.0)]).unwrap();
        assert!(v.vacuous);
    }

    #[test]
    fn assembly_terms() {
        let c = margin_bound_assembly(0.0, 0.0, 50, 0.1);
        assert_eq!(c, 3.0 * (10f64.ln() / 100.0).sqrt());
        assert!((margin_bound_assembly(0.0, 1.5, 50, 0.1) - c - 3.0).abs() < 1e-15);
    }
}
