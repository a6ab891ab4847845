//! Whole-network covering numbers: per-layer resolutions chosen from the
//! norms, and the composed resolution they achieve.
//!
//!     cargo run --example network_cover

use margin_auditor::complexity::{cover_budget, cover_resolution, layer_norms, network_cover_logsize};
use margin_auditor::data::synth_blobs;
use margin_auditor::training::{init_network, TrainConfig};

fn main() -> margin_auditor::Result<()> {
    let cfg = TrainConfig::new(vec![10, 20, 20, 20, 3], 1, 1, 5);
    let net = init_network(&cfg)?;
    let ds = synth_blobs(100, 10, 3, 1.0, 1)?;
    let norms = layer_norms(&net)?;
    for (i, n) in norms.iter().enumerate() {
        println!("layer {}: s = {:.4}  b = {:.4}  ρ = {}", i + 1, n.s, n.b, n.rho);
    }
    let eps = 0.1;
    let budget = cover_budget(eps, &norms)?;
    println!("ᾱ = {:.4}", budget.alpha_bar);
    for (i, (a, e)) in budget.alpha_weights.iter().zip(&budget.eps_per_layer).enumerate() {
        println!("  layer {}: α = {a:.4}  ε_i = {e:.3e}", i + 1);
    }
    let rho: Vec<f64> = norms.iter().map(|n| n.rho).collect();
    let s: Vec<f64> = norms.iter().map(|n| n.s).collect();
    println!("composed resolution τ = {:.15} ≤ ε = {eps}", cover_resolution(&budget.eps_per_layer, &rho, &s)?);
    println!("ln N(ε = {eps}) ≤ {:.4e}", network_cover_logsize(ds.data_norm(), net.width(), &norms, eps)?);
    Ok(())
}
