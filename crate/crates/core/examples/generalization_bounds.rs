//! The fixed-norm and uniform generalization bounds side by side, and the
//! margin-bound assembly fed by the Dudley closed form.
//!
//!     cargo run --example generalization_bounds

use margin_auditor::complexity::{
    dudley_closed_form, generalization_bound_fixed, margin_bound_assembly, spectral_complexity,
    uniform_bound_from_norms, LayerNorms,
};

fn main() -> margin_auditor::Result<()> {
    let norms = vec![
        LayerNorms::new(3.0, 20.0, 1.0)?,
        LayerNorms::new(2.5, 15.0, 1.0)?,
        LayerNorms::new(2.0, 5.0, 1.0)?,
    ];
    let (b, w, delta) = (30.0, 784, 0.01);
    let r_a = spectral_complexity(&norms)?;
    println!("R_A = {r_a:.3}");
    println!("{:>8} {:>7} {:>12} {:>12} {:>12}", "n", "gamma", "fixed", "uniform", "assembly");
    for n in [1_000usize, 100_000, 10_000_000] {
        for gamma in [1.0, 10.0] {
            let f = generalization_bound_fixed(0.0, b, w, n, gamma, delta, &norms)?;
            let u = uniform_bound_from_norms(0.0, b, w, n, gamma, delta, &norms)?;
            let cover_r = 4.0 * b * b * (2.0 * (w * w) as f64).ln() * r_a * r_a / (gamma * gamma);
            let rad = dudley_closed_form(cover_r, n)?.bound;
            let asm = margin_bound_assembly(0.0, rad, n, delta);
            println!("{n:>8} {gamma:>7} {:>12.4} {:>12.4} {:>12.4}", f.total, u.total, asm);
        }
    }
    Ok(())
}
