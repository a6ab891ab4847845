//! Dudley's entropy integral for a cover of size ln N(ε) = R/ε²: the closed
//! form minimizer against log-space quadrature and a grid search.
//!
//!     cargo run --example dudley

use margin_auditor::complexity::{dudley_closed_form, dudley_numeric, dudley_objective};

fn main() -> margin_auditor::Result<()> {
    println!("{:>6} {:>7} {:>12} {:>14} {:>14} {:>10}", "R", "n", "alpha*", "closed form", "quadrature", "grid min");
    for r in [0.1, 1.0, 10.0, 100.0] {
        for n in [100usize, 10_000] {
            let c = dudley_closed_form(r, n)?;
            let q = dudley_numeric(|e| r / (e * e), n, c.alpha)?;
            let root_n = (n as f64).sqrt();
            let grid = (0..10_000)
                .map(|i| (1e-8f64).ln() + i as f64 / 9_999.0 * (root_n.ln() - (1e-8f64).ln()))
                .map(|u| dudley_objective(r, n, u.exp()))
                .fold(f64::INFINITY, f64::min);
            println!("{r:>6} {n:>7} {:>12.6} {:>14.8} {:>14.8} {:>10.6}", c.alpha, c.bound, q, grid);
        }
    }
    Ok(())
}
