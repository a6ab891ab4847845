//! A deep ReLU network computing x ↦ ⟨a, x⟩ with spectral product 2‖a‖, and
//! a Monte-Carlo estimate of the Rademacher complexity of the linear class.
//!
//!     cargo run --example lower_bound

use margin_auditor::linalg::{spectral_norm, Matrix};
use margin_auditor::lowerbound::{build_linear_network, khintchine_floor, rademacher_linear_estimate};

fn main() -> margin_auditor::Result<()> {
    let a = [3.0, 4.0];
    let net = build_linear_network(&a, &[2, 4, 3])?;
    let x = Matrix::from_rows(&[[1.0, 1.0], [-2.0, 0.5], [0.25, -1.0]])?;
    for (row, out) in x.iter_rows().zip(net.forward(&x)?.iter_rows()) {
        println!("x = {row:?}: f(x) = {}  ⟨a,x⟩ = {}", out[0], a[0] * row[0] + a[1] * row[1]);
    }
    let product: f64 = net.layers().iter().map(|l| spectral_norm(l.weight()).unwrap()).product();
    println!("∏ ‖A_i‖_σ = {product} (2‖a‖ = 10)");

    for n in [10, 100, 1000] {
        let x = Matrix::random_uniform(n, 5, n as u64);
        let est = rademacher_linear_estimate(&x, 1.0, 10_000, 42)?;
        println!(
            "n = {n:>4}: Rad ≈ {:.5} ± {:.5}, floor ‖X‖/(√2 n) = {:.5}",
            est.mean,
            est.std_error,
            khintchine_floor(&x, 1.0)
        );
    }
    Ok(())
}
