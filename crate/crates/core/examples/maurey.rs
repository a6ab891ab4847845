//! Maurey sparsification: approximate a convex combination of vectors by
//! an average of k of them, with the guaranteed squared error.
//!
//!     cargo run --example maurey

use margin_auditor::covering::{maurey_error_sq, maurey_sparsify};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> margin_auditor::Result<()> {
    let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let r = maurey_sparsify(&e, &[1.0, 1.0], 4, 42)?;
    println!("e1+e2 with k=4: counts {:?}, error² {} ≤ {}", r.counts, r.approx_error_sq, r.guarantee);
    println!("counts [2, 2] would give error² {}", maurey_error_sq(&e, &[1.0, 1.0], &[2, 2])?);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let atoms: Vec<Vec<f64>> = (0..12).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let alpha: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
    for k in [1, 4, 16, 64, 256] {
        let r = maurey_sparsify(&atoms, &alpha, k, k as u64)?;
        println!("k = {k:>3}: error² {:.5}  guarantee {:.5}  retries {}", r.approx_error_sq, r.guarantee, r.retries);
    }
    Ok(())
}
