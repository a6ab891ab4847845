//! Constructing an explicit cover element Ŵ ≈ XA from k signed rank-one
//! atoms, and the log-cardinality of the whole cover.
//!
//!     cargo run --example cover_element

use margin_auditor::complexity::matrix_cover_logsize;
use margin_auditor::covering::cover_element_for;
use margin_auditor::linalg::{entrywise_norm, group_norm, Exponent, Matrix};

fn main() -> margin_auditor::Result<()> {
    let x = Matrix::random_uniform(8, 4, 1);
    let a = Matrix::random_uniform(4, 3, 2);
    let two = Exponent::Finite(2.0);
    let a_norm = group_norm(&a, two, Exponent::Finite(1.0))?;
    let bx = entrywise_norm(&x, two);
    println!("‖A‖_2,1 = {a_norm:.4}, ‖X‖_2 = {bx:.4}");
    for eps in [2.0, 0.5, 0.1] {
        let c = cover_element_for(&a, &x, eps, 2.0, 1.0, 42)?;
        let log_n = matrix_cover_logsize(a_norm, bx, 3, Exponent::Infinity, eps, 4)?;
        println!(
            "eps {eps:>4}: k = {:>5}  ‖XA − Ŵ‖ = {:.5}  (guarantee {:.5})  ln N ≤ {:.1}",
            c.k, c.error, c.guarantee, log_n
        );
    }
    Ok(())
}
