//! Matrix norms: spectral norm by power iteration against the Jacobi SVD,
//! the (2,1) group norm, and a MAT1 round trip.
//!
//!     cargo run --example norms

use margin_auditor::linalg::{
    group_norm, jacobi::singular_values, mat1, norm_2_1_of_transpose, spectral_norm, Exponent, Matrix,
};

fn main() -> margin_auditor::Result<()> {
    let a = Matrix::from_rows(&[[3.0, 0.0], [0.0, 4.0]])?;
    println!("diag(3,4): spectral {}  ‖Aᵀ‖_2,1 {}", spectral_norm(&a)?, norm_2_1_of_transpose(&a)?);

    for (i, shape) in [(5, 9), (32, 32), (64, 17)].into_iter().enumerate() {
        let m = Matrix::random_uniform(shape.0, shape.1, i as u64);
        let power = spectral_norm(&m)?;
        let jacobi = singular_values(&m)[0];
        println!("{shape:?}: power {power:.15}  jacobi {jacobi:.15}  rel diff {:.1e}", (power - jacobi).abs() / jacobi);
    }

    let m = Matrix::random_uniform(4, 3, 7);
    let two = Exponent::Finite(2.0);
    println!("‖M‖_(2,2) = {:.6}  ‖M‖_(2,1) = {:.6}", group_norm(&m, two, two)?, group_norm(&m, two, Exponent::Finite(1.0))?);

    let dir = std::env::temp_dir().join("margin-auditor-norms");
    std::fs::create_dir_all(&dir).ok();
    let path = dir.join("m.mat");
    mat1::write(&path, &m)?;
    assert_eq!(mat1::read(&path)?, m);
    println!("MAT1 round trip ok: {}", path.display());
    Ok(())
}
