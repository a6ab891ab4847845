//! Building a network, running it forward, Lipschitz constants of the
//! nonlinearities, and saving/loading a manifest.
//!
//!     cargo run --example network_forward

use margin_auditor::linalg::{Exponent, Matrix};
use margin_auditor::network::manifest::{load_network, save_network};
use margin_auditor::network::{Layer, MaxPool, Network, Nonlinearity};

fn main() -> margin_auditor::Result<()> {
    let pool = MaxPool::new(vec![vec![0, 1], vec![1, 2], vec![2, 3]], 4)?;
    println!("overlapping pool: multiplicity {}", pool.multiplicity());
    for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
        println!("  ρ w.r.t. l_{p:?} = {}", Nonlinearity::MaxPool(pool.clone()).lipschitz(p));
    }

    let net = Network::new(vec![
        Layer::with_zero_reference(Matrix::random_uniform(4, 5, 1), Nonlinearity::Relu)?,
        Layer::with_zero_reference(Matrix::random_uniform(4, 4, 2), Nonlinearity::MaxPool(pool))?,
        Layer::with_zero_reference(Matrix::random_uniform(3, 3, 3), Nonlinearity::Identity)?,
    ])?;
    let x = Matrix::random_uniform(2, 5, 4);
    let y = net.forward(&x)?;
    println!("depth {}  width W = {}  outputs:", net.depth(), net.width());
    for row in y.iter_rows() {
        println!("  {row:?}");
    }

    let dir = std::env::temp_dir().join("margin-auditor-net");
    let manifest = save_network(&net, &dir)?;
    let back = load_network(&manifest)?;
    assert_eq!(back.forward(&x)?, y);
    println!("manifest written to {}", manifest.display());
    Ok(())
}
