//! Reading the bundled MNIST subset, replacing labels by uniform noise and
//! inputs by moment-matched Gaussians.
//!
//!     cargo run --example mnist_data

use margin_auditor::data::{idx, load_dataset, mean_and_covariance, randomize_inputs_gaussian, randomize_labels};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist");

fn main() -> margin_auditor::Result<()> {
    let images = format!("{DIR}/train5k-images-idx3-ubyte");
    let labels = format!("{DIR}/train5k-labels-idx1-ubyte");
    println!("{:?}", idx::inspect(&images)?);
    let ds = load_dataset(&images, &labels)?;
    println!("n = {}  d = {}  k = {}  ‖X‖₂ = {:.2}", ds.len(), ds.dim(), ds.num_classes(), ds.data_norm());

    let mut counts = vec![0; ds.num_classes()];
    for &y in randomize_labels(&ds, 42).labels() {
        counts[y - 1] += 1;
    }
    println!("random label counts: {counts:?}");

    let small = ds.balanced_prefix(50)?;
    let g = randomize_inputs_gaussian(&small, 42)?;
    let (m0, _) = mean_and_covariance(small.features());
    let (m1, _) = mean_and_covariance(g.features());
    let gap = m0.iter().zip(&m1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("Gaussian inputs for {} images: largest mean gap {gap:.3}", small.len());
    Ok(())
}
