//! SGD on synthetic blobs with a snapshot written every epoch.
//!
//!     cargo run --example train_snapshots [out_dir]

use margin_auditor::data::synth_blobs;
use margin_auditor::training::{train, write_snapshot, TrainConfig};

fn main() -> margin_auditor::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/train-example".into());
    std::fs::create_dir_all(&out).ok();
    let tr = synth_blobs(500, 10, 5, 2.0, 1)?;
    let te = synth_blobs(500, 10, 5, 2.0, 2)?;
    let mut cfg = TrainConfig::new(vec![10, 64, 64, 5], 12, 16, 42);
    cfg.learning_rate = 0.05;
    println!("epoch  train_err  test_err  ∏‖A‖σ     R_A       mean margin");
    train(&cfg, &tr, &te, |s, _, md| {
        println!(
            "{:>5}  {:>9.4}  {:>8.4}  {:>7.3}  {:>8.3}  {:>10.5}",
            s.epoch, s.train_error, s.test_error, s.product_spectral_norms, s.r_a, s.margin_summary.mean
        );
        write_snapshot(&out, s, md)
    })?;
    println!("snapshots in {out}");
    Ok(())
}
