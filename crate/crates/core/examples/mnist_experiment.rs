//! Desk-scale margin experiment on MNIST: a 784-256-256-10 MLP trained with
//! true labels, random labels, and true labels with l2 penalty. Reports the
//! normalized margins, spectral products and excess risk per epoch.
//!
//!     cargo run --release --example mnist_experiment [max_epochs]

use margin_auditor::data::load_dataset;
use margin_auditor::training::{train_until, EpochSnapshot, LabelMode, TrainConfig};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist");

fn run(cfg: &TrainConfig, epochs: usize, name: &str) -> margin_auditor::Result<Vec<EpochSnapshot>> {
    let tr = load_dataset(format!("{DIR}/train5k-images-idx3-ubyte"), format!("{DIR}/train5k-labels-idx1-ubyte"))?;
    let te = load_dataset(format!("{DIR}/test1k-images-idx3-ubyte"), format!("{DIR}/test1k-labels-idx1-ubyte"))?;
    let mut cfg = cfg.clone();
    cfg.epochs = epochs;
    let (_, snaps) = train_until(
        &cfg,
        &tr,
        &te,
        |s, _, _| {
            eprintln!("{name} epoch {:>2}: train {:.4} test {:.4}", s.epoch, s.train_error, s.test_error);
            Ok(())
        },
        |s| s.train_error <= 0.02 && cfg.label_mode == LabelMode::RandomLabels,
    )?;
    Ok(snaps)
}

fn main() -> margin_auditor::Result<()> {
    let max_epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let base = TrainConfig::new(vec![784, 256, 256, 10], max_epochs, 4, 42);
    let mut random = base.clone();
    random.label_mode = LabelMode::RandomLabels;
    let rnd = run(&random, max_epochs, "random")?;
    let e = rnd.len();
    let tru = run(&base, e, "true")?;
    let mut reg = base.clone();
    reg.l2_coefficient = 1e-4;
    let l2 = run(&reg, e, "l2")?;

    println!("{:>10} {:>7} {:>10} {:>10} {:>12} {:>12}", "run", "epoch", "train_err", "excess", "∏‖A‖σ", "mean margin");
    for (name, s) in [("true", &tru), ("random", &rnd), ("true+l2", &l2)] {
        let s = s.last().unwrap();
        println!(
            "{name:>10} {:>7} {:>10.4} {:>10.4} {:>12.3} {:>12.6}",
            s.epoch, s.train_error, s.excess_risk, s.product_spectral_norms, s.margin_summary.mean
        );
    }
    Ok(())
}
