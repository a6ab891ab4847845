//! Normalized margins of a trained network, their histogram and KDE as CSV,
//! and invariance of the normalized margins to rescaling one layer.
//!
//!     cargo run --example margin_distribution [out_dir]

use margin_auditor::complexity::{layer_norms, spectral_complexity};
use margin_auditor::data::synth_blobs;
use margin_auditor::margins::{margin_distribution, write_margins_csv, write_summary_csvs};
use margin_auditor::training::{train, TrainConfig};

fn main() -> margin_auditor::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/margins-example".into());
    std::fs::create_dir_all(&out).ok();
    let tr = synth_blobs(400, 8, 4, 2.5, 3)?;
    let mut cfg = TrainConfig::new(vec![8, 32, 32, 4], 15, 8, 42);
    cfg.learning_rate = 0.05;
    let (net, _) = train(&cfg, &tr, &tr, |_, _, _| Ok(()))?;

    let r_a = spectral_complexity(&layer_norms(&net)?)?;
    let md = margin_distribution(&net, &tr, r_a)?;
    let s = md.summarize(30)?;
    write_margins_csv(format!("{out}/margins.csv"), &md)?;
    write_summary_csvs(format!("{out}/histogram.csv"), format!("{out}/kde.csv"), &s)?;
    let d = md.digest();
    println!("R_A = {r_a:.4}  normalizer = {:.3e}", md.normalizer);
    println!("normalized margins: mean {:.4}  median {:.4}  [{:.4}, {:.4}]", d.mean, d.median, d.min, d.max);
    println!("KDE bandwidth {:.3e}, mode {:.4}", s.kde.bandwidth, s.kde.mode());

    let scaled = net.with_scaled_layer(1, 10.0)?;
    let md2 = margin_distribution(&scaled, &tr, spectral_complexity(&layer_norms(&scaled)?)?)?;
    let worst = md.normalized.iter().zip(&md2.normalized).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("layer 2 scaled by 10: raw margins x{:.1}, normalized margins change by at most {worst:.2e}", md2.raw[0] / md.raw[0]);
    println!("CSV files in {out}");
    Ok(())
}
