//! Spectral complexity, the PAC-Bayes comparator and every bound term for a
//! small trained network on synthetic data.
//!
//!     cargo run --example bound_report

use margin_auditor::complexity::analyze;
use margin_auditor::data::synth_blobs;
use margin_auditor::output::to_json;
use margin_auditor::training::{train, TrainConfig};

fn main() -> margin_auditor::Result<()> {
    let tr = synth_blobs(300, 6, 3, 3.0, 1)?;
    let te = synth_blobs(300, 6, 3, 3.0, 2)?;
    let mut cfg = TrainConfig::new(vec![6, 32, 3], 20, 10, 42);
    cfg.learning_rate = 0.05;
    let (net, _) = train(&cfg, &tr, &te, |_, _, _| Ok(()))?;

    let a = analyze(&net, &tr, None, 0.01)?;
    print!("{}", to_json(&a.report));
    let r = &a.report;
    println!("R_A / R_PB = {:.4}", r.r_a / r.r_pb);
    println!(
        "bound = {:.4} (ramp) + {:.4} (8/n) + {:.4} (complexity) + {:.4} (confidence)",
        r.ramp_risk, r.term_const, r.term_complexity, r.term_confidence
    );
    Ok(())
}
