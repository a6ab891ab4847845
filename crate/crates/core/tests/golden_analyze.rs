//! The bundled two-layer fixture against numpy-computed values and the
//! frozen report.

use std::path::{Path, PathBuf};
use std::process::Command;

use margin_auditor::complexity::analyze;
use margin_auditor::data::load_dataset;
use margin_auditor::network::manifest::load_network;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny").join(name)
}

fn oracle() -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(fixture("oracle.json")).unwrap()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn report_matches_numpy_oracle() {
    let net = load_network(fixture("manifest.json")).unwrap();
    let ds = load_dataset(fixture("x.mat"), fixture("y.lbl")).unwrap();
    let a = analyze(&net, &ds, Some(0.5), 0.01).unwrap();
    let o = oracle();
    let r = &a.report;
    let f = |k: &str| o[k].as_f64().unwrap();
    for (got, key) in [
        (r.r_a, "R_A"),
        (r.r_pb, "R_PB"),
        (r.data_norm, "B"),
        (r.ramp_risk, "ramp"),
        (r.term_complexity, "cplx"),
        (r.term_confidence, "conf"),
        (r.bound_total, "total"),
        (r.uniform_bound_total, "utotal"),
        (r.error_rate.unwrap(), "err"),
    ] {
        assert!(close(got, f(key)), "{key}: {got} vs {}", f(key));
    }
    for (i, l) in r.layer_norms.iter().enumerate() {
        assert!(close(l.s, o["s"][i].as_f64().unwrap()));
        assert!(close(l.b, o["b"][i].as_f64().unwrap()));
    }
    let md = a.margins.unwrap();
    for (i, (raw, norm)) in md.raw.iter().zip(&md.normalized).enumerate() {
        assert!(close(*raw, o["margins"][i].as_f64().unwrap()));
        assert!(close(*norm, o["normalized"][i].as_f64().unwrap()));
    }
    assert!(close(r.bound_total, r.ramp_risk + r.term_const + r.term_complexity + r.term_confidence));
}

#[test]
fn cli_output_is_byte_identical_to_golden() {
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_margin-auditor"))
        .arg("analyze")
        .arg("--network")
        .arg(fixture("manifest.json"))
        .arg("--features")
        .arg(fixture("x.mat"))
        .arg("--labels")
        .arg(fixture("y.lbl"))
        .args(["--gamma", "0.5", "--delta", "0.01", "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    for (produced, golden) in [("bound-report.json", "expected-bound-report.json"), ("margins.csv", "expected-margins.csv")] {
        let got = std::fs::read(out.path().join(produced)).unwrap();
        assert_eq!(got, std::fs::read(fixture(golden)).unwrap(), "{produced} drifted from golden");
    }
    assert_eq!(status.stdout, std::fs::read(fixture("expected-bound-report.json")).unwrap());
}
