//! Command-line front end. Every command prints JSON on stdout; failures
//! print one JSON object on stderr and exit with [`Error::exit_code`].

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::complexity::analyze;
use crate::covering::{cover_element_for, maurey_sparsify};
use crate::data::{idx, load_dataset};
use crate::error::{Error, Result};
use crate::linalg::{mat1, spectral_norm, Matrix};
use crate::lowerbound::{build_linear_network_depth, khintchine_floor, rademacher_linear_estimate};
use crate::margins::{margin_distribution, write_margins_csv, write_summary_csvs};
use crate::network::manifest::{load_network, save_network};
use crate::output::{fmt17, ser_f64, to_json, write_text};
use crate::training::{train, write_snapshot, TrainConfig};

/// Environment variable capping the worker count (0 or unset = automatic).
pub const THREADS_ENV: &str = "MARGIN_AUDITOR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "margin-auditor", version, about = "Spectrally-normalized margins and generalization bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct DataArgs {
    /// Feature file (IDX images or MAT1).
    #[arg(long)]
    pub features: PathBuf,
    /// Label file (IDX labels or LBL1).
    #[arg(long)]
    pub labels: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Norms, spectral complexity and bound terms of a network on a dataset.
    Analyze {
        /// Network manifest (JSON).
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Ramp-loss margin; defaults to the median positive raw margin.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value = "./out")]
        out: PathBuf,
    },
    /// Train a ReLU classifier with SGD, writing one snapshot per epoch.
    Train {
        /// Training configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train_features: PathBuf,
        #[arg(long)]
        train_labels: PathBuf,
        #[arg(long)]
        test_features: PathBuf,
        #[arg(long)]
        test_labels: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "./out")]
        out: PathBuf,
    },
    /// Normalized margin distribution with histogram and KDE.
    Margins {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long, default_value = "./out")]
        out: PathBuf,
    },
    /// Build a matrix-product cover element and check its distance.
    Coverdemo {
        /// Weight matrix A (MAT1); random when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Data matrix X (MAT1); random when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        rows: usize,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Linear-function ReLU construction and the Rademacher floor.
    Lowerbound {
        /// Comma-separated vector a.
        #[arg(long, default_value = "3,4", value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 50)]
        examples: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Radius r of the linear class; defaults to ‖a‖₂.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Maurey sparsification of a random convex combination.
    Maurey {
        #[arg(long, default_value_t = 6)]
        atoms: usize,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print the header of an IDX file.
    IdxInspect { path: PathBuf },
}

/// Reads the thread cap from the environment and configures the global pool.
pub fn configure_threads() -> Result<()> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::param(format!("{THREADS_ENV} must be a nonnegative integer, got {v:?}")))?,
        _ => 0,
    };
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn print_json<T: Serialize>(v: &T) {
    print!("{}", to_json(v));
}

/// Runs a parsed command, returning the process exit code on success.
pub fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { network, data, gamma, delta, out } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
            }
            if let Some(g) = gamma.filter(|g| !(*g > 0.0) || !g.is_finite()) {
                return Err(Error::param(format!("gamma must be positive, got {g}")));
            }
            let net = load_network(&network)?;
            let ds = load_dataset(&data.features, &data.labels)?;
            let a = analyze(&net, &ds, gamma, delta)?;
            create_dir(&out)?;
            write_text(out.join("bound-report.json"), &to_json(&a.report))?;
            match &a.margins {
                Some(md) => write_margins_csv(out.join("margins.csv"), md)?,
                None => {
                    let rows: Vec<Vec<String>> = a
                        .raw_margins
                        .iter()
                        .enumerate()
                        .map(|(i, r)| vec![i.to_string(), fmt17(*r), String::new()])
                        .collect();
                    crate::output::write_csv(out.join("margins.csv"), &crate::margins::MARGIN_CSV_HEADER, &rows)?;
                }
            }
            print_json(&a.report);
            Ok(0)
        }
        Command::Train { config, train_features, train_labels, test_features, test_labels, seed, out } => {
            let mut cfg = TrainConfig::from_json_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let tr = load_dataset(&train_features, &train_labels)?;
            let te = load_dataset(&test_features, &test_labels)?;
            create_dir(&out)?;
            write_text(out.join("config.json"), &to_json(&cfg))?;
            let (net, snaps) = train(&cfg, &tr, &te, |snap, _, md| {
                eprintln!(
                    "epoch {}: train_error {} test_error {}",
                    snap.epoch, snap.train_error, snap.test_error
                );
                write_snapshot(&out, snap, md)
            })?;
            save_network(&net, out.join("network"))?;
            write_text(out.join("snapshots.json"), &to_json(&snaps))?;
            print_json(snaps.last().expect("epochs >= 1"));
            Ok(0)
        }
        Command::Margins { network, data, bins, out } => {
            let net = load_network(&network)?;
            let ds = load_dataset(&data.features, &data.labels)?;
            let norms = crate::complexity::layer_norms(&net)?;
            let r_a = crate::complexity::spectral_complexity(&norms)?;
            let md = margin_distribution(&net, &ds, r_a)?;
            let summary = md.summarize(bins)?;
            create_dir(&out)?;
            write_margins_csv(out.join("margins.csv"), &md)?;
            write_summary_csvs(out.join("histogram.csv"), out.join("kde.csv"), &summary)?;
            #[derive(Serialize)]
            struct Out {
                #[serde(rename = "R_A", serialize_with = "ser_f64")]
                r_a: f64,
                digest: crate::margins::MarginDigest,
                #[serde(serialize_with = "ser_f64")]
                kde_bandwidth: f64,
                bins: usize,
            }
            print_json(&Out {
                r_a,
                digest: md.digest(),
                kde_bandwidth: summary.kde.bandwidth,
                bins: summary.histogram.bins(),
            });
            Ok(0)
        }
        Command::Coverdemo { weights, data, rows, dim, cols, eps, q, s, seed } => {
            let x = match data {
                Some(p) => mat1::read(p)?,
                None => Matrix::random_uniform(rows, dim, seed),
            };
            let a = match weights {
                Some(p) => mat1::read(p)?,
                None => Matrix::random_uniform(x.cols(), cols, seed.wrapping_add(1)),
            };
            let c = cover_element_for(&a, &x, eps, q, s, seed)?;
            print_json(&c);
            Ok(if c.satisfied { 0 } else { 4 })
        }
        Command::Lowerbound { a, depth, examples, trials, radius, seed } => {
            let net = build_linear_network_depth(&a, depth)?;
            if examples == 0 {
                return Err(Error::param("examples must be >= 1"));
            }
            let a_norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = radius.unwrap_or(a_norm);
            let x = Matrix::random_uniform(examples, a.len(), seed);
            let out = net.forward(&x)?;
            let max_err = x
                .iter_rows()
                .zip(out.iter_rows())
                .map(|(xr, o)| (o[0] - xr.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>()).abs())
                .fold(0.0, f64::max);
            let product = net
                .layers()
                .iter()
                .map(|l| spectral_norm(l.weight()))
                .product::<Result<f64>>()?;
            let est = rademacher_linear_estimate(&x, r, trials, seed)?;
            let floor = khintchine_floor(&x, r);
            let satisfied = max_err <= 1e-12
                && (product - 2.0 * a_norm).abs() <= 1e-10 * 2.0 * a_norm
                && est.mean >= floor - 3.0 * est.std_error;
            print_json(&LowerboundRecord {
                a_norm,
                product_spectral_norms: product,
                max_pointwise_error: max_err,
                rademacher_estimate: est.mean,
                rademacher_std_error: est.std_error,
                khintchine_floor: floor,
                trials,
                satisfied,
            });
            Ok(if satisfied { 0 } else { 4 })
        }
        Command::Maurey { atoms, dim, k, seed } => {
            if atoms == 0 || dim == 0 {
                return Err(Error::param("atoms and dim must be >= 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<Vec<f64>> = (0..atoms)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let alpha: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.0..1.0)).collect();
            let r = maurey_sparsify(&v, &alpha, k, seed)?;
            let satisfied = r.approx_error_sq <= r.guarantee;
            print_json(&MaureyRecord { k, result: r, satisfied });
            Ok(if satisfied { 0 } else { 4 })
        }
        Command::IdxInspect { path } => {
            print_json(&idx::inspect(&path)?);
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct LowerboundRecord {
    #[serde(serialize_with = "ser_f64")]
    a_norm: f64,
    #[serde(serialize_with = "ser_f64")]
    product_spectral_norms: f64,
    #[serde(serialize_with = "ser_f64")]
    max_pointwise_error: f64,
    #[serde(serialize_with = "ser_f64")]
    rademacher_estimate: f64,
    #[serde(serialize_with = "ser_f64")]
    rademacher_std_error: f64,
    #[serde(serialize_with = "ser_f64")]
    khintchine_floor: f64,
    trials: usize,
    satisfied: bool,
}

#[derive(Serialize)]
struct MaureyRecord {
    k: usize,
    #[serde(flatten)]
    result: crate::covering::SparsifyResult,
    satisfied: bool,
}

/// Structured diagnostic written to stderr on failure.
pub fn error_json(e: &Error) -> String {
    let v = json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "exit_code": e.exit_code(),
        }
    });
    serde_json::to_string(&v).expect("serializable")
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.exit_code()
        }
    }
}
