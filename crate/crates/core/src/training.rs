//! Deterministic minibatch SGD on softmax cross-entropy for dense ReLU
//! classifiers, with one snapshot of norms and margins per epoch.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexity::{layer_norms, spectral_complexity};
use crate::data::{randomize_inputs_gaussian, randomize_labels, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::margins::{error_rate_from_outputs, raw_margins, MarginDigest, MarginDistribution};
use crate::network::{Layer, Network, Nonlinearity};
use crate::output::{ser_f64, to_json, write_text};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    #[default]
    TrueLabels,
    /// Training labels replaced by uniform draws; test labels untouched.
    RandomLabels,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    #[default]
    TrueInputs,
    /// Training inputs replaced by Gaussian draws with matching mean and covariance.
    GaussianMomentMatched,
}

fn default_lr() -> f64 {
    0.01
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Input dimension, hidden widths, then the number of classes.
    pub layer_widths: Vec<usize>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub l2_coefficient: f64,
    #[serde(default)]
    pub label_mode: LabelMode,
    #[serde(default)]
    pub input_mode: InputMode,
}

impl TrainConfig {
    pub fn new(layer_widths: Vec<usize>, epochs: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            layer_widths,
            learning_rate: default_lr(),
            epochs,
            batch_size,
            seed,
            l2_coefficient: 0.0,
            label_mode: LabelMode::TrueLabels,
            input_mode: InputMode::TrueInputs,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 || self.layer_widths.contains(&0) {
            return Err(Error::param(format!(
                "layer_widths needs at least input and output sizes, all positive; got {:?}",
                self.layer_widths
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::param(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be >= 1"));
        }
        if !(self.l2_coefficient >= 0.0) || !self.l2_coefficient.is_finite() {
            return Err(Error::param(format!(
                "l2_coefficient must be >= 0, got {}",
                self.l2_coefficient
            )));
        }
        Ok(())
    }
}

/// Glorot-uniform weights in `±√(6/(fan_in + fan_out))`, zero references,
/// ReLU hidden layers and a linear output layer.
pub fn init_network(cfg: &TrainConfig) -> Result<Network> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.layer_widths.len();
    let layers = cfg
        .layer_widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let a = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-lim..=lim));
            let nl = if i + 2 == n { Nonlinearity::Identity } else { Nonlinearity::Relu };
            Layer::with_zero_reference(a, nl)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

fn check_trainable(net: &Network) -> Result<()> {
    for (i, l) in net.layers().iter().enumerate() {
        if matches!(l.nonlinearity(), Nonlinearity::MaxPool(_)) {
            return Err(Error::param(format!("layer {} uses max-pooling, which the trainer does not support", i + 1)));
        }
    }
    Ok(())
}

/// Activations `a_0 = x, a_i = σ_i(a_{i-1} A_iᵀ)` for a batch of rows.
fn forward_cache(net: &Network, x: &Matrix) -> Vec<Matrix> {
    let mut acts = Vec::with_capacity(net.depth() + 1);
    acts.push(x.clone());
    for layer in net.layers() {
        let prev = acts.last().expect("nonempty");
        let w = layer.weight();
        let mut z = vec![0.0; prev.rows() * w.rows()];
        for (zr, xr) in z.chunks_mut(w.rows()).zip(prev.iter_rows()) {
            for (zi, wr) in zr.iter_mut().zip(w.iter_rows()) {
                *zi = dot(wr, xr);
            }
        }
        if matches!(layer.nonlinearity(), Nonlinearity::Relu) {
            for v in &mut z {
                *v = v.max(0.0);
            }
        }
        acts.push(Matrix::from_parts(prev.rows(), w.rows(), z));
    }
    acts
}

/// Mean softmax cross-entropy plus `λ Σ_i ‖A_i‖²` on a batch, and its
/// gradient with respect to every weight matrix. Labels are 1-based.
pub fn loss_and_gradients(net: &Network, x: &Matrix, labels: &[usize], l2: f64) -> Result<(f64, Vec<Matrix>)> {
    check_trainable(net)?;
    if x.rows() != labels.len() || x.rows() == 0 {
        return Err(Error::dim(format!("{} rows with {} labels", x.rows(), labels.len())));
    }
    if x.cols() != net.input_dim() {
        return Err(Error::dim(format!(
            "data has {} columns but the network expects {}",
            x.cols(),
            net.input_dim()
        )));
    }
    let k = net.output_dim();
    if let Some(&y) = labels.iter().find(|&&y| y == 0 || y > k) {
        return Err(Error::param(format!("label {y} outside 1..={k}")));
    }
    let acts = forward_cache(net, x);
    let b = x.rows() as f64;
    let logits = acts.last().expect("nonempty");
    let mut loss = 0.0;
    let mut delta = vec![0.0; logits.rows() * k];
    for ((row, d), &y) in logits.iter_rows().zip(delta.chunks_mut(k)).zip(labels) {
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (di, &z) in d.iter_mut().zip(row) {
            *di = (z - mx).exp();
            sum += *di;
        }
        loss += sum.ln() + mx - row[y - 1];
        for di in d.iter_mut() {
            *di /= sum * b;
        }
        d[y - 1] -= 1.0 / b;
    }
    loss /= b;

    let layers = net.layers();
    let mut grads: Vec<Matrix> = layers
        .iter()
        .map(|l| Matrix::zeros(l.weight().rows(), l.weight().cols()))
        .collect();
    let mut delta = Matrix::from_parts(logits.rows(), k, delta);
    for i in (0..layers.len()).rev() {
        let w = layers[i].weight();
        let input = &acts[i];
        let g = &mut grads[i];
        for (dr, xr) in delta.iter_rows().zip(input.iter_rows()) {
            for (o, &dv) in dr.iter().enumerate() {
                if dv != 0.0 {
                    axpy(dv, xr, g.row_mut(o));
                }
            }
        }
        if l2 > 0.0 {
            loss += l2 * w.data().iter().map(|v| v * v).sum::<f64>();
            axpy(2.0 * l2, w.data(), g.data_mut());
        }
        if i == 0 {
            break;
        }
        let mut prev = Matrix::zeros(input.rows(), input.cols());
        for ((pr, dr), ar) in prev.data_mut().chunks_mut(input.cols()).zip(delta.iter_rows()).zip(input.iter_rows()) {
            for (o, &dv) in dr.iter().enumerate() {
                if dv != 0.0 {
                    axpy(dv, w.row(o), pr);
                }
            }
            if matches!(layers[i - 1].nonlinearity(), Nonlinearity::Relu) {
                for (p, &a) in pr.iter_mut().zip(ar) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
        }
        delta = prev;
    }
    Ok((loss, grads))
}

/// One SGD step `A_i ← A_i - lr ∇_i` on a batch. Returns the batch loss
/// before the step.
pub fn sgd_step(net: &mut Network, x: &Matrix, labels: &[usize], lr: f64, l2: f64) -> Result<f64> {
    let (loss, grads) = loss_and_gradients(net, x, labels, l2)?;
    for (layer, g) in net.layers_mut().iter_mut().zip(&grads) {
        axpy(-lr, g.data(), layer.weight_mut().data_mut());
    }
    Ok(loss)
}

/// Per-epoch record of errors, norms and margins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochSnapshot {
    pub epoch: usize,
    #[serde(serialize_with = "ser_f64")]
    pub train_loss: f64,
    #[serde(serialize_with = "ser_f64")]
    pub train_error: f64,
    #[serde(serialize_with = "ser_f64")]
    pub test_error: f64,
    /// `test_error - train_error`.
    #[serde(serialize_with = "ser_f64")]
    pub excess_risk: f64,
    #[serde(serialize_with = "ser_f64")]
    pub product_spectral_norms: f64,
    #[serde(rename = "R_A", serialize_with = "ser_f64")]
    pub r_a: f64,
    /// Digest of the normalized training margins.
    pub margin_summary: MarginDigest,
}

/// Errors, norms and normalized training margins of `net`.
pub fn snapshot(net: &Network, epoch: usize, train_loss: f64, train: &Dataset, test: &Dataset) -> Result<(EpochSnapshot, MarginDistribution)> {
    let norms = layer_norms(net)?;
    let r_a = spectral_complexity(&norms)?;
    let product: f64 = norms.iter().map(|n| n.s).product();
    let out = net.forward(train.features())?;
    let train_error = error_rate_from_outputs(&out, train.labels());
    let md = MarginDistribution::from_raw(raw_margins(&out, train.labels())?, r_a, train.data_norm())?;
    let test_error = error_rate_from_outputs(&net.forward(test.features())?, test.labels());
    Ok((
        EpochSnapshot {
            epoch,
            train_loss,
            train_error,
            test_error,
            excess_risk: test_error - train_error,
            product_spectral_norms: product,
            r_a,
            margin_summary: md.digest(),
        },
        md,
    ))
}

/// Seeds for the derived streams, mixed from the config seed.
const LABEL_SEED_SALT: u64 = 0x6c61_6265_6c73;
const INPUT_SEED_SALT: u64 = 0x696e_7075_7473;

/// The training set after applying the label and input modes.
pub fn prepare_training_set(cfg: &TrainConfig, train: &Dataset) -> Result<Dataset> {
    let mut ds = train.clone();
    if cfg.input_mode == InputMode::GaussianMomentMatched {
        ds = randomize_inputs_gaussian(&ds, cfg.seed ^ INPUT_SEED_SALT)?;
    }
    if cfg.label_mode == LabelMode::RandomLabels {
        ds = randomize_labels(&ds, cfg.seed ^ LABEL_SEED_SALT);
    }
    Ok(ds)
}

fn check_datasets(cfg: &TrainConfig, train: &Dataset, test: &Dataset) -> Result<()> {
    let w = &cfg.layer_widths;
    let (d, k) = (w[0], w[w.len() - 1]);
    for (name, ds) in [("training", train), ("test", test)] {
        if ds.dim() != d {
            return Err(Error::dim(format!("{name} data has dimension {} but layer_widths starts at {d}", ds.dim())));
        }
        if ds.num_classes() != k {
            return Err(Error::dim(format!("{name} data has {} classes but layer_widths ends at {k}", ds.num_classes())));
        }
    }
    Ok(())
}

/// Trains from [`init_network`] and calls `hook` after every epoch with the
/// snapshot, the network and its training margins.
pub fn train<F>(cfg: &TrainConfig, train: &Dataset, test: &Dataset, hook: F) -> Result<(Network, Vec<EpochSnapshot>)>
where
    F: FnMut(&EpochSnapshot, &Network, &MarginDistribution) -> Result<()>,
{
    train_until(cfg, train, test, hook, |_| false)
}

/// Like [`train`], but stops after the first epoch whose snapshot satisfies `stop`.
pub fn train_until<F, S>(
    cfg: &TrainConfig,
    train: &Dataset,
    test: &Dataset,
    mut hook: F,
    stop: S,
) -> Result<(Network, Vec<EpochSnapshot>)>
where
    F: FnMut(&EpochSnapshot, &Network, &MarginDistribution) -> Result<()>,
    S: Fn(&EpochSnapshot) -> bool,
{
    cfg.validate()?;
    check_datasets(cfg, train, test)?;
    let ds = prepare_training_set(cfg, train)?;
    let mut net = init_network(cfg)?;
    let n = ds.len();
    let d = ds.dim();
    let mut order: Vec<usize> = (0..n).collect();
    let mut snaps = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::with_capacity(cfg.batch_size * d);
    let mut batch_labels = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch_labels.clear();
            for &i in chunk {
                batch.extend_from_slice(ds.features().row(i));
                batch_labels.push(ds.labels()[i]);
            }
            let x = Matrix::from_parts(chunk.len(), d, std::mem::take(&mut batch));
            let loss = sgd_step(&mut net, &x, &batch_labels, cfg.learning_rate, cfg.l2_coefficient)?;
            batch = x.into_data();
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
        }
        if net.layers().iter().any(|l| !l.weight().all_finite()) {
            return Err(Error::Diverged { epoch });
        }
        // Finite weights can still overflow the norm product.
        let norms = layer_norms(&net)?;
        if !spectral_complexity(&norms)?.is_finite() || !norms.iter().map(|n| n.s).product::<f64>().is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let (snap, md) = snapshot(&net, epoch, loss_sum / n as f64, &ds, test)?;
        hook(&snap, &net, &md)?;
        let done = stop(&snap);
        snaps.push(snap);
        if done {
            break;
        }
    }
    Ok((net, snaps))
}

/// File name of the snapshot JSON for an epoch.
pub fn snapshot_file_name(epoch: usize) -> String {
    format!("epoch-{epoch:04}.json")
}

/// File name of the per-epoch margins CSV.
pub fn margins_file_name(epoch: usize) -> String {
    format!("margins-{epoch:04}.csv")
}

/// Writes `epoch-NNNN.json` and `margins-NNNN.csv` into `dir`.
pub fn write_snapshot(dir: impl AsRef<Path>, snap: &EpochSnapshot, md: &MarginDistribution) -> Result<()> {
    let dir = dir.as_ref();
    write_text(dir.join(snapshot_file_name(snap.epoch)), &to_json(snap))?;
    crate::margins::write_margins_csv(dir.join(margins_file_name(snap.epoch)), md)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;

    fn blobs_cfg(epochs: usize) -> TrainConfig {
        let mut c = TrainConfig::new(vec![4, 16, 2], epochs, 10, 3);
        c.learning_rate = 0.05;
        c
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let c = TrainConfig::new(vec![5, 7, 3], 1, 1, 11);
        let a = init_network(&c).unwrap();
        assert_eq!(a, init_network(&c).unwrap());
        let lim = (6.0f64 / 12.0).sqrt();
        assert!(a.layers()[0].weight().data().iter().all(|v| v.abs() <= lim));
        let mut c2 = c.clone();
        c2.seed = 12;
        let b = init_network(&c2).unwrap();
        assert_ne!(a.layers()[0].weight().get(0, 0), b.layers()[0].weight().get(0, 0));
        assert!(init_network(&TrainConfig::new(vec![5], 1, 1, 0)).is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: TrainConfig = serde_json::from_str(r#"{"layer_widths":[2,3],"epochs":2,"batch_size":4}"#).unwrap();
        assert_eq!(c.learning_rate, 0.01);
        assert_eq!(c.label_mode, LabelMode::TrueLabels);
        let c: TrainConfig = serde_json::from_str(
            r#"{"layer_widths":[2,3],"epochs":2,"batch_size":4,"label_mode":"random_labels","input_mode":"gaussian_moment_matched"}"#,
        )
        .unwrap();
        assert_eq!(c.input_mode, InputMode::GaussianMomentMatched);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"layer_widths":[2,3],"epochs":2,"batch_size":4,"lr":1}"#).is_err());
    }

    #[test]
    fn separable_blobs_reach_zero_error() {
        let train_ds = synth_blobs(200, 4, 2, 6.0, 1).unwrap();
        let test_ds = synth_blobs(100, 4, 2, 6.0, 2).unwrap();
        let (_, snaps) = train(&blobs_cfg(50), &train_ds, &test_ds, |_, _, _| Ok(())).unwrap();
        assert_eq!(snaps.len(), 50);
        assert_eq!(snaps.last().unwrap().train_error, 0.0);
    }

    #[test]
    fn epochs_one_and_zero() {
        let ds = synth_blobs(40, 4, 2, 3.0, 1).unwrap();
        let (_, s) = train(&blobs_cfg(1), &ds, &ds, |_, _, _| Ok(())).unwrap();
        assert_eq!(s.len(), 1);
        assert!(train(&blobs_cfg(0), &ds, &ds, |_, _, _| Ok(())).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = synth_blobs(60, 4, 2, 2.0, 5).unwrap();
        let a = train(&blobs_cfg(3), &ds, &ds, |_, _, _| Ok(())).unwrap();
        let b = train(&blobs_cfg(3), &ds, &ds, |_, _, _| Ok(())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let ds = synth_blobs(60, 4, 2, 50.0, 5).unwrap();
        let mut c = blobs_cfg(20);
        c.learning_rate = 1e6;
        let r = train(&c, &ds, &ds, |_, _, _| Ok(()));
        assert!(matches!(r, Err(Error::Diverged { .. })), "{:?}", r.map(|x| x.1));
    }

    #[test]
    fn snapshot_error_matches_margins_module() {
        let ds = synth_blobs(60, 4, 2, 2.0, 5).unwrap();
        let mut nets = Vec::new();
        let (_, snaps) = train(&blobs_cfg(2), &ds, &ds, |_, net, _| {
            nets.push(net.clone());
            Ok(())
        })
        .unwrap();
        for (s, n) in snaps.iter().zip(&nets) {
            assert_eq!(s.train_error, crate::margins::error_rate(n, &ds).unwrap());
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = synth_blobs(8, 3, 3, 1.0, 2).unwrap();
        let c = TrainConfig::new(vec![3, 5, 3], 1, 1, 4);
        let net = init_network(&c).unwrap();
        let (_, grads) = loss_and_gradients(&net, ds.features(), ds.labels(), 0.01).unwrap();
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let li = rng.random_range(0..2);
            let (r, col) = net.layers()[li].weight().shape();
            let (i, j) = (rng.random_range(0..r), rng.random_range(0..col));
            let eval = |delta: f64| {
                let mut n = net.clone();
                let w = n.layers_mut()[li].weight_mut();
                w.set(i, j, w.get(i, j) + delta);
                loss_and_gradients(&n, ds.features(), ds.labels(), 0.01).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let g = grads[li].get(i, j);
            assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3), "{fd} vs {g}");
        }
    }
}
