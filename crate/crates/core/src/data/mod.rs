//! Labeled datasets: IDX and MAT1/LBL1 loading, synthetic clusters, and the
//! two randomization controls (random labels, moment-matched Gaussian inputs).

pub mod idx;
pub mod lbl1;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, mat1, Matrix};

/// Feature matrix (examples as rows) with labels in `1..=k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(x: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::param("dataset is empty"));
        }
        if labels.len() != x.rows() {
            return Err(Error::dim(format!(
                "{} labels for {} examples",
                labels.len(),
                x.rows()
            )));
        }
        if let Some((i, &y)) = labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y == 0 || y > num_classes)
        {
            return Err(Error::param(format!(
                "label {y} of example {i} is outside 1..={num_classes}"
            )));
        }
        Ok(Self {
            x,
            labels,
            num_classes,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// `‖X‖_2 = sqrt(Σ_i ‖x_i‖_2²)`.
    pub fn data_norm(&self) -> f64 {
        data_norm(&self.x)
    }

    /// Examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::param(format!("index {i} out of range")));
            }
            data.extend_from_slice(self.x.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(Matrix::from_parts(indices.len(), d, data), labels, self.num_classes)
    }

    /// First `n` examples of every class in turn, interleaved class by class.
    pub fn balanced_prefix(&self, per_class: usize) -> Result<Dataset> {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            if by_class[y - 1].len() < per_class {
                by_class[y - 1].push(i);
            }
        }
        let mut idx = Vec::new();
        for r in 0..per_class {
            for c in &by_class {
                if let Some(&i) = c.get(r) {
                    idx.push(i);
                }
            }
        }
        self.subset(&idx)
    }

    pub(crate) fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset> {
        Dataset::new(self.x.clone(), labels, self.num_classes)
    }

    pub(crate) fn with_features(&self, x: Matrix) -> Result<Dataset> {
        Dataset::new(x, self.labels.clone(), self.num_classes)
    }
}

/// `sqrt(Σ_i ‖x_i‖_2²)` for examples stored as rows.
pub fn data_norm(x: &Matrix) -> f64 {
    x.iter_rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Loads a dataset from a feature file and a label file, detecting the
/// format (IDX or MAT1/LBL1) from the leading magic bytes.
pub fn load_dataset(features: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    let (fp, lp) = (features.as_ref(), labels.as_ref());
    let head = read_head(fp)?;
    if head == *mat1::MAGIC {
        let x = mat1::read(fp)?;
        let (labels, k) = lbl1::read(lp)?;
        Dataset::new(x, labels, k)
    } else if head == idx::IMAGES_MAGIC.to_be_bytes() {
        idx::load_idx(fp, lp)
    } else {
        Err(Error::Parse {
            path: fp.to_path_buf(),
            offset: 0,
            reason: "bad magic: neither MAT1 nor IDX images".into(),
        })
    }
}

fn read_head(path: &Path) -> Result<[u8; 4]> {
    use std::io::Read;
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; 4];
    f.read_exact(&mut buf).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        offset: 0,
        reason: "truncated: file shorter than its magic".into(),
    })?;
    Ok(buf)
}

/// Writes the MAT1 feature matrix and LBL1 label file.
pub fn export_dataset(
    ds: &Dataset,
    features: impl AsRef<Path>,
    labels: impl AsRef<Path>,
) -> Result<()> {
    mat1::write(features, &ds.x)?;
    lbl1::write(labels, &ds.labels, ds.num_classes)
}

/// Replaces every label by an iid uniform draw from `1..=k`.
pub fn randomize_labels(ds: &Dataset, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ds.num_classes;
    let labels = (0..ds.len()).map(|_| rng.random_range(1..=k)).collect();
    ds.with_labels(labels).expect("labels in range")
}

/// Replaces inputs by draws from `N(μ̂, Σ̂ + λI)` where `μ̂`, `Σ̂` are the
/// empirical mean and covariance and `λ = 1e-6 · trace(Σ̂) / d`.
/// Each row uses its own ChaCha stream, so the output is independent of the
/// worker count.
pub fn randomize_inputs_gaussian(ds: &Dataset, seed: u64) -> Result<Dataset> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::Degenerate(
            "moment matching needs at least two examples".into(),
        ));
    }
    let (mean, cov) = mean_and_covariance(&ds.x);
    let d = mean.len();
    let trace: f64 = (0..d).map(|i| cov.get(i, i)).sum();
    if trace == 0.0 {
        // every example identical: the matched distribution is a point mass
        let data = mean.iter().copied().cycle().take(n * d).collect();
        return ds.with_features(Matrix::from_parts(n, d, data));
    }
    let shrink = 1e-6 * trace / d as f64;
    let mut shrunk = cov;
    for i in 0..d {
        let v = shrunk.get(i, i) + shrink;
        shrunk.set(i, i, v);
    }
    let chol = cholesky(&shrunk)?;
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for (j, out) in row.iter_mut().enumerate() {
            *out = mean[j] + dot(&chol.row(j)[..=j], &z[..=j]);
        }
    });
    ds.with_features(Matrix::from_parts(n, d, data))
}

/// Column means and the (1/n-normalized) empirical covariance.
pub fn mean_and_covariance(x: &Matrix) -> (Vec<f64>, Matrix) {
    let (n, d) = x.shape();
    let mut mean = vec![0.0; d];
    for r in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = Matrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j]);
    let ct = centered.transpose();
    let mut cov = ct.matmul_transpose(&ct).expect("square");
    cov.data_mut().iter_mut().for_each(|v| *v /= n as f64);
    (mean, cov)
}

/// `k` unit-covariance Gaussian clusters whose means have norm `separation`.
///
/// Class `c` (0-based) is centred at `± separation · e_{c mod d}` (sign flips
/// every `d` classes); beyond `2d` classes the directions are random unit
/// vectors. Example `i` has label `(i mod k) + 1`.
pub fn synth_blobs(n: usize, d: usize, k: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if k == 0 || d == 0 {
        return Err(Error::param("need at least one class and one dimension"));
    }
    if n < k {
        return Err(Error::param(format!("{n} examples cannot cover {k} classes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut dir = vec![0.0; d];
            if c < 2 * d {
                dir[c % d] = if c < d { 1.0 } else { -1.0 };
            } else {
                let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let nrm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                dir = g.into_iter().map(|v| v / nrm).collect();
            }
            dir.into_iter().map(|v| v * separation).collect()
        })
        .collect();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        for m in &means[c] {
            let z: f64 = rng.sample(StandardNormal);
            data.push(m + z);
        }
        labels.push(c + 1);
    }
    Dataset::new(Matrix::from_parts(n, d, data), labels, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_norm;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn validation() {
        let x = Matrix::zeros(2, 3);
        assert!(Dataset::new(x.clone(), vec![1], 2).is_err());
        assert!(Dataset::new(x.clone(), vec![1, 3], 2).is_err());
        assert!(Dataset::new(x.clone(), vec![0, 1], 2).is_err());
        assert!(Dataset::new(Matrix::zeros(0, 3), vec![], 2).is_err());
        assert!(Dataset::new(x, vec![1, 2], 2).is_ok());
    }

    #[test]
    fn data_norm_is_frobenius() {
        let x = Matrix::random_uniform(7, 5, 3);
        assert!((data_norm(&x) - frobenius_norm(&x).unwrap()).abs() <= 1e-14);
    }

    #[test]
    fn random_labels_are_seeded_and_uniform() {
        let ds = synth_blobs(10_000, 2, 10, 1.0, 0).unwrap();
        let a = randomize_labels(&ds, 5);
        assert_eq!(a, randomize_labels(&ds, 5));
        assert_eq!(a.features(), ds.features());
        let mut counts = [0f64; 10];
        for &y in a.labels() {
            counts[y - 1] += 1.0;
        }
        let expected = 1000.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
        assert!(p > 0.001, "chi2 {chi2} p {p}");

        let one = synth_blobs(5, 2, 1, 1.0, 0).unwrap();
        assert_eq!(randomize_labels(&one, 3).labels(), one.labels());
    }

    #[test]
    fn gaussian_inputs_match_the_mean() {
        // 100k rows drawn from the moments of a small skewed sample
        let base = synth_blobs(50, 3, 2, 4.0, 1).unwrap();
        let idx: Vec<usize> = (0..100_000).map(|i| i % 50).collect();
        let big = base.subset(&idx).unwrap();
        let out = randomize_inputs_gaussian(&big, 7).unwrap();
        let (mu, cov) = mean_and_covariance(base.features());
        let (mu_hat, _) = mean_and_covariance(out.features());
        let n = 100_000f64;
        for j in 0..3 {
            let sigma = cov.get(j, j).sqrt();
            assert!(
                (mu_hat[j] - mu[j]).abs() <= 3.0 * sigma / n.sqrt(),
                "coordinate {j}: {} vs {}",
                mu_hat[j],
                mu[j]
            );
        }
        assert_eq!(out.labels(), big.labels());
    }

    #[test]
    fn gaussian_inputs_are_seeded_and_reject_single_example() {
        let ds = synth_blobs(20, 4, 2, 1.0, 2).unwrap();
        assert_eq!(
            randomize_inputs_gaussian(&ds, 1).unwrap(),
            randomize_inputs_gaussian(&ds, 1).unwrap()
        );
        let one = ds.subset(&[0]).unwrap();
        assert!(matches!(
            randomize_inputs_gaussian(&one, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn shrinkage_makes_rank_deficient_covariance_factorable() {
        // third coordinate is constant, so the covariance is singular
        let x = Matrix::from_fn(30, 3, |i, j| if j == 2 { 0.5 } else { (i * (j + 1)) as f64 % 7.0 });
        let ds = Dataset::new(x, vec![1; 30], 1).unwrap();
        assert!(randomize_inputs_gaussian(&ds, 3).is_ok());
    }

    #[test]
    fn blobs_are_balanced_and_seeded() {
        let ds = synth_blobs(9, 2, 3, 5.0, 1).unwrap();
        assert_eq!(ds.labels(), &[1, 2, 3, 1, 2, 3, 1, 2, 3]);
        assert_eq!(ds, synth_blobs(9, 2, 3, 5.0, 1).unwrap());
        assert!(synth_blobs(2, 2, 3, 1.0, 1).is_err());
    }

    #[test]
    fn zero_separation_blobs_share_a_distribution() {
        let ds = synth_blobs(20_000, 2, 2, 0.0, 4).unwrap();
        let mut sums = [[0.0; 2]; 2];
        for (r, &y) in ds.features().iter_rows().zip(ds.labels()) {
            for j in 0..2 {
                sums[y - 1][j] += r[j];
            }
        }
        for s in sums {
            for v in s {
                assert!((v / 10_000.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn export_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth_blobs(12, 3, 4, 2.0, 9).unwrap();
        let (f, l) = (dir.path().join("x.mat"), dir.path().join("y.lbl"));
        export_dataset(&ds, &f, &l).unwrap();
        assert_eq!(load_dataset(&f, &l).unwrap(), ds);
    }
}
