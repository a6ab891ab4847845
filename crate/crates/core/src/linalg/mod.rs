//! Dense row-major matrices and the matrix norms used by the bounds.
//!
//! Every norm here is computed in `f64`. The spectral norm is obtained by
//! power iteration on the smaller Gram matrix; [`jacobi`] provides an
//! independent one-sided Jacobi SVD that the test suites use as an oracle.

pub mod jacobi;
pub mod mat1;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(6) {
            write!(f, "{:?}", &self.row(r)[..self.cols.min(6)])?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major data. Rejects a length mismatch and any
    /// non-finite entry.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "data length {} does not equal {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite entry {} at position {pos}",
                data[pos]
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has length {} but row 0 has length {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Entries drawn iid uniform on `[-1, 1]` from a seeded generator.
    pub fn random_uniform(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
    }

    /// Trusted constructor for internal kernels that already guarantee the shape.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix::from_parts(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Matrix::from_parts(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(Matrix::from_parts(self.rows, other.cols, out))
    }

    /// `self * other^T`, i.e. every row of `self` dotted with every row of `other`.
    pub fn matmul_transpose(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::dim(format!(
                "cannot multiply {:?} by transpose of {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Vec::with_capacity(self.rows * other.rows);
        for i in 0..self.rows {
            let x = self.row(i);
            out.extend(other.iter_rows().map(|w| dot(x, w)));
        }
        Ok(Matrix::from_parts(self.rows, other.rows, out))
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dimension");
        self.iter_rows().map(|r| dot(r, v)).collect()
    }

    /// `self^T * v`.
    pub fn tmatvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tmatvec dimension");
        let mut out = vec![0.0; self.cols];
        for (r, &c) in self.iter_rows().zip(v) {
            axpy(c, r, &mut out);
        }
        out
    }

    /// Gram matrix of the smaller side: `A A^T` when rows <= cols, else `A^T A`.
    fn small_gram(&self) -> Matrix {
        if self.rows <= self.cols {
            self.matmul_transpose(self).expect("gram shape")
        } else {
            self.transpose().matmul_transpose(&self.transpose()).expect("gram shape")
        }
    }
}

/// Fixed-order dot product.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `y += a * x`.
#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// A norm exponent in `[1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// Validates a finite exponent `p >= 1`. `f64::INFINITY` maps to [`Exponent::Infinity`].
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::param(format!("norm exponent must be >= 1, got {p}")));
        }
        Ok(if p.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Finite(p)
        })
    }

    /// Hölder conjugate `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    /// `1/p`, zero for infinity.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Infinity => 0.0,
            Exponent::Finite(p) => 1.0 / p,
        }
    }

    /// `l_p` norm of a vector.
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            Exponent::Infinity => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            Exponent::Finite(p) if p == 1.0 => v.iter().map(|x| x.abs()).sum(),
            Exponent::Finite(p) if p == 2.0 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Exponent::Finite(p) => v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p),
        }
    }
}

fn require_nonempty(a: &Matrix) -> Result<()> {
    if a.is_empty() {
        return Err(Error::dim(format!("empty matrix {:?}", a.shape())));
    }
    Ok(())
}

/// Column-wise group norm `‖(‖A_{:,1}‖_p, …, ‖A_{:,m}‖_p)‖_q`.
pub fn group_norm(a: &Matrix, p: Exponent, q: Exponent) -> Result<f64> {
    require_nonempty(a)?;
    for e in [p, q] {
        if let Exponent::Finite(v) = e {
            if v.is_nan() || v < 1.0 {
                return Err(Error::param(format!("norm exponent must be >= 1, got {v}")));
            }
        }
    }
    let col_norms: Vec<f64> = (0..a.cols()).map(|j| p.norm(&a.col(j))).collect();
    Ok(q.norm(&col_norms))
}

/// `‖A^T‖_{2,1}`: the sum of the Euclidean norms of the rows of `A`.
pub fn norm_2_1_of_transpose(a: &Matrix) -> Result<f64> {
    require_nonempty(a)?;
    Ok(a.iter_rows()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .sum())
}

/// Entrywise Euclidean (Frobenius) norm.
pub fn frobenius_norm(a: &Matrix) -> Result<f64> {
    require_nonempty(a)?;
    Ok(a.data().iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Entrywise `l_p` norm of all matrix entries.
pub fn entrywise_norm(a: &Matrix, p: Exponent) -> f64 {
    p.norm(a.data())
}

/// Lower-triangular Cholesky factor `L` with `L L^T = a`. Fails with
/// [`Error::Numeric`] when `a` is not numerically positive definite.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::dim(format!("cholesky needs a square matrix, got {:?}", a.shape())));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j)[..j].to_vec();
        let d = a.get(j, j) - dot(&lj, &lj);
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite (pivot {j} = {d})"
            )));
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in j + 1..n {
            let s = a.get(i, j) - dot(&l.row(i)[..j], &lj);
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

const POWER_MAX_ITERS: usize = 5000;
const POWER_REL_TOL: f64 = 1e-12;
const POWER_SEEDS: [u64; 2] = [0x5eed_0001, 0x5eed_0002];

/// Largest singular value, by power iteration on the smaller Gram matrix.
///
/// Stops when the Rayleigh quotient changes by less than `1e-12` relative;
/// after 5000 iterations it restarts once from another seeded start vector
/// and reports [`Error::Numeric`] if that also fails.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    require_nonempty(a)?;
    let scale = a.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    // unit max entry keeps the Gram matrix clear of overflow and underflow
    let gram = if scale == 1.0 { a.small_gram() } else { a.scaled(1.0 / scale).small_gram() };
    for seed in POWER_SEEDS {
        if let Some(lambda) = power_iterate(&gram, seed) {
            return Ok(lambda.max(0.0).sqrt() * scale);
        }
    }
    Err(Error::Numeric(format!(
        "power iteration did not converge on {:?} matrix",
        a.shape()
    )))
}

fn power_iterate(gram: &Matrix, seed: u64) -> Option<f64> {
    let n = gram.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    normalize(&mut v)?;
    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        let mut w = gram.matvec(&v);
        let theta = dot(&v, &w);
        if normalize(&mut w).is_none() {
            // start vector fell in the null space
            return None;
        }
        v = w;
        if (theta - prev).abs() <= POWER_REL_TOL * theta.abs() {
            let gv = gram.matvec(&v);
            return Some(dot(&v, &gv).max(theta));
        }
        prev = theta;
    }
    None
}

fn normalize(v: &mut [f64]) -> Option<f64> {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm == 0.0 || !nrm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nrm);
    Some(nrm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn spectral_norm_trivial_cases() {
        assert!((spectral_norm(&Matrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        let d = m(&[&[3.0, 0.0], &[0.0, -1.0]]);
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&Matrix::zeros(2, 3)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_rejects_empty() {
        assert!(matches!(
            spectral_norm(&Matrix::zeros(0, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn spectral_norm_matches_jacobi_oracle() {
        let a = Matrix::random_uniform(8, 8, 7);
        let s = spectral_norm(&a).unwrap();
        let oracle = jacobi::singular_values(&a)[0];
        assert!((s - oracle).abs() <= 1e-10 * oracle, "{s} vs {oracle}");
    }

    #[test]
    fn group_norm_examples() {
        let a = m(&[&[3.0, 0.0], &[0.0, 4.0]]);
        let two = Exponent::Finite(2.0);
        assert_eq!(group_norm(&a, two, Exponent::Finite(1.0)).unwrap(), 7.0);
        assert_eq!(group_norm(&a, two, two).unwrap(), 5.0);
        assert_eq!(
            group_norm(&a, Exponent::Finite(1.0), Exponent::Infinity).unwrap(),
            4.0
        );
    }

    #[test]
    fn group_norm_rejects_small_exponents() {
        let a = Matrix::identity(2);
        assert!(Exponent::new(0.5).is_err());
        assert!(matches!(
            group_norm(&a, Exponent::Finite(0.5), Exponent::Finite(1.0)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn two_one_norm_of_transpose() {
        assert_eq!(
            norm_2_1_of_transpose(&m(&[&[3.0, 0.0], &[0.0, 4.0]])).unwrap(),
            7.0
        );
        let v = norm_2_1_of_transpose(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-15);

        let a = Matrix::random_uniform(6, 4, 11);
        let mut oracle = 0.0;
        for i in 0..6 {
            let mut s = 0.0;
            for j in 0..4 {
                s += a.get(i, j) * a.get(i, j);
            }
            oracle += s.sqrt();
        }
        assert_eq!(norm_2_1_of_transpose(&a).unwrap(), oracle);
        assert_eq!(
            group_norm(&a.transpose(), Exponent::Finite(2.0), Exponent::Finite(1.0)).unwrap(),
            oracle
        );
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&m(&[&[3.0, 4.0]])).unwrap(), 5.0);
        assert_eq!(frobenius_norm(&Matrix::zeros(3, 3)).unwrap(), 0.0);
        let a = Matrix::random_uniform(5, 5, 3);
        let mut s = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                s += a.get(i, j).powi(2);
            }
        }
        assert!((frobenius_norm(&a).unwrap() - s.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn construction_rejects_nan_and_bad_length() {
        assert!(Matrix::new(1, 2, vec![1.0]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn conjugate_exponents() {
        assert_eq!(Exponent::Finite(2.0).conjugate(), Exponent::Finite(2.0));
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinity);
        assert_eq!(Exponent::Infinity.conjugate(), Exponent::Finite(1.0));
    }

    #[test]
    fn cholesky_reconstructs() {
        let b = Matrix::random_uniform(5, 5, 9);
        let spd = b.matmul_transpose(&b).unwrap().add(&Matrix::identity(5)).unwrap();
        let l = cholesky(&spd).unwrap();
        let back = l.matmul_transpose(&l).unwrap();
        for (x, y) in back.data().iter().zip(spd.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(matches!(
            cholesky(&Matrix::zeros(2, 2)),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn products_agree() {
        let a = Matrix::random_uniform(3, 4, 1);
        let b = Matrix::random_uniform(5, 4, 2);
        let p1 = a.matmul_transpose(&b).unwrap();
        let p2 = a.matmul(&b.transpose()).unwrap();
        for (x, y) in p1.data().iter().zip(p2.data()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
