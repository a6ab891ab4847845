//! Dense feedforward networks `x ↦ σ_L(A_L σ_{L-1}(… σ_1(A_1 x) …))`.
//!
//! Layers carry no biases. Each layer also stores a reference matrix `M_i`
//! of the same shape as its weight; the complexity measures charge the
//! distance `A_i - M_i`.

pub mod manifest;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, Exponent, Matrix};

/// Max-pooling over explicit index groups.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxPool {
    groups: Vec<Vec<usize>>,
    input_dim: usize,
    multiplicity: usize,
}

impl MaxPool {
    /// Groups must be nonempty, use indices below `input_dim`, and together
    /// cover every input coordinate.
    pub fn new(groups: Vec<Vec<usize>>, input_dim: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::param("max-pool needs at least one group"));
        }
        let mut counts = vec![0usize; input_dim];
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::param(format!("max-pool group {g} is empty")));
            }
            let mut seen = group.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != group.len() {
                return Err(Error::param(format!("max-pool group {g} repeats an index")));
            }
            for &j in group {
                if j >= input_dim {
                    return Err(Error::dim(format!(
                        "max-pool group {g} uses index {j} but the layer has {input_dim} outputs"
                    )));
                }
                counts[j] += 1;
            }
        }
        if let Some(j) = counts.iter().position(|&c| c == 0) {
            return Err(Error::dim(format!("coordinate {j} is not covered by any max-pool group")));
        }
        let multiplicity = counts.into_iter().max().unwrap_or(1);
        Ok(Self {
            groups,
            input_dim,
            multiplicity,
        })
    }

    /// Contiguous non-overlapping windows of `size` (the last one may be short).
    pub fn partition(input_dim: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::param("window size must be positive"));
        }
        let groups = (0..input_dim)
            .step_by(size)
            .map(|s| (s..(s + size).min(input_dim)).collect())
            .collect();
        Self::new(groups, input_dim)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Largest number of groups sharing one coordinate.
    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (o, group) in out.iter_mut().zip(&self.groups) {
            *o = group
                .iter()
                .map(|&j| z[j])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
}

/// Fixed coordinate nonlinearity applied after each linear map.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    Relu,
    Identity,
    MaxPool(MaxPool),
}

impl Nonlinearity {
    /// Lipschitz constant with respect to `l_p`: 1 for ReLU and identity,
    /// `m^{1/p}` for max-pooling whose coordinates are shared by at most `m` groups.
    pub fn lipschitz(&self, p: Exponent) -> f64 {
        match self {
            Nonlinearity::Relu | Nonlinearity::Identity => 1.0,
            Nonlinearity::MaxPool(mp) => (mp.multiplicity as f64).powf(p.reciprocal()),
        }
    }

    /// Output dimension given the dimension of the pre-activation.
    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            Nonlinearity::MaxPool(mp) => mp.groups.len(),
            _ => input_dim,
        }
    }

    /// Applies the map to one pre-activation vector.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim(z.len())];
        self.apply_into(z, &mut out);
        out
    }

    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Nonlinearity::Relu => {
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = v.max(0.0);
                }
            }
            Nonlinearity::Identity => out.copy_from_slice(z),
            Nonlinearity::MaxPool(mp) => mp.apply(z, out),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Relu => "relu",
            Nonlinearity::Identity => "identity",
            Nonlinearity::MaxPool(_) => "maxpool",
        }
    }
}

/// Lipschitz constant of `nl` with respect to `l_p`, for `p >= 1` (infinity allowed).
pub fn lipschitz_constant(nl: &Nonlinearity, p: f64) -> Result<f64> {
    Ok(nl.lipschitz(Exponent::new(p)?))
}

/// One layer: weight `A_i` (`d_i x d_{i-1}`), reference `M_i`, nonlinearity `σ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    weight: Matrix,
    reference: Matrix,
    nonlinearity: Nonlinearity,
}

impl Layer {
    pub fn new(weight: Matrix, reference: Matrix, nonlinearity: Nonlinearity) -> Result<Self> {
        if weight.is_empty() {
            return Err(Error::dim("layer weight is empty"));
        }
        if reference.shape() != weight.shape() {
            return Err(Error::dim(format!(
                "reference shape {:?} differs from weight shape {:?}",
                reference.shape(),
                weight.shape()
            )));
        }
        if let Nonlinearity::MaxPool(mp) = &nonlinearity {
            if mp.input_dim != weight.rows() {
                return Err(Error::dim(format!(
                    "max-pool expects {} inputs but the weight has {} rows",
                    mp.input_dim,
                    weight.rows()
                )));
            }
        }
        Ok(Self {
            weight,
            reference,
            nonlinearity,
        })
    }

    /// Layer with the all-zero reference matrix.
    pub fn with_zero_reference(weight: Matrix, nonlinearity: Nonlinearity) -> Result<Self> {
        let reference = Matrix::zeros(weight.rows(), weight.cols());
        Self::new(weight, reference, nonlinearity)
    }

    /// Layer referenced against the identity; the weight must be square.
    pub fn with_identity_reference(weight: Matrix, nonlinearity: Nonlinearity) -> Result<Self> {
        if weight.rows() != weight.cols() {
            return Err(Error::dim(format!(
                "identity reference needs a square weight, got {:?}",
                weight.shape()
            )));
        }
        let reference = Matrix::identity(weight.rows());
        Self::new(weight, reference, nonlinearity)
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub(crate) fn weight_mut(&mut self) -> &mut Matrix {
        &mut self.weight
    }

    pub fn reference(&self) -> &Matrix {
        &self.reference
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.nonlinearity.output_dim(self.weight.rows())
    }

    /// `σ(X A^T)` with examples as rows. Rows are processed independently, so
    /// the result does not depend on the worker count.
    fn apply_rows(&self, x: &Matrix) -> Matrix {
        let out_dim = self.output_dim();
        let pre_dim = self.weight.rows();
        let mut out = vec![0.0; x.rows() * out_dim];
        if out_dim == 0 {
            return Matrix::from_parts(x.rows(), 0, out);
        }
        out.par_chunks_mut(out_dim)
            .enumerate()
            .for_each_init(
                || vec![0.0; pre_dim],
                |pre, (i, o)| {
                    let xi = x.row(i);
                    for (p, w) in pre.iter_mut().zip(self.weight.iter_rows()) {
                        *p = dot(w, xi);
                    }
                    self.nonlinearity.apply_into(pre, o);
                },
            );
        Matrix::from_parts(x.rows(), out_dim, out)
    }
}

/// Ordered stack of layers with chained dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("a network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::dim(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i + 1,
                    pair[0].output_dim(),
                    i + 2,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").output_dim()
    }

    /// `W`: the largest of the input dimension and every layer dimension.
    pub fn width(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.rows(), l.output_dim()])
            .fold(self.input_dim(), usize::max)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "data has {} columns but the network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Network outputs for every row of `x`.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut cur = self.layers[0].apply_rows(x);
        for layer in &self.layers[1..] {
            cur = layer.apply_rows(&cur);
        }
        Ok(cur)
    }

    /// Images `(X_0, …, X_L)` of the data after each layer, examples as rows.
    pub fn forward_images(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        self.check_input(x)?;
        let mut images = Vec::with_capacity(self.layers.len() + 1);
        images.push(x.clone());
        for layer in &self.layers {
            let next = layer.apply_rows(images.last().expect("nonempty"));
            images.push(next);
        }
        Ok(images)
    }

    /// Copy of the network with layer `j` (0-based) weight and reference both scaled by `c`.
    pub fn with_scaled_layer(&self, j: usize, c: f64) -> Result<Network> {
        if j >= self.layers.len() {
            return Err(Error::param(format!("layer index {j} out of range")));
        }
        let mut out = self.clone();
        let layer = &mut out.layers[j];
        layer.weight = layer.weight.scaled(c);
        layer.reference = layer.reference.scaled(c);
        Ok(out)
    }
}
