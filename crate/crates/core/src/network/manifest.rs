//! JSON network manifests.
//!
//! ```json
//! {
//!   "layers": [
//!     { "weight": "layer1.mat", "reference": "zero",
//!       "nonlinearity": { "kind": "relu" } },
//!     { "weight": "layer2.mat", "reference": "identity",
//!       "nonlinearity": { "kind": "maxpool", "groups": [[0, 1], [2, 3]] } }
//!   ]
//! }
//! ```
//!
//! `weight` and `reference` paths are resolved relative to the manifest file;
//! `reference` may also be the literal `"zero"` or `"identity"`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Layer, MaxPool, Network, Nonlinearity};
use crate::error::{Error, Result};
use crate::linalg::{mat1, Matrix};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub layers: Vec<LayerEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LayerEntry {
    pub weight: String,
    #[serde(default = "zero_reference")]
    pub reference: String,
    pub nonlinearity: NonlinearitySpec,
}

fn zero_reference() -> String {
    "zero".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NonlinearitySpec {
    Relu,
    Identity,
    Maxpool { groups: Vec<Vec<usize>> },
}

impl Manifest {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: format!("invalid network manifest: {e}"),
        })
    }
}

/// Reads a manifest and every weight and reference it names.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let manifest = Manifest::from_path(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for entry in &manifest.layers {
        let weight = mat1::read(base.join(&entry.weight))?;
        let reference = match entry.reference.as_str() {
            "zero" => Matrix::zeros(weight.rows(), weight.cols()),
            "identity" => {
                if weight.rows() != weight.cols() {
                    return Err(Error::dim(format!(
                        "{}: identity reference needs a square weight, got {:?}",
                        entry.weight,
                        weight.shape()
                    )));
                }
                Matrix::identity(weight.rows())
            }
            other => mat1::read(base.join(other))?,
        };
        let nonlinearity = match &entry.nonlinearity {
            NonlinearitySpec::Relu => Nonlinearity::Relu,
            NonlinearitySpec::Identity => Nonlinearity::Identity,
            NonlinearitySpec::Maxpool { groups } => {
                Nonlinearity::MaxPool(MaxPool::new(groups.clone(), weight.rows())?)
            }
        };
        layers.push(Layer::new(weight, reference, nonlinearity)?);
    }
    Network::new(layers)
}

/// Writes `manifest.json` plus one MAT1 file per weight (and per nonzero,
/// non-identity reference) into `dir`. Returns the manifest path.
pub fn save_network(net: &Network, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(net.depth());
    for (i, layer) in net.layers().iter().enumerate() {
        let weight = format!("layer{}-weight.mat", i + 1);
        mat1::write(dir.join(&weight), layer.weight())?;
        let r = layer.reference();
        let reference = if r.data().iter().all(|&v| v == 0.0) {
            "zero".to_string()
        } else if r.rows() == r.cols() && *r == Matrix::identity(r.rows()) {
            "identity".to_string()
        } else {
            let name = format!("layer{}-reference.mat", i + 1);
            mat1::write(dir.join(&name), r)?;
            name
        };
        let nonlinearity = match layer.nonlinearity() {
            Nonlinearity::Relu => NonlinearitySpec::Relu,
            Nonlinearity::Identity => NonlinearitySpec::Identity,
            Nonlinearity::MaxPool(mp) => NonlinearitySpec::Maxpool {
                groups: mp.groups().to_vec(),
            },
        };
        entries.push(LayerEntry {
            weight,
            reference,
            nonlinearity,
        });
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&Manifest { layers: entries }).expect("manifest");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_then_load_reproduces_network() {
        let dir = tempfile::tempdir().unwrap();
        let l1 = Layer::with_identity_reference(Matrix::random_uniform(4, 4, 1), Nonlinearity::Relu)
            .unwrap();
        let l2 = Layer::new(
            Matrix::random_uniform(4, 4, 2),
            Matrix::random_uniform(4, 4, 3),
            Nonlinearity::MaxPool(MaxPool::partition(4, 2).unwrap()),
        )
        .unwrap();
        let l3 = Layer::with_zero_reference(Matrix::random_uniform(3, 2, 4), Nonlinearity::Identity)
            .unwrap();
        let net = Network::new(vec![l1, l2, l3]).unwrap();
        let path = save_network(&net, dir.path()).unwrap();
        assert_eq!(load_network(&path).unwrap(), net);
    }

    #[test]
    fn manifest_json_shape() {
        let m: Manifest = serde_json::from_str(
            r#"{"layers":[{"weight":"w.mat","nonlinearity":{"kind":"maxpool","groups":[[0,1]]}}]}"#,
        )
        .unwrap();
        assert_eq!(m.layers[0].reference, "zero");
        assert_eq!(
            m.layers[0].nonlinearity,
            NonlinearitySpec::Maxpool {
                groups: vec![vec![0, 1]]
            }
        );
    }

    #[test]
    fn missing_weight_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        fs::write(
            &p,
            r#"{"layers":[{"weight":"nope.mat","nonlinearity":{"kind":"relu"}}]}"#,
        )
        .unwrap();
        let err = load_network(&p).unwrap_err();
        assert!(err.to_string().contains("nope.mat"));
        assert_eq!(err.exit_code(), 2);
    }
}
