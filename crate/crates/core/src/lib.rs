//! Spectrally-normalized margin diagnostics and covering-number bounds for
//! feedforward networks.

pub mod cli;
pub mod complexity;
pub mod covering;
pub mod data;
pub mod error;
pub mod linalg;
pub mod lowerbound;
pub mod margins;
pub mod network;
pub mod output;
pub mod training;

pub use error::{Error, Result};
