//! Spectral-energy analysis of weighted graphs and the HIPGNN node classifier.
//!
//! This crate is `no_std` and only needs `alloc`. It holds every algorithm:
//! the weighted graph model, synthetic generators, Laplacian spectra and
//! spectral-energy statistics, numerical checks of the weight-heterogeneity
//! results, a small reverse-mode tensor engine, the HIPGNN model, its
//! training objectives and the evaluation metrics.
//!
//! File formats, configuration and the command-line front end live in the
//! `hipgnn-lab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod theory;

pub(crate) mod math;

pub use graph::{GraphError, Label, SplitSpec, WeightedGraph};
pub use linalg::Matrix;
pub use spectral::{EnergyProfile, LaplacianKind, SpectralDecomposition};
