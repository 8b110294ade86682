//! Quantification of bipartite entanglement from measurement data.
//!
//! The library simulates bipartite quantum states, generates the two kinds of
//! experimentally accessible data features for them (joint outcome statistics
//! of local projective measurements, and state moments), computes
//! entanglement-measure labels (coherent information and relative-entropy
//! upper bounds), and trains neural regressors that map features to labels.
//! Local measurements may be fixed Fourier-phase bases or parameterized
//! unitaries trained jointly with the network.
//!
//! Modules:
//! - [`qcore`]: complex matrices, density matrices, spectra, entropies, moments.
//! - [`states`]: random, structured, and stratified state sampling.
//! - [`measures`]: coherent information, quantum relative entropy, and a
//!   separable-mixture upper-bound optimizer for the relative entropy of
//!   entanglement.
//! - [`measurements`]: measurement bases, correlation tensors, and analytic
//!   Jacobians of correlations with respect to measurement parameters.
//! - [`ml`]: from-scratch dense/convolutional regressors and the joint
//!   measurement-plus-network training loop.
//! - [`harness`]: configs, dataset/checkpoint files, experiment orchestration,
//!   and the study reports behind the CLI.

pub mod error;
pub mod harness;
pub mod measurements;
pub mod measures;
pub mod ml;
pub mod qcore;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
pub use qcore::{ComplexMatrix, DensityMatrix, Spectrum, Subsystem, C64};
