//! Spike-protein severity classification toolkit.
//!
//! The crate turns SARS-CoV-2 spike-protein sequences and patient metadata into
//! fixed-length numeric vectors and trains a hybrid convolutional/recurrent
//! binary classifier on them. Pipeline stages map onto modules:
//!
//! - [`ingest`]: FASTA and metadata parsing, clinical-status normalization,
//!   cohort filtering and descriptive statistics.
//! - [`seqfeatures`]: per-residue scale registry, global descriptors and the
//!   RBD-weighted per-residue encoding.
//! - [`dataset`]: covariate one-hot codebook, vector assembly, stratified
//!   split, SMOTE and the binary matrix format.
//! - [`nn`]: tensors, layers with hand-written backward passes, Adam,
//!   parameter accounting and checkpoints.
//! - [`training`]: training loop, cross-validation and random search.
//! - [`evaluation`]: confusion matrix, averaged metrics and ROC-AUC.
//! - [`config`]: flat key-value run configuration.

pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod nn;
pub mod seqfeatures;
pub mod training;

pub use error::{Error, Result};
