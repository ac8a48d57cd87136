//! Model-ready matrices: covariate one-hot codebook, vector assembly and
//! padding, block weighting, stratified split, SMOTE and the binary matrix
//! file format.

mod assemble;
mod codebook;
mod matrix;
mod smote;
mod split;
pub mod synthetic;

pub use assemble::{
    assemble, assemble_all, Assembled, BlockLayout, BlockWeights, FeatureSettings,
    DEFAULT_N_MODEL,
};
pub use codebook::{AgeMode, CovariateCodebook, CODEBOOK_FIELDS};
pub use matrix::{decode_matrix, encode_matrix, read_ids, read_matrix, write_ids, write_matrix, MATRIX_MAGIC};
pub use smote::{smote, DEFAULT_SMOTE_K};
pub use split::{stratified_split, DatasetSplit};

/// One model input row. `label` is 1 for Mild, 0 for Severe.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f32>,
    pub label: u8,
}

pub fn class_counts(vectors: &[FeatureVector]) -> [usize; 2] {
    let mut counts = [0; 2];
    for v in vectors {
        counts[usize::from(v.label == 1)] += 1;
    }
    counts
}
