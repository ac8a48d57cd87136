//! Sequence-derived features: the per-residue scale registry, global
//! physicochemical descriptors and the RBD-weighted per-residue encoding.

mod descriptors;
mod encoding;
mod registry;

pub use descriptors::{
    amino_acid_composition, global_descriptors, hbond_potential, mean_hydrophobicity,
    net_charge, ss_fractions, weighted_polarity, GlobalDescriptors, GLOBAL_WIDTH,
    PHYSIOLOGICAL_PH,
};
pub use encoding::{
    rbd_weight, residue_encoding, ResidueEncoding, RBD_END, RBD_START, RBD_WEIGHT,
    RESIDUE_WIDTH,
};
pub use registry::{residue_index, ResidueSet, ScalesRegistry, RESIDUES};
