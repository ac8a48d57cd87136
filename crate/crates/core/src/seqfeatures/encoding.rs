use super::descriptors::residue_indices;
use super::registry::ScalesRegistry;
use crate::error::Result;

/// Columns per residue row.
pub const RESIDUE_WIDTH: usize = 10;
/// Receptor-binding domain, 1-based inclusive positions.
pub const RBD_START: usize = 319;
pub const RBD_END: usize = 541;
pub const RBD_WEIGHT: f64 = 5.0;

/// Weight of the 1-based `position`.
pub fn rbd_weight(position: usize) -> f64 {
    if (RBD_START..=RBD_END).contains(&position) {
        RBD_WEIGHT
    } else {
        1.0
    }
}

/// Per-residue rows, already multiplied by their RBD weight. Columns:
/// `[polarity, pI, hydrophobicity, polar, charged, aromatic, aliphatic,
/// helix, strand, coil]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueEncoding {
    pub rows: Vec<[f64; RESIDUE_WIDTH]>,
    pub rbd_weights: Vec<f64>,
}

impl ResidueEncoding {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row-major flattening.
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}

/// Unweighted row for the residue at alphabet index `i`. The structure
/// one-hot takes helix over strand over coil; residues outside every
/// structure set fall back to coil.
pub(crate) fn residue_row(registry: &ScalesRegistry, i: usize) -> [f64; RESIDUE_WIDTH] {
    let sets = &registry.sets;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let structure = if sets.helix.contains(i) {
        0
    } else if sets.strand.contains(i) {
        1
    } else {
        2
    };
    let mut row = [
        registry.polarity_normalized()[i],
        registry.isoelectric_point_normalized()[i],
        registry.hydrophobicity_normalized()[i],
        flag(sets.polar.contains(i)),
        flag(sets.charged.contains(i)),
        flag(sets.aromatic.contains(i)),
        flag(sets.aliphatic.contains(i)),
        0.0,
        0.0,
        0.0,
    ];
    row[7 + structure] = 1.0;
    row
}

pub fn residue_encoding(sequence: &str, registry: &ScalesRegistry) -> Result<ResidueEncoding> {
    let idx = residue_indices(sequence)?;
    let table: Vec<[f64; RESIDUE_WIDTH]> = (0..20).map(|i| residue_row(registry, i)).collect();
    let rbd_weights: Vec<f64> = (1..=idx.len()).map(rbd_weight).collect();
    let rows = idx
        .iter()
        .zip(&rbd_weights)
        .map(|(&i, &w)| table[i].map(|v| v * w))
        .collect();
    Ok(ResidueEncoding { rows, rbd_weights })
}
