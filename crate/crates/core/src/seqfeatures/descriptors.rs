use super::registry::{residue_index, ScalesRegistry};
use crate::error::{Error, Result};

pub const PHYSIOLOGICAL_PH: f64 = 7.4;

/// Width of [`GlobalDescriptors::to_vec`].
pub const GLOBAL_WIDTH: usize = 29;

pub(crate) fn residue_indices(sequence: &str) -> Result<Vec<usize>> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    sequence
        .bytes()
        .enumerate()
        .map(|(pos, b)| {
            residue_index(b).ok_or_else(|| {
                Error::invalid(format!(
                    "non-canonical residue '{}' at offset {}",
                    b as char,
                    pos + 1
                ))
            })
        })
        .collect()
}

fn mean_of(sequence: &str, scale: &[f64; 20]) -> Result<f64> {
    let idx = residue_indices(sequence)?;
    Ok(idx.iter().map(|&i| scale[i]).sum::<f64>() / idx.len() as f64)
}

/// Residue frequencies in alphabetical residue order.
pub fn amino_acid_composition(sequence: &str) -> Result<[f64; 20]> {
    let idx = residue_indices(sequence)?;
    let mut counts = [0usize; 20];
    for i in &idx {
        counts[*i] += 1;
    }
    let n = idx.len() as f64;
    Ok(counts.map(|c| c as f64 / n))
}

pub fn mean_hydrophobicity(sequence: &str, registry: &ScalesRegistry) -> Result<f64> {
    mean_of(sequence, &registry.hydrophobicity)
}

/// Henderson-Hasselbalch net charge, one N- and one C-terminal group per chain.
pub fn net_charge(sequence: &str, registry: &ScalesRegistry, ph: f64) -> Result<f64> {
    if !(ph > 0.0 && ph < 14.0) {
        return Err(Error::invalid(format!("pH {ph} outside (0, 14)")));
    }
    let idx = residue_indices(sequence)?;
    let positive = |pka: f64| 1.0 / (1.0 + 10f64.powf(ph - pka));
    let negative = |pka: f64| 1.0 / (1.0 + 10f64.powf(pka - ph));
    let mut charge = positive(registry.pka_n_term) - negative(registry.pka_c_term);
    for i in idx {
        let Some(pka) = registry.pka_side_chain[i] else {
            continue;
        };
        if registry.sets.basic.contains(i) {
            charge += positive(pka);
        } else {
            charge -= negative(pka);
        }
    }
    Ok(charge)
}

/// (helix, strand, coil) membership fractions. Class sets may overlap, so the
/// fractions need not sum to one.
pub fn ss_fractions(sequence: &str, registry: &ScalesRegistry) -> Result<[f64; 3]> {
    let idx = residue_indices(sequence)?;
    let n = idx.len() as f64;
    let sets = &registry.sets;
    let frac = |set: super::ResidueSet| idx.iter().filter(|&&i| set.contains(i)).count() as f64 / n;
    Ok([frac(sets.helix), frac(sets.strand), frac(sets.coil)])
}

/// Composition-weighted Hopp-Woods value: sum of aac[r] * polarity(r).
pub fn weighted_polarity(sequence: &str, registry: &ScalesRegistry) -> Result<f64> {
    let aac = amino_acid_composition(sequence)?;
    Ok(aac.iter().zip(&registry.polarity).map(|(f, p)| f * p).sum())
}

pub fn hbond_potential(sequence: &str, registry: &ScalesRegistry) -> Result<f64> {
    let idx = residue_indices(sequence)?;
    let capable = idx
        .iter()
        .filter(|&&i| registry.sets.hbond_capable.contains(i))
        .count();
    Ok(capable as f64 / idx.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDescriptors {
    pub aac: [f64; 20],
    pub length: usize,
    pub diversity: usize,
    pub mean_hydrophobicity: f64,
    /// At pH 7.4.
    pub net_charge: f64,
    pub ss_fractions: [f64; 3],
    pub polarity: f64,
    pub hbond_potential: f64,
}

impl GlobalDescriptors {
    /// `[aac(20), length, diversity, mean_hydrophobicity, net_charge,
    /// helix, strand, coil, polarity, hbond_potential]`
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(GLOBAL_WIDTH);
        v.extend_from_slice(&self.aac);
        v.push(self.length as f64);
        v.push(self.diversity as f64);
        v.push(self.mean_hydrophobicity);
        v.push(self.net_charge);
        v.extend_from_slice(&self.ss_fractions);
        v.push(self.polarity);
        v.push(self.hbond_potential);
        v
    }
}

pub fn global_descriptors(sequence: &str, registry: &ScalesRegistry) -> Result<GlobalDescriptors> {
    let aac = amino_acid_composition(sequence)?;
    Ok(GlobalDescriptors {
        length: sequence.len(),
        diversity: aac.iter().filter(|&&f| f > 0.0).count(),
        mean_hydrophobicity: mean_hydrophobicity(sequence, registry)?,
        net_charge: net_charge(sequence, registry, PHYSIOLOGICAL_PH)?,
        ss_fractions: ss_fractions(sequence, registry)?,
        polarity: weighted_polarity(sequence, registry)?,
        hbond_potential: hbond_potential(sequence, registry)?,
        aac,
    })
}
