//! Seeded two-class fixtures in the feature-vector layout, used to exercise
//! training and evaluation when the real cohort is unavailable.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::FeatureVector;
use crate::seqfeatures::GLOBAL_WIDTH;

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub n: usize,
    pub length: usize,
    /// Fraction of records with label 1.
    pub positive_fraction: f64,
    /// Positions carrying the class signal.
    pub signal: std::ops::Range<usize>,
    /// Class means are `+shift` (label 1) and `-shift` (label 0) on the
    /// signal positions, 0 elsewhere.
    pub shift: f64,
    pub noise: f64,
}

impl BlobSpec {
    /// Signal on every position after the global block.
    pub fn separable(n: usize, length: usize) -> Self {
        BlobSpec {
            n,
            length,
            positive_fraction: 0.5,
            signal: GLOBAL_WIDTH.min(length)..length,
            shift: 0.5,
            noise: 1.0,
        }
    }
}

pub fn blobs(spec: &BlobSpec, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise).expect("finite noise");
    let n_pos = (spec.n as f64 * spec.positive_fraction).round() as usize;
    let mut labels: Vec<u8> = (0..spec.n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let mean = if label == 1 { spec.shift } else { -spec.shift };
            let values = (0..spec.length)
                .map(|j| {
                    let center = if spec.signal.contains(&j) { mean } else { 0.0 };
                    (center + noise.sample(&mut rng)) as f32
                })
                .collect();
            FeatureVector {
                id: format!("blob-{i}"),
                values,
                label,
            }
        })
        .collect()
}

/// Label-only cohort with the given class counts (values are the row index).
pub fn labelled_cohort(severe: usize, mild: usize) -> Vec<FeatureVector> {
    (0..severe + mild)
        .map(|i| FeatureVector {
            id: format!("rec-{i}"),
            values: vec![i as f32],
            label: u8::from(i >= severe),
        })
        .collect()
}
