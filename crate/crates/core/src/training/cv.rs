use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fit::{train, TrainConfig};
use crate::dataset::{smote, FeatureVector, DEFAULT_SMOTE_K};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, Convention};
use crate::nn::{Adam, AdamConfig, Architecture, Model};

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub smote_k: usize,
    pub threshold: f64,
    pub train: TrainConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: DEFAULT_FOLDS,
            smote_k: DEFAULT_SMOTE_K,
            threshold: 0.5,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Weighted F1 on each held-out fold, in fold order.
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Population standard deviation of `fold_f1`.
    pub std_f1: f64,
}

/// Fold index of every vector: each class is shuffled with `seed` and dealt
/// round-robin, so fold class counts differ by at most one.
pub fn fold_assignment(vectors: &[FeatureVector], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid(format!("cross-validation needs k >= 2, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; vectors.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..vectors.len()).filter(|&i| vectors[i].label == class).collect();
        if members.len() < folds {
            return Err(Error::invalid(format!(
                "class {class} has {} records, fewer than k = {folds}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            assignment[i] = j % folds;
        }
    }
    Ok(assignment)
}

/// Stratified k-fold cross-validation of `arch`. SMOTE is applied to each
/// fold's training part only; the held-out part is scored as-is.
pub fn cross_validate(vectors: &[FeatureVector], arch: &Architecture, config: &CvConfig) -> Result<CvResult> {
    config.train.validate()?;
    let seed = config.train.seed;
    let assignment = fold_assignment(vectors, config.folds, seed)?;
    let fold_f1 = (0..config.folds)
        .into_par_iter()
        .map(|fold| {
            let (held_out, rest): (Vec<_>, Vec<_>) =
                vectors.iter().zip(&assignment).partition(|(_, &f)| f == fold);
            let held_out: Vec<FeatureVector> = held_out.into_iter().map(|(v, _)| v.clone()).collect();
            let rest: Vec<FeatureVector> = rest.into_iter().map(|(v, _)| v.clone()).collect();
            let fold_seed = seed.wrapping_add(fold as u64 + 1);
            let balanced = smote(&rest, config.smote_k, fold_seed)?;
            let mut model = Model::<f32>::new(arch.clone(), fold_seed)?;
            let mut adam = Adam::new(
                AdamConfig {
                    learning_rate: config.train.learning_rate,
                    ..AdamConfig::default()
                },
                model.params(),
            );
            let train_config = TrainConfig {
                seed: fold_seed,
                ..config.train
            };
            train(&mut model, &mut adam, &balanced, &train_config, None, |_| {})?;
            let (report, _) = evaluate(&model, &held_out, config.threshold)?;
            Ok(report.averaged(Convention::Weighted).f1)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = fold_f1.len() as f64;
    let mean_f1 = fold_f1.iter().sum::<f64>() / n;
    let std_f1 = (fold_f1.iter().map(|f| (f - mean_f1).powi(2)).sum::<f64>() / n).sqrt();
    Ok(CvResult {
        fold_f1,
        mean_f1,
        std_f1,
    })
}
