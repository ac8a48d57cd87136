use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};
use crate::nn::{bce, Adam, Gradients, Mode, Model};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_l2: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            lambda_l2: 0.001,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if !(self.lambda_l2 >= 0.0 && self.lambda_l2.is_finite()) {
            return Err(Error::invalid(format!("lambda_l2 {} must be >= 0", self.lambda_l2)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate {} must be > 0", self.learning_rate)));
        }
        Ok(())
    }
}

pub const EPOCH_TSV_HEADER: &str = "epoch\tloss\taccuracy\tval_loss\tval_accuracy";

/// Metrics of one completed epoch. Training loss and accuracy are averaged
/// over the epoch's training-mode forward passes; the loss includes the L2
/// term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

impl EpochLog {
    pub fn tsv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
        format!(
            "{}\t{:.6}\t{:.6}\t{}\t{}",
            self.epoch,
            self.train_loss,
            self.train_accuracy,
            opt(self.val_loss),
            opt(self.val_accuracy)
        )
    }
}

fn check_width(model: &Model<f32>, vectors: &[FeatureVector], what: &str) -> Result<()> {
    let width = model.input_length();
    match vectors.iter().find(|v| v.values.len() != width) {
        Some(v) => Err(Error::Dimension(format!(
            "{what} row '{}' has {} values, model expects {width}",
            v.id,
            v.values.len()
        ))),
        None => Ok(()),
    }
}

/// Infer-mode mean loss (with L2) and accuracy at 0.5.
fn score_set(model: &Model<f32>, vectors: &[FeatureVector], lambda: f32) -> Result<(f64, f64)> {
    let outputs = vectors
        .par_iter()
        .map(|v| model.predict(&v.values).map(|p| (p, v.label)))
        .collect::<Result<Vec<_>>>()?;
    let n = outputs.len().max(1) as f64;
    let loss: f64 = outputs.iter().map(|&(p, y)| f64::from(bce(p, y))).sum::<f64>() / n;
    let correct = outputs.iter().filter(|&&(p, y)| u8::from(p >= 0.5) == y).count();
    Ok((loss + f64::from(lambda * model.l2_penalty()), correct as f64 / n))
}

/// Trains `model` in place for `config.epochs` epochs and returns one log
/// entry per epoch; `on_epoch` sees each entry as soon as it is complete.
///
/// Each batch step uses the mean per-sample cross-entropy gradient plus the
/// L2 gradient. Per-sample passes may run on several threads; their results
/// are combined in batch order, so the outcome does not depend on the thread
/// count.
pub fn train(
    model: &mut Model<f32>,
    adam: &mut Adam<f32>,
    data: &[FeatureVector],
    config: &TrainConfig,
    validation: Option<&[FeatureVector]>,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    check_width(model, data, "training")?;
    if let Some(val) = validation {
        check_width(model, val, "validation")?;
    }
    let lambda = config.lambda_l2 as f32;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut logs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let dropout_seeds: Vec<u64> = batch.iter().map(|_| rng.random()).collect();
            let model_ref = &*model;
            let results = batch
                .par_iter()
                .zip(&dropout_seeds)
                .map(|(&i, &s)| {
                    let v = &data[i];
                    let mut r = ChaCha8Rng::seed_from_u64(s);
                    let tape = model_ref.forward(&v.values, Mode::Train(&mut r))?;
                    let grads = model_ref.backward(&tape, v.label)?;
                    Ok((tape.output(), v.label, grads))
                })
                .collect::<Result<Vec<_>>>()?;

            let penalty = lambda * model.l2_penalty();
            let mut total = Gradients::zeros_like(model);
            let mut batch_loss = 0.0f64;
            for (p, y, g) in &results {
                batch_loss += f64::from(bce(*p, *y) + penalty);
                correct += usize::from(u8::from(*p >= 0.5) == *y);
                total.add_assign(g);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            loss_sum += batch_loss;
            total.scale(1.0 / batch.len() as f32);
            model.add_l2_gradient(&mut total, lambda);
            adam.step(&mut model.params_mut(), &total.tensors)?;
        }
        let (val_loss, val_accuracy) = match validation {
            Some(val) if !val.is_empty() => {
                let (l, a) = score_set(model, val, lambda)?;
                (Some(l), Some(a))
            }
            _ => (None, None),
        };
        let log = EpochLog {
            epoch,
            train_loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            val_loss,
            val_accuracy,
        };
        on_epoch(&log);
        logs.push(log);
    }
    Ok(logs)
}
