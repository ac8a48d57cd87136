//! Central-difference gradient checks in `f64`, for each layer type in
//! isolation and for a composed model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arch::{Activation, Architecture};
use super::layers::{self, DropoutMode};
use super::model::{Mode, Model};
use super::Tensor;
use crate::error::Result;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor; keeps near-zero gradient pairs from dominating.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Largest relative error between `analytic` and the central difference of
/// `f` over every element of `x`.
fn compare(x: &Tensor<f64>, analytic: &[f64], f: impl Fn(&Tensor<f64>) -> f64) -> f64 {
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + STEP;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - STEP;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        worst = worst.max(rel_error(a, (plus - minus) / (2.0 * STEP)));
    }
    worst
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| rng.random_range(-1.0..1.0))
}

fn project(y: &Tensor<f64>, coeff: &Tensor<f64>) -> f64 {
    y.data().iter().zip(coeff.data()).map(|(a, b)| a * b).sum()
}

fn result(name: &str, parts: &[(usize, f64)]) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        checked: parts.iter().map(|p| p.0).sum(),
        max_rel_error: parts.iter().map(|p| p.1).fold(0.0, f64::max),
    }
}

pub fn check_conv1d(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, w, b) = (random(&[12, 3], &mut rng), random(&[4, 3, 5], &mut rng), random(&[5], &mut rng));
    let coeff = random(&[9, 5], &mut rng);
    let (dx, dw, db) = layers::conv1d_backward(&x, &w, &coeff)?;
    let run = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
        layers::conv1d_forward(x, w, b).map_or(f64::NAN, |y| project(&y, &coeff))
    };
    Ok(result(
        "conv1d",
        &[
            (x.len(), compare(&x, dx.data(), |v| run(v, &w, &b))),
            (w.len(), compare(&w, dw.data(), |v| run(&x, v, &b))),
            (b.len(), compare(&b, db.data(), |v| run(&x, &w, v))),
        ],
    ))
}

pub fn check_maxpool1d(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random(&[13, 4], &mut rng);
    let (y, argmax) = layers::maxpool1d_forward(&x, 2)?;
    let coeff = random(y.shape(), &mut rng);
    let dx = layers::maxpool1d_backward(&coeff, &argmax, x.shape())?;
    let run = |v: &Tensor<f64>| layers::maxpool1d_forward(v, 2).map_or(f64::NAN, |(y, _)| project(&y, &coeff));
    Ok(result("maxpool1d", &[(x.len(), compare(&x, dx.data(), run))]))
}

pub fn check_dropout(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random(&[10, 3], &mut rng);
    let coeff = random(&[10, 3], &mut rng);
    let mask_seed = rng.random::<u64>();
    let run = |v: &Tensor<f64>| {
        let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
        layers::dropout(v, 0.3, DropoutMode::Train(&mut r)).map_or(f64::NAN, |(y, _)| project(&y, &coeff))
    };
    let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
    let (_, mask) = layers::dropout(&x, 0.3, DropoutMode::Train(&mut r))?;
    let mask = mask.unwrap_or_default();
    let dx: Vec<f64> = coeff.data().iter().zip(&mask).map(|(c, m)| c * m).collect();
    Ok(result("dropout", &[(x.len(), compare(&x, &dx, run))]))
}

pub fn check_lstm(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (steps, channels, units) = (6, 3, 4);
    let x = random(&[steps, channels], &mut rng);
    let k = random(&[channels, 4 * units], &mut rng);
    let r = random(&[units, 4 * units], &mut rng);
    let b = random(&[4 * units], &mut rng);
    let coeff = random(&[units], &mut rng);
    let (_, cache) = layers::lstm_forward(&x, &k, &r, &b)?;
    let (dx, dk, dr, db) = layers::lstm_backward(&x, &k, &r, &cache, &coeff)?;
    let run = |x: &Tensor<f64>, k: &Tensor<f64>, r: &Tensor<f64>, b: &Tensor<f64>| {
        layers::lstm_forward(x, k, r, b).map_or(f64::NAN, |(h, _)| project(&h, &coeff))
    };
    Ok(result(
        "lstm",
        &[
            (x.len(), compare(&x, dx.data(), |v| run(v, &k, &r, &b))),
            (k.len(), compare(&k, dk.data(), |v| run(&x, v, &r, &b))),
            (r.len(), compare(&r, dr.data(), |v| run(&x, &k, v, &b))),
            (b.len(), compare(&b, db.data(), |v| run(&x, &k, &r, v))),
        ],
    ))
}

pub fn check_dense(seed: u64, activation: Activation) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, w, b) = (random(&[7], &mut rng), random(&[7, 4], &mut rng), random(&[4], &mut rng));
    let coeff = random(&[4], &mut rng);
    let y = layers::dense_forward(&x, &w, &b, activation)?;
    let (dx, dw, db) = layers::dense_backward(&x, &w, &y, activation, &coeff)?;
    let run = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
        layers::dense_forward(x, w, b, activation).map_or(f64::NAN, |y| project(&y, &coeff))
    };
    Ok(result(
        &format!("dense_{}", activation.as_str()),
        &[
            (x.len(), compare(&x, dx.data(), |v| run(v, &w, &b))),
            (w.len(), compare(&w, dw.data(), |v| run(&x, v, &b))),
            (b.len(), compare(&b, db.data(), |v| run(&x, &w, v))),
        ],
    ))
}

/// Checks the full loss (cross-entropy plus `lambda` times the L2 penalty)
/// of `model` in training mode. Every evaluation reseeds the dropout rng, so
/// all perturbed passes share one set of masks.
pub fn check_model(model: &Model<f64>, input: &[f64], label: u8, lambda: f64, dropout_seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let (_, grads) = model.loss_and_gradients(input, label, lambda, Mode::Train(&mut rng))?;
    let loss_of = |m: &Model<f64>| {
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        m.forward(input, Mode::Train(&mut rng))
            .map_or(f64::NAN, |t| super::bce(t.output(), label) + lambda * m.l2_penalty())
    };
    let mut parts = Vec::new();
    let mut probe = model.clone();
    for (ti, g) in grads.tensors.iter().enumerate() {
        let mut worst = 0.0f64;
        for (i, &a) in g.data().iter().enumerate() {
            let orig = probe.params_mut()[ti].data()[i];
            probe.params_mut()[ti].data_mut()[i] = orig + STEP;
            let plus = loss_of(&probe);
            probe.params_mut()[ti].data_mut()[i] = orig - STEP;
            let minus = loss_of(&probe);
            probe.params_mut()[ti].data_mut()[i] = orig;
            worst = worst.max(rel_error(a, (plus - minus) / (2.0 * STEP)));
        }
        parts.push((g.len(), worst));
    }
    Ok(result(&format!("model(input={})", model.input_length()), &parts))
}

/// Every layer check plus the composed tiny model, with a fixed seed.
pub fn run_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = vec![
        check_conv1d(seed)?,
        check_maxpool1d(seed)?,
        check_dropout(seed)?,
        check_lstm(seed)?,
    ];
    for act in [Activation::Relu, Activation::Sigmoid, Activation::Linear] {
        out.push(check_dense(seed, act)?);
    }
    let model = Model::<f64>::new(Architecture::gradcheck_tiny(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let input: Vec<f64> = (0..model.input_length()).map(|_| rng.random_range(-1.0..1.0)).collect();
    for label in [0u8, 1] {
        let mut r = check_model(&model, &input, label, 0.001, seed.wrapping_add(u64::from(label)))?;
        r.name = format!("{} label={label}", r.name);
        out.push(r);
    }
    Ok(out)
}
