use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arch::{Activation, Architecture, LayerSpec};
use super::layers::{self, DropoutMode, LstmCache};
use super::loss::bce;
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Forward-pass mode. Training draws dropout masks from the supplied rng.
pub enum Mode<'a> {
    Infer,
    Train(&'a mut dyn RngCore),
}

enum Cache<T> {
    Conv { input: Tensor<T>, output: Tensor<T> },
    Pool { argmax: Vec<usize>, input_shape: Vec<usize> },
    Dropout { mask: Option<Vec<T>> },
    Lstm { input: Tensor<T>, cache: LstmCache<T> },
    Dense { input: Tensor<T>, output: Tensor<T> },
}

/// Intermediates of one forward pass, consumed by [`Model::backward`].
pub struct Tape<T> {
    caches: Vec<Cache<T>>,
    output: T,
}

impl<T> Default for Tape<T>
where
    T: Default,
{
    fn default() -> Self {
        Tape {
            caches: Vec::new(),
            output: T::default(),
        }
    }
}

impl<T: Copy> Tape<T> {
    pub fn output(&self) -> T {
        self.output
    }

    pub fn is_empty(&self) -> bool {
        self.caches.is_empty()
    }
}

/// One gradient tensor per parameter tensor, in [`Model::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &Model<T>) -> Self {
        Gradients {
            tensors: model.params().map(|p| Tensor::zeros(p.shape().to_vec())).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
                *x = *x + y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for t in &mut self.tensors {
            for x in t.data_mut() {
                *x = *x * factor;
            }
        }
    }
}

/// Parameterised layer stack with a single scalar output. Convolutions are
/// followed by ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub arch: Architecture,
    pub seed: u64,
    params: Vec<Vec<Tensor<T>>>,
}

fn is_weight_matrix(layer: &LayerSpec, index: usize) -> bool {
    match layer {
        LayerSpec::Conv1D { .. } | LayerSpec::Dense { .. } => index == 0,
        LayerSpec::Lstm { .. } => index < 2,
        _ => false,
    }
}

impl<T: Scalar> Model<T> {
    /// Fan-in scaled uniform kernels (`±sqrt(6 / fan_in)`), LSTM matrices
    /// uniform in `±1/sqrt(units)`, zero biases except a forget-gate bias of 1.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let inputs = Self::check(&arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(arch.layers.len());
        for (layer, input) in arch.layers.iter().zip(inputs) {
            let shapes = Architecture::param_shapes(layer, input);
            let tensors = match *layer {
                LayerSpec::Conv1D { .. } | LayerSpec::Dense { .. } => {
                    let fan_in = shapes[0][..shapes[0].len() - 1].iter().product::<usize>();
                    let limit = (6.0 / fan_in as f64).sqrt();
                    vec![
                        Tensor::from_fn(shapes[0].clone(), |_| T::of(rng.random_range(-limit..limit))),
                        Tensor::zeros(shapes[1].clone()),
                    ]
                }
                LayerSpec::Lstm { units } => {
                    let limit = 1.0 / (units as f64).sqrt();
                    let mut uniform = |shape: &Vec<usize>| {
                        Tensor::from_fn(shape.clone(), |_| T::of(rng.random_range(-limit..limit)))
                    };
                    let kernel = uniform(&shapes[0]);
                    let recurrent = uniform(&shapes[1]);
                    let bias = Tensor::from_fn(shapes[2].clone(), |i| {
                        if (units..2 * units).contains(&i) {
                            T::one()
                        } else {
                            T::zero()
                        }
                    });
                    vec![kernel, recurrent, bias]
                }
                LayerSpec::MaxPool1D { .. } | LayerSpec::Dropout { .. } => Vec::new(),
            };
            params.push(tensors);
        }
        Ok(Model { arch, seed, params })
    }

    /// Rebuilds a model from a flat parameter list in [`Model::params`] order.
    pub fn from_params(arch: Architecture, seed: u64, flat: Vec<Tensor<T>>) -> Result<Self> {
        let inputs = Self::check(&arch)?;
        let mut flat = flat.into_iter();
        let mut params = Vec::with_capacity(arch.layers.len());
        for (i, (layer, input)) in arch.layers.iter().zip(inputs).enumerate() {
            let mut tensors = Vec::new();
            for shape in Architecture::param_shapes(layer, input) {
                let t = flat
                    .next()
                    .ok_or_else(|| Error::Dimension(format!("missing parameters for layer {i}")))?;
                if t.shape() != shape.as_slice() {
                    return Err(Error::Dimension(format!(
                        "layer {i} ({}): expected {shape:?}, got {:?}",
                        layer.kind(),
                        t.shape()
                    )));
                }
                tensors.push(t);
            }
            params.push(tensors);
        }
        if flat.next().is_some() {
            return Err(Error::Dimension("more parameter tensors than the architecture uses".into()));
        }
        Ok(Model { arch, seed, params })
    }

    fn check(arch: &Architecture) -> Result<Vec<super::Shape>> {
        let shapes = arch.infer_shapes()?;
        if shapes.last() != Some(&super::Shape::Vector(1)) {
            return Err(Error::Shape {
                layer: arch.layers.len().saturating_sub(1),
                kind: arch.layers.last().map_or("none", |l| l.kind()).into(),
                message: "model output must be a single unit".into(),
            });
        }
        arch.input_shapes()
    }

    pub fn input_length(&self) -> usize {
        self.arch.input_length
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.params.iter().flatten()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.params.iter_mut().flatten().collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().map(Tensor::len).sum()
    }

    /// Flags each tensor of [`Model::params`]: true for weight matrices,
    /// false for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        self.arch
            .layers
            .iter()
            .zip(&self.params)
            .flat_map(|(layer, ts)| (0..ts.len()).map(move |i| is_weight_matrix(layer, i)))
            .collect()
    }

    /// Sum of squared weight-matrix entries.
    pub fn l2_penalty(&self) -> T {
        self.params()
            .zip(self.weight_mask())
            .filter(|(_, w)| *w)
            .map(|(t, _)| t.sum_of_squares())
            .sum()
    }

    /// Adds `2 * lambda * w` to the gradient of every weight matrix.
    pub fn add_l2_gradient(&self, grads: &mut Gradients<T>, lambda: T) {
        let two_lambda = lambda + lambda;
        for ((g, p), w) in grads.tensors.iter_mut().zip(self.params()).zip(self.weight_mask()) {
            if w {
                for (gv, &pv) in g.data_mut().iter_mut().zip(p.data()) {
                    *gv = *gv + two_lambda * pv;
                }
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            arch: self.arch.clone(),
            seed: self.seed,
            params: self
                .params
                .iter()
                .map(|ts| ts.iter().map(Tensor::cast).collect())
                .collect(),
        }
    }

    pub fn forward(&self, input: &[T], mut mode: Mode<'_>) -> Result<Tape<T>> {
        if input.len() != self.arch.input_length {
            return Err(Error::Dimension(format!(
                "input has {} values, model expects {}",
                input.len(),
                self.arch.input_length
            )));
        }
        let mut x = Tensor::new(vec![input.len(), 1], input.to_vec())?;
        let mut caches = Vec::with_capacity(self.arch.layers.len());
        for (layer, p) in self.arch.layers.iter().zip(&self.params) {
            let (next, cache) = match *layer {
                LayerSpec::Conv1D { .. } => {
                    let mut y = layers::conv1d_forward(&x, &p[0], &p[1])?;
                    relu_in_place(&mut y);
                    (y.clone(), Cache::Conv { input: x, output: y })
                }
                LayerSpec::MaxPool1D { pool } => {
                    let (y, argmax) = layers::maxpool1d_forward(&x, pool)?;
                    let input_shape = x.shape().to_vec();
                    (y, Cache::Pool { argmax, input_shape })
                }
                LayerSpec::Dropout { rate } => {
                    let dm = match &mut mode {
                        Mode::Infer => DropoutMode::Infer,
                        Mode::Train(rng) => DropoutMode::Train(&mut **rng),
                    };
                    let (y, mask) = layers::dropout(&x, rate, dm)?;
                    (y, Cache::Dropout { mask })
                }
                LayerSpec::Lstm { .. } => {
                    let (h, cache) = layers::lstm_forward(&x, &p[0], &p[1], &p[2])?;
                    (h, Cache::Lstm { input: x, cache })
                }
                LayerSpec::Dense { activation, .. } => {
                    let y = layers::dense_forward(&x, &p[0], &p[1], activation)?;
                    (y.clone(), Cache::Dense { input: x, output: y })
                }
            };
            caches.push(cache);
            x = next;
        }
        Ok(Tape {
            caches,
            output: x.data()[0],
        })
    }

    pub fn predict(&self, input: &[T]) -> Result<T> {
        Ok(self.forward(input, Mode::Infer)?.output)
    }

    /// Gradients of `bce(output, label)` (no penalty term) with respect to
    /// every parameter, reusing the dropout masks recorded on the tape.
    pub fn backward(&self, tape: &Tape<T>, label: u8) -> Result<Gradients<T>> {
        if tape.caches.len() != self.arch.layers.len() || tape.caches.is_empty() {
            return Err(Error::NoForwardPass);
        }
        let n = self.arch.layers.len();
        let mut grads: Vec<Vec<Tensor<T>>> = vec![Vec::new(); n];
        let p = tape.output;
        let y = T::of(f64::from(label));
        let eps = T::of(super::BCE_EPSILON);
        let last_is_sigmoid = matches!(
            self.arch.layers[n - 1],
            LayerSpec::Dense { activation: Activation::Sigmoid, .. }
        );
        let mut d = Tensor::new(vec![1], vec![if last_is_sigmoid {
            p - y
        } else if p < eps || p > T::one() - eps {
            T::zero()
        } else {
            (p - y) / (p * (T::one() - p))
        }])?;

        for i in (0..n).rev() {
            let layer = &self.arch.layers[i];
            let params = &self.params[i];
            d = match (layer, &tape.caches[i]) {
                (LayerSpec::Conv1D { .. }, Cache::Conv { input, output }) => {
                    relu_mask(&mut d, output);
                    let (dx, dw, db) = layers::conv1d_backward(input, &params[0], &d)?;
                    grads[i] = vec![dw, db];
                    dx
                }
                (LayerSpec::MaxPool1D { .. }, Cache::Pool { argmax, input_shape }) => {
                    layers::maxpool1d_backward(&d, argmax, input_shape)?
                }
                (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => {
                    if let Some(mask) = mask {
                        for (g, &m) in d.data_mut().iter_mut().zip(mask) {
                            *g = *g * m;
                        }
                    }
                    d
                }
                (LayerSpec::Lstm { .. }, Cache::Lstm { input, cache }) => {
                    let (dx, dk, dr, db) =
                        layers::lstm_backward(input, &params[0], &params[1], cache, &d)?;
                    grads[i] = vec![dk, dr, db];
                    dx
                }
                (LayerSpec::Dense { activation, .. }, Cache::Dense { input, output }) => {
                    let act = if i == n - 1 && last_is_sigmoid {
                        Activation::Linear
                    } else {
                        *activation
                    };
                    let (dx, dw, db) = layers::dense_backward(input, &params[0], output, act, &d)?;
                    grads[i] = vec![dw, db];
                    dx
                }
                _ => return Err(Error::NoForwardPass),
            };
        }
        Ok(Gradients {
            tensors: grads.into_iter().flatten().collect(),
        })
    }

    /// Per-sample `bce + lambda * l2_penalty` and its full gradient.
    pub fn loss_and_gradients(
        &self,
        input: &[T],
        label: u8,
        lambda: T,
        mode: Mode<'_>,
    ) -> Result<(T, Gradients<T>)> {
        let tape = self.forward(input, mode)?;
        let mut grads = self.backward(&tape, label)?;
        self.add_l2_gradient(&mut grads, lambda);
        Ok((bce(tape.output, label) + lambda * self.l2_penalty(), grads))
    }
}

fn relu_in_place<T: Scalar>(t: &mut Tensor<T>) {
    for v in t.data_mut() {
        *v = v.max(T::zero());
    }
}

fn relu_mask<T: Scalar>(d: &mut Tensor<T>, activated: &Tensor<T>) {
    for (g, &z) in d.data_mut().iter_mut().zip(activated.data()) {
        if z <= T::zero() {
            *g = T::zero();
        }
    }
}
