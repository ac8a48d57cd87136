//! Layer kernels. Sequences are `[len, channels]` row-major; vectors are 1-D.

use rand::{Rng, RngCore};

use super::arch::Activation;
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

fn dims2<T: Scalar>(t: &Tensor<T>, what: &str) -> Result<(usize, usize)> {
    match t.shape() {
        [a, b] => Ok((*a, *b)),
        s => Err(Error::Dimension(format!("{what}: expected rank 2, got {s:?}"))),
    }
}

fn expect_shape<T: Scalar>(t: &Tensor<T>, shape: &[usize], what: &str) -> Result<()> {
    if t.shape() == shape {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what}: expected {shape:?}, got {:?}",
            t.shape()
        )))
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Valid (unpadded) stride-1 convolution:
/// `out[t, f] = bias[f] + sum_{i<k, c<C} input[t+i, c] * weights[i, c, f]`.
pub fn conv1d_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (len, channels) = dims2(input, "conv1d input")?;
    let [k, wc, filters] = *weights.shape() else {
        return Err(Error::Dimension("conv1d weights must be [k, C, F]".into()));
    };
    if wc != channels {
        return Err(Error::Dimension(format!("conv1d: weights expect {wc} channels, input has {channels}")));
    }
    expect_shape(bias, &[filters], "conv1d bias")?;
    if len < k {
        return Err(Error::Dimension(format!("conv1d: input length {len} < kernel {k}")));
    }
    let out_len = len - k + 1;
    let (x, w, b) = (input.data(), weights.data(), bias.data());
    let mut out = Vec::with_capacity(out_len * filters);
    for t in 0..out_len {
        let start = out.len();
        out.extend_from_slice(b);
        let row = &mut out[start..];
        for i in 0..k {
            let xs = &x[(t + i) * channels..(t + i + 1) * channels];
            let ws = &w[i * channels * filters..(i + 1) * channels * filters];
            for (c, &xv) in xs.iter().enumerate() {
                let wrow = &ws[c * filters..(c + 1) * filters];
                for (o, &wv) in row.iter_mut().zip(wrow) {
                    *o = *o + xv * wv;
                }
            }
        }
    }
    Tensor::new(vec![out_len, filters], out)
}

/// Returns `(d_input, d_weights, d_bias)`.
pub fn conv1d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    d_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (len, channels) = dims2(input, "conv1d input")?;
    let [k, _, filters] = *weights.shape() else {
        return Err(Error::Dimension("conv1d weights must be [k, C, F]".into()));
    };
    let out_len = len + 1 - k;
    expect_shape(d_out, &[out_len, filters], "conv1d d_out")?;
    let (x, w, g) = (input.data(), weights.data(), d_out.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); w.len()];
    let mut db = vec![T::zero(); filters];
    for t in 0..out_len {
        let gt = &g[t * filters..(t + 1) * filters];
        for (d, &gv) in db.iter_mut().zip(gt) {
            *d = *d + gv;
        }
        for i in 0..k {
            for c in 0..channels {
                let xi = (t + i) * channels + c;
                let base = (i * channels + c) * filters;
                let xv = x[xi];
                let mut acc = T::zero();
                for f in 0..filters {
                    dw[base + f] = dw[base + f] + xv * gt[f];
                    acc = acc + w[base + f] * gt[f];
                }
                dx[xi] = dx[xi] + acc;
            }
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), dx)?,
        Tensor::new(weights.shape().to_vec(), dw)?,
        Tensor::new(vec![filters], db)?,
    ))
}

/// Non-overlapping max pool with stride `pool`; the trailing remainder is
/// dropped. Also returns, per output element, the flat input index that won
/// (first maximum on ties).
pub fn maxpool1d_forward<T: Scalar>(input: &Tensor<T>, pool: usize) -> Result<(Tensor<T>, Vec<usize>)> {
    if pool == 0 {
        return Err(Error::invalid("pool size must be >= 1"));
    }
    let (len, channels) = dims2(input, "maxpool input")?;
    let out_len = len / pool;
    let x = input.data();
    let mut out = Vec::with_capacity(out_len * channels);
    let mut argmax = Vec::with_capacity(out_len * channels);
    for t in 0..out_len {
        for c in 0..channels {
            let mut best = t * pool * channels + c;
            for j in 1..pool {
                let idx = (t * pool + j) * channels + c;
                if x[idx] > x[best] {
                    best = idx;
                }
            }
            out.push(x[best]);
            argmax.push(best);
        }
    }
    Ok((Tensor::new(vec![out_len, channels], out)?, argmax))
}

/// Routes each output gradient to the single input position that produced it.
pub fn maxpool1d_backward<T: Scalar>(
    d_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if d_out.len() != argmax.len() {
        return Err(Error::Dimension("maxpool: gradient and argmax lengths differ".into()));
    }
    let mut dx = Tensor::zeros(input_shape.to_vec());
    let data = dx.data_mut();
    for (&g, &idx) in d_out.data().iter().zip(argmax) {
        data[idx] = data[idx] + g;
    }
    Ok(dx)
}

pub enum DropoutMode<'a> {
    Train(&'a mut dyn RngCore),
    Infer,
}

/// Inverted dropout. In training mode each unit is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; the returned mask
/// holds the per-unit multiplier. Inference is the identity.
pub fn dropout<T: Scalar>(
    input: &Tensor<T>,
    rate: f64,
    mode: DropoutMode<'_>,
) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
    }
    match mode {
        DropoutMode::Infer => Ok((input.clone(), None)),
        DropoutMode::Train(rng) => {
            let keep = T::of(1.0 / (1.0 - rate));
            let mask: Vec<T> = (0..input.len())
                .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
                .collect();
            let out = input.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
            Ok((Tensor::new(input.shape().to_vec(), out)?, Some(mask)))
        }
    }
}

/// Activations recorded by [`lstm_forward`] for backpropagation through time.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache<T> {
    /// `[T, 4U]` post-activation gates in i, f, g, o order.
    pub gates: Vec<T>,
    /// `[T, U]` cell states.
    pub cells: Vec<T>,
    /// `[T, U]` hidden states.
    pub hidden: Vec<T>,
}

/// Single-layer LSTM over `input` `[T, C]` from zero state; returns the
/// final hidden state. Gate blocks of `kernel` `[C, 4U]`, `recurrent`
/// `[U, 4U]` and `bias` `[4U]` are ordered input, forget, candidate, output.
pub fn lstm_forward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    recurrent: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(Tensor<T>, LstmCache<T>)> {
    let (steps, channels) = dims2(input, "lstm input")?;
    if steps == 0 {
        return Err(Error::Dimension("lstm: zero time steps".into()));
    }
    let units = recurrent.shape().first().copied().unwrap_or(0);
    let g4 = 4 * units;
    expect_shape(kernel, &[channels, g4], "lstm kernel")?;
    expect_shape(recurrent, &[units, g4], "lstm recurrent")?;
    expect_shape(bias, &[g4], "lstm bias")?;
    let (x, wk, wr) = (input.data(), kernel.data(), recurrent.data());

    let mut cache = LstmCache {
        gates: Vec::with_capacity(steps * g4),
        cells: Vec::with_capacity(steps * units),
        hidden: Vec::with_capacity(steps * units),
    };
    let mut h = vec![T::zero(); units];
    let mut c = vec![T::zero(); units];
    let mut z = vec![T::zero(); g4];
    for t in 0..steps {
        z.copy_from_slice(bias.data());
        for (ci, &xv) in x[t * channels..(t + 1) * channels].iter().enumerate() {
            for (zj, &w) in z.iter_mut().zip(&wk[ci * g4..(ci + 1) * g4]) {
                *zj = *zj + xv * w;
            }
        }
        for (ui, &hv) in h.iter().enumerate() {
            for (zj, &w) in z.iter_mut().zip(&wr[ui * g4..(ui + 1) * g4]) {
                *zj = *zj + hv * w;
            }
        }
        for u in 0..units {
            let i = sigmoid(z[u]);
            let f = sigmoid(z[units + u]);
            let g = z[2 * units + u].tanh();
            let o = sigmoid(z[3 * units + u]);
            z[u] = i;
            z[units + u] = f;
            z[2 * units + u] = g;
            z[3 * units + u] = o;
            c[u] = f * c[u] + i * g;
            h[u] = o * c[u].tanh();
        }
        cache.gates.extend_from_slice(&z);
        cache.cells.extend_from_slice(&c);
        cache.hidden.extend_from_slice(&h);
    }
    Ok((Tensor::new(vec![units], h)?, cache))
}

/// `(d_input, d_kernel, d_recurrent, d_bias)`.
pub type LstmGrads<T> = (Tensor<T>, Tensor<T>, Tensor<T>, Tensor<T>);

/// Backpropagation through time from a gradient on the final hidden state.
pub fn lstm_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    recurrent: &Tensor<T>,
    cache: &LstmCache<T>,
    d_hidden: &Tensor<T>,
) -> Result<LstmGrads<T>> {
    let (steps, channels) = dims2(input, "lstm input")?;
    let units = d_hidden.len();
    let g4 = 4 * units;
    expect_shape(kernel, &[channels, g4], "lstm kernel")?;
    expect_shape(recurrent, &[units, g4], "lstm recurrent")?;
    if cache.gates.len() != steps * g4 {
        return Err(Error::Dimension("lstm cache does not match input".into()));
    }
    let (x, wk, wr) = (input.data(), kernel.data(), recurrent.data());
    let one = T::one();

    let mut dx = vec![T::zero(); x.len()];
    let mut dwk = vec![T::zero(); wk.len()];
    let mut dwr = vec![T::zero(); wr.len()];
    let mut db = vec![T::zero(); g4];
    let mut dh = d_hidden.data().to_vec();
    let mut dc = vec![T::zero(); units];
    let mut dz = vec![T::zero(); g4];
    for t in (0..steps).rev() {
        let gates = &cache.gates[t * g4..(t + 1) * g4];
        let cells = &cache.cells[t * units..(t + 1) * units];
        for u in 0..units {
            let (i, f, g, o) = (gates[u], gates[units + u], gates[2 * units + u], gates[3 * units + u]);
            let c_prev = if t > 0 { cache.cells[(t - 1) * units + u] } else { T::zero() };
            let tanh_c = cells[u].tanh();
            let d_o = dh[u] * tanh_c;
            let dcu = dc[u] + dh[u] * o * (one - tanh_c * tanh_c);
            dz[u] = dcu * g * i * (one - i);
            dz[units + u] = dcu * c_prev * f * (one - f);
            dz[2 * units + u] = dcu * i * (one - g * g);
            dz[3 * units + u] = d_o * o * (one - o);
            dc[u] = dcu * f;
        }
        for (d, &v) in db.iter_mut().zip(&dz) {
            *d = *d + v;
        }
        for ci in 0..channels {
            let xv = x[t * channels + ci];
            let row = ci * g4;
            let mut acc = T::zero();
            for j in 0..g4 {
                dwk[row + j] = dwk[row + j] + xv * dz[j];
                acc = acc + wk[row + j] * dz[j];
            }
            dx[t * channels + ci] = acc;
        }
        for ui in 0..units {
            let hv = if t > 0 { cache.hidden[(t - 1) * units + ui] } else { T::zero() };
            let row = ui * g4;
            let mut acc = T::zero();
            for j in 0..g4 {
                dwr[row + j] = dwr[row + j] + hv * dz[j];
                acc = acc + wr[row + j] * dz[j];
            }
            dh[ui] = acc;
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), dx)?,
        Tensor::new(kernel.shape().to_vec(), dwk)?,
        Tensor::new(recurrent.shape().to_vec(), dwr)?,
        Tensor::new(vec![g4], db)?,
    ))
}

/// `activation(input · weights + bias)` for `weights` `[n, m]`.
pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    activation: Activation,
) -> Result<Tensor<T>> {
    let n = input.len();
    let [wn, m] = *weights.shape() else {
        return Err(Error::Dimension("dense weights must be [n, m]".into()));
    };
    if wn != n {
        return Err(Error::Dimension(format!("dense: weights expect {wn} inputs, got {n}")));
    }
    expect_shape(bias, &[m], "dense bias")?;
    let w = weights.data();
    let mut out = bias.data().to_vec();
    for (i, &xv) in input.data().iter().enumerate() {
        for (o, &wv) in out.iter_mut().zip(&w[i * m..(i + 1) * m]) {
            *o = *o + xv * wv;
        }
    }
    for o in &mut out {
        *o = match activation {
            Activation::Relu => o.max(T::zero()),
            Activation::Sigmoid => sigmoid(*o),
            Activation::Linear => *o,
        };
    }
    Tensor::new(vec![m], out)
}

/// Backward pass given the layer's activated `output`.
/// Returns `(d_input, d_weights, d_bias)`.
pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    output: &Tensor<T>,
    activation: Activation,
    d_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let n = input.len();
    let m = output.len();
    expect_shape(weights, &[n, m], "dense weights")?;
    expect_shape(d_out, &[m], "dense d_out")?;
    let dz: Vec<T> = d_out
        .data()
        .iter()
        .zip(output.data())
        .map(|(&g, &y)| match activation {
            Activation::Relu => {
                if y > T::zero() {
                    g
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => g * y * (T::one() - y),
            Activation::Linear => g,
        })
        .collect();
    let w = weights.data();
    let mut dx = Vec::with_capacity(n);
    let mut dw = Vec::with_capacity(n * m);
    for (i, &xv) in input.data().iter().enumerate() {
        let row = &w[i * m..(i + 1) * m];
        dx.push(row.iter().zip(&dz).map(|(&a, &b)| a * b).sum());
        dw.extend(dz.iter().map(|&d| xv * d));
    }
    Ok((
        Tensor::new(input.shape().to_vec(), dx)?,
        Tensor::new(vec![n, m], dw)?,
        Tensor::new(vec![m], dz)?,
    ))
}
