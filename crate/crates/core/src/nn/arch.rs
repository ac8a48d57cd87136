use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Dropout rate of the reference architecture.
pub const REFERENCE_DROPOUT: f64 = 0.166;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::invalid(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv1D { filters: usize, kernel: usize },
    MaxPool1D { pool: usize },
    Dropout { rate: f64 },
    Lstm { units: usize },
    Dense { units: usize, activation: Activation },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv1D { .. } => "Conv1D",
            LayerSpec::MaxPool1D { .. } => "MaxPooling1D",
            LayerSpec::Dropout { .. } => "Dropout",
            LayerSpec::Lstm { .. } => "LSTM",
            LayerSpec::Dense { .. } => "Dense",
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LayerSpec::Conv1D { filters, kernel } => filters >= 1 && kernel >= 1,
            LayerSpec::MaxPool1D { pool } => pool >= 1,
            LayerSpec::Dropout { rate } => (0.0..1.0).contains(&rate),
            LayerSpec::Lstm { units } => units >= 1,
            LayerSpec::Dense { units, .. } => units >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid layer parameters: {self}")))
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv1D { filters, kernel } => write!(f, "conv1d:{filters}:{kernel}"),
            LayerSpec::MaxPool1D { pool } => write!(f, "maxpool1d:{pool}"),
            LayerSpec::Dropout { rate } => write!(f, "dropout:{rate}"),
            LayerSpec::Lstm { units } => write!(f, "lstm:{units}"),
            LayerSpec::Dense { units, activation } => {
                write!(f, "dense:{units}:{}", activation.as_str())
            }
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::invalid(format!("cannot parse layer '{s}'"));
        let int = |p: &str| p.parse::<usize>().map_err(|_| bad());
        let spec = match parts.as_slice() {
            ["conv1d", filters, kernel] => LayerSpec::Conv1D {
                filters: int(filters)?,
                kernel: int(kernel)?,
            },
            ["maxpool1d", pool] => LayerSpec::MaxPool1D { pool: int(pool)? },
            ["dropout", rate] => LayerSpec::Dropout {
                rate: rate.parse().map_err(|_| bad())?,
            },
            ["lstm", units] => LayerSpec::Lstm { units: int(units)? },
            ["dense", units, act] => LayerSpec::Dense {
                units: int(units)?,
                activation: act.parse()?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Output shape of a layer, batch dimension omitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Sequence { len: usize, channels: usize },
    Vector(usize),
}

impl Shape {
    pub fn size(self) -> usize {
        match self {
            Shape::Sequence { len, channels } => len * channels,
            Shape::Vector(n) => n,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Sequence { len, channels } => write!(f, "(None, {len}, {channels})"),
            Shape::Vector(n) => write!(f, "(None, {n})"),
        }
    }
}

/// Input length plus an ordered layer stack. The input is a single-channel
/// sequence of `input_length` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub input_length: usize,
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    /// Reference stack: four Conv1D/MaxPool/Dropout stages (128, 64, 64, 24
    /// filters, kernel 4, pool 2), LSTM(64), Dense 64-32-16 ReLU with dropout
    /// after the first dense layer, and a sigmoid output.
    pub fn reference(input_length: usize) -> Self {
        Self::stacked(
            input_length,
            &[128, 64, 64, 24],
            4,
            REFERENCE_DROPOUT,
            64,
            &[64, 32, 16],
        )
    }

    /// The reference template with configurable widths.
    pub fn stacked(
        input_length: usize,
        filters: &[usize],
        kernel: usize,
        dropout: f64,
        lstm_units: usize,
        dense: &[usize],
    ) -> Self {
        let mut layers = Vec::new();
        for &f in filters {
            layers.push(LayerSpec::Conv1D { filters: f, kernel });
            layers.push(LayerSpec::MaxPool1D { pool: 2 });
            layers.push(LayerSpec::Dropout { rate: dropout });
        }
        layers.push(LayerSpec::Lstm { units: lstm_units });
        for (i, &units) in dense.iter().enumerate() {
            layers.push(LayerSpec::Dense {
                units,
                activation: Activation::Relu,
            });
            if i == 0 {
                layers.push(LayerSpec::Dropout { rate: dropout });
            }
        }
        layers.push(LayerSpec::Dense {
            units: 1,
            activation: Activation::Sigmoid,
        });
        Architecture {
            input_length,
            layers,
        }
    }

    /// Smallest stack containing one of each layer type, over 32 inputs.
    pub fn gradcheck_tiny() -> Self {
        Architecture {
            input_length: 32,
            layers: vec![
                LayerSpec::Conv1D { filters: 3, kernel: 4 },
                LayerSpec::MaxPool1D { pool: 2 },
                LayerSpec::Dropout { rate: 0.25 },
                LayerSpec::Lstm { units: 4 },
                LayerSpec::Dense {
                    units: 5,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Sigmoid,
                },
            ],
        }
    }

    pub fn parse_layers(input_length: usize, text: &str) -> Result<Self> {
        let layers = text
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        if layers.is_empty() {
            return Err(Error::invalid("architecture has no layers"));
        }
        Ok(Architecture {
            input_length,
            layers,
        })
    }

    pub fn layers_string(&self) -> String {
        self.layers
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Output shape of every layer, in order.
    pub fn infer_shapes(&self) -> Result<Vec<Shape>> {
        let mut shape = Shape::Sequence {
            len: self.input_length,
            channels: 1,
        };
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate()?;
            let err = |message: String| Error::Shape {
                layer: i,
                kind: layer.kind().into(),
                message,
            };
            shape = match (*layer, shape) {
                (LayerSpec::Conv1D { filters, kernel }, Shape::Sequence { len, .. }) => {
                    if len < kernel {
                        return Err(err(format!("input length {len} < kernel {kernel}")));
                    }
                    Shape::Sequence {
                        len: len - kernel + 1,
                        channels: filters,
                    }
                }
                (LayerSpec::MaxPool1D { pool }, Shape::Sequence { len, channels }) => {
                    if len < pool {
                        return Err(err(format!("input length {len} < pool {pool}")));
                    }
                    Shape::Sequence {
                        len: len / pool,
                        channels,
                    }
                }
                (LayerSpec::Dropout { .. }, s) => s,
                (LayerSpec::Lstm { units }, Shape::Sequence { len, .. }) => {
                    if len == 0 {
                        return Err(err("zero time steps".into()));
                    }
                    Shape::Vector(units)
                }
                (LayerSpec::Dense { units, .. }, Shape::Vector(_)) => Shape::Vector(units),
                (_, s) => return Err(err(format!("incompatible input shape {s}"))),
            };
            shapes.push(shape);
        }
        Ok(shapes)
    }

    /// Shape of every parameter tensor of layer `index` given its input shape.
    pub(crate) fn param_shapes(layer: &LayerSpec, input: Shape) -> Vec<Vec<usize>> {
        let channels = match input {
            Shape::Sequence { channels, .. } => channels,
            Shape::Vector(n) => n,
        };
        match *layer {
            LayerSpec::Conv1D { filters, kernel } => {
                vec![vec![kernel, channels, filters], vec![filters]]
            }
            LayerSpec::Lstm { units } => vec![
                vec![channels, 4 * units],
                vec![units, 4 * units],
                vec![4 * units],
            ],
            LayerSpec::Dense { units, .. } => vec![vec![channels, units], vec![units]],
            LayerSpec::MaxPool1D { .. } | LayerSpec::Dropout { .. } => Vec::new(),
        }
    }

    /// Input shape of each layer.
    pub fn input_shapes(&self) -> Result<Vec<Shape>> {
        let outputs = self.infer_shapes()?;
        let mut inputs = vec![Shape::Sequence {
            len: self.input_length,
            channels: 1,
        }];
        inputs.extend(outputs.iter().take(outputs.len().saturating_sub(1)));
        Ok(inputs)
    }

    pub fn layer_param_counts(&self) -> Result<Vec<usize>> {
        Ok(self
            .layers
            .iter()
            .zip(self.input_shapes()?)
            .map(|(l, s)| {
                Self::param_shapes(l, s)
                    .iter()
                    .map(|shape| shape.iter().product::<usize>())
                    .sum()
            })
            .collect())
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.layer_param_counts()?.iter().sum())
    }

    /// Layer / output shape / parameter rows.
    pub fn summary(&self) -> Result<String> {
        let shapes = self.infer_shapes()?;
        let counts = self.layer_param_counts()?;
        let mut out = String::from("layer\toutput_shape\tparameters\n");
        for ((layer, shape), count) in self.layers.iter().zip(shapes).zip(counts) {
            out.push_str(&format!("{}\t{shape}\t{count}\n", layer.kind()));
        }
        out.push_str(&format!("total\t-\t{}\n", self.param_count()?));
        Ok(out)
    }
}
