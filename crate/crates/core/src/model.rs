//! Dense feedforward ReLU classifiers.
//!
//! A [`NetworkModel`] is a stack of affine layers. Every layer but the last
//! applies ReLU; the last layer produces logits and the predicted class is the
//! arg-max of those logits (lowest index on ties).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// One affine layer, weights stored row-major (one row per output neuron).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl LayerSpec {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let rows = weights.len();
        if rows == 0 {
            return Err(Error::DimensionMismatch("layer has no output neurons".into()));
        }
        if rows != bias.len() {
            return Err(Error::DimensionMismatch(format!(
                "layer has {rows} weight rows but {} bias entries",
                bias.len()
            )));
        }
        let cols = weights[0].len();
        if cols == 0 {
            return Err(Error::DimensionMismatch("layer has no inputs".into()));
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for (i, row) in weights.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "weight row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            flat.extend(row);
        }
        if flat.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer weights or bias".into()));
        }
        Ok(Self {
            rows,
            cols,
            weights: flat,
            bias,
            activation,
        })
    }

    /// Number of output neurons.
    pub fn width(&self) -> usize {
        self.rows
    }

    /// Number of inputs per neuron.
    pub fn fan_in(&self) -> usize {
        self.cols
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn row(&self, neuron: usize) -> &[f64] {
        &self.weights[neuron * self.cols..(neuron + 1) * self.cols]
    }

    pub fn weight(&self, neuron: usize, input: usize) -> f64 {
        self.weights[neuron * self.cols + input]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    /// `W·x + b` into `out`.
    fn affine_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.cols)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b),
        );
    }
}

/// Input to a model: a vector whose components all lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputVector(Vec<f64>);

impl InputVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "input component {j} = {v} is outside [0, 1]"
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// L∞ distance to `other`.
    pub fn linf_distance(&self, other: &InputVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Pre-ReLU values of every hidden neuron for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct PreActivationTrace {
    pub layers: Vec<Vec<f64>>,
}

impl PreActivationTrace {
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    input_dim: usize,
    layers: Vec<LayerSpec>,
}

#[derive(Serialize, Deserialize)]
struct RawLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    input_dim: usize,
    layers: Vec<RawLayer>,
}

impl NetworkModel {
    /// Builds a model, checking that consecutive layers chain, that there is
    /// at least one hidden layer, and that only the last layer is linear.
    pub fn new(input_dim: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::DimensionMismatch("input_dim must be positive".into()));
        }
        if layers.len() < 2 {
            return Err(Error::ModelFormat(
                "model needs at least one hidden layer and an output layer".into(),
            ));
        }
        let mut prev = input_dim;
        let last = layers.len() - 1;
        for (i, layer) in layers.iter().enumerate() {
            if layer.fan_in() != prev {
                return Err(Error::DimensionMismatch(format!(
                    "layer {i} expects {} inputs but the previous width is {prev}",
                    layer.fan_in()
                )));
            }
            let expected = if i == last {
                Activation::Linear
            } else {
                Activation::Relu
            };
            if layer.activation() != expected {
                return Err(Error::ModelFormat(format!(
                    "layer {i} has activation {:?}; exactly the last layer must be linear",
                    layer.activation()
                )));
            }
            prev = layer.width();
        }
        Ok(Self { input_dim, layers })
    }

    /// Parses and validates a model document.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let raw: RawModel = serde_json::from_reader(source).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let layers = raw
            .layers
            .into_iter()
            .map(|l| LayerSpec::new(l.weights, l.bias, l.activation))
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.input_dim, layers)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::load(text.as_bytes())
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let raw = RawModel {
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| RawLayer {
                    weights: l.weights.chunks_exact(l.cols).map(<[f64]>::to_vec).collect(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
        };
        crate::json::to_writer(writer, &raw)?;
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.layers[self.layers.len() - 1].width()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// The ReLU layers, i.e. every layer except the output layer.
    pub fn hidden_layers(&self) -> &[LayerSpec] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden_layers().iter().map(LayerSpec::width).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Forward pass over a raw slice. The caller guarantees the length.
    pub(crate) fn forward_raw(&self, x: &[f64]) -> (Vec<f64>, PreActivationTrace) {
        let mut trace = Vec::with_capacity(self.layers.len() - 1);
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for layer in self.hidden_layers() {
            layer.affine_into(&current, &mut next);
            trace.push(next.clone());
            current.clear();
            current.extend(next.iter().map(|v| v.max(0.0)));
        }
        let mut logits = Vec::new();
        self.layers[self.layers.len() - 1].affine_into(&current, &mut logits);
        (logits, PreActivationTrace { layers: trace })
    }

    fn check_input(&self, x: &InputVector) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "input has {} components, model expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Logits plus the pre-ReLU value of every hidden neuron.
    pub fn forward_with_trace(&self, x: &InputVector) -> Result<(Vec<f64>, PreActivationTrace)> {
        self.check_input(x)?;
        Ok(self.forward_raw(x.as_slice()))
    }

    pub fn logits(&self, x: &InputVector) -> Result<Vec<f64>> {
        self.forward_with_trace(x).map(|(logits, _)| logits)
    }

    pub fn classify(&self, x: &InputVector) -> Result<usize> {
        self.logits(x).map(|l| argmax(&l))
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
