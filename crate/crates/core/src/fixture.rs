//! Deterministic synthetic models and seed sets, so that tests and demos do not
//! depend on trained weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Activation, InputVector, LayerSpec, NetworkModel};
use crate::report::DatasetRecord;

/// Parses a width spec such as `"36-16-8-16-4"` (input, hidden..., classes).
pub fn parse_width_spec(spec: &str) -> Result<Vec<usize>> {
    let widths = spec
        .split('-')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Error::InvalidParameter(format!("bad width {w:?} in {spec:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if widths.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "width spec {spec:?} needs an input width, at least one hidden width and a class count"
        )));
    }
    Ok(widths)
}

/// Pseudo-random model: weights and biases uniform in `[-0.5, 0.5]`, scaled
/// by `1/sqrt(fan_in)`.
pub fn random_model(widths: &[usize], seed: u64) -> Result<NetworkModel> {
    if widths.len() < 3 || widths.contains(&0) {
        return Err(Error::InvalidParameter(format!("unusable width list {widths:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let (fan_in, width) = (pair[0], pair[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            let mut draw = || (rng.random::<f64>() - 0.5) * scale;
            let weights: Vec<Vec<f64>> = (0..width)
                .map(|_| (0..fan_in).map(|_| draw()).collect())
                .collect();
            let bias: Vec<f64> = (0..width).map(|_| draw()).collect();
            let act = if i == last {
                Activation::Linear
            } else {
                Activation::Relu
            };
            LayerSpec::new(weights, bias, act)
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::new(widths[0], layers)
}

/// `count` uniform random inputs labelled with the model's own prediction,
/// so every record is a correctly handled seed.
pub fn random_seeds(model: &NetworkModel, count: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count as u64)
        .map(|id| {
            let x: Vec<f64> = (0..model.input_dim()).map(|_| rng.random::<f64>()).collect();
            let label = model
                .classify(&InputVector::new(x.clone()).expect("uniform draw lies in [0, 1)"))
                .expect("input width matches model");
            DatasetRecord { id, x, label }
        })
        .collect()
}
