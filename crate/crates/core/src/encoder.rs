//! Encoding of coverage targets as linear programs.
//!
//! With every hidden neuron's activation bit fixed, a ReLU network is affine
//! in its input. A target "combination `θ` of layer `l` shows configuration
//! `c`" is encoded around a seed `x` by pinning every other neuron of layers
//! `0..=l` to the seed's own bit, forcing the neurons of `θ` to the bits of
//! `c`, and minimizing the L∞ distance `m` to the seed inside the budget box.
//!
//! Variables are the perturbed input `x'` (one per input component) followed
//! by `m`. Constraints:
//!
//! * box: `max(0, x_j - d) <= x'_j <= min(1, x_j + d)`
//! * distance: `-m <= x'_j - x_j <= m`, `m >= 0`
//! * activated neurons: `form(x') >= epsilon`; deactivated:
//!   `form(x') <= -DEACTIVATION_GUARD`
//!
//! A vertex optimum usually sits on some deactivated neuron's boundary, where
//! `form(x') = 0` evaluates to a few ulps either side of zero in the real
//! forward pass. The guard keeps such witnesses on the deactivated side.
//!
//! Neurons of layers after `l` are free. A target reachable only by leaving
//! the seed's activation region is reported infeasible.

use crate::coverage::{ActivationSignature, Combination, Configuration};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::model::{InputVector, NetworkModel};

/// Bound below zero for deactivated pins, far above round-off and far below
/// any practical `epsilon`.
pub const DEACTIVATION_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingParams {
    /// L∞ budget.
    pub d: f64,
    /// Margin standing in for the strict `> 0` of an activated neuron.
    pub epsilon: f64,
}

impl Default for EncodingParams {
    fn default() -> Self {
        Self {
            d: 0.15,
            epsilon: 1e-4,
        }
    }
}

impl EncodingParams {
    pub fn new(d: f64, epsilon: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "budget d = {d} must be positive"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < d) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {epsilon} must be positive and below d = {d}"
            )));
        }
        Ok(Self { d, epsilon })
    }
}

/// Pre-activation of a neuron as `coeffs · x' + constant`, valid inside one
/// activation region.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl AffineForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + self.constant
    }
}

fn check_pattern(model: &NetworkModel, pattern: &ActivationSignature) -> Result<()> {
    if pattern.widths() != model.hidden_widths() {
        return Err(Error::DimensionMismatch(format!(
            "activation pattern widths {:?} do not match model hidden widths {:?}",
            pattern.widths(),
            model.hidden_widths()
        )));
    }
    Ok(())
}

/// Affine pre-activation forms of every neuron in hidden layers `0..=up_to_layer`
/// under `pattern`. Deactivated neurons contribute nothing downstream.
pub fn propagate_affine(
    model: &NetworkModel,
    pattern: &ActivationSignature,
    up_to_layer: usize,
) -> Result<Vec<Vec<AffineForm>>> {
    check_pattern(model, pattern)?;
    let hidden = model.hidden_layers();
    if up_to_layer >= hidden.len() {
        return Err(Error::InvalidParameter(format!(
            "layer {up_to_layer} does not exist; model has {} hidden layers",
            hidden.len()
        )));
    }
    let n = model.input_dim();
    let mut out: Vec<Vec<AffineForm>> = Vec::with_capacity(up_to_layer + 1);
    for (i, layer) in hidden.iter().enumerate().take(up_to_layer + 1) {
        let forms = (0..layer.width())
            .map(|k| {
                let row = layer.row(k);
                let mut coeffs = vec![0.0; n];
                let mut constant = layer.bias()[k];
                if i == 0 {
                    coeffs.copy_from_slice(row);
                } else {
                    let bits = pattern.layer(i - 1);
                    for ((w, upstream), &on) in row.iter().zip(&out[i - 1]).zip(bits) {
                        if on && *w != 0.0 {
                            for (c, u) in coeffs.iter_mut().zip(&upstream.coeffs) {
                                *c += w * u;
                            }
                            constant += w * upstream.constant;
                        }
                    }
                }
                AffineForm { coeffs, constant }
            })
            .collect();
        out.push(forms);
    }
    Ok(out)
}

fn check_target(model: &NetworkModel, combo: &Combination, config: &Configuration) -> Result<()> {
    let widths = model.hidden_widths();
    let Some(&width) = widths.get(combo.layer) else {
        return Err(Error::InvalidParameter(format!(
            "combination refers to layer {} but the model has {} hidden layers",
            combo.layer,
            widths.len()
        )));
    };
    if combo.neurons.is_empty()
        || combo.neurons.iter().any(|&k| k >= width)
        || combo.neurons.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidParameter(format!(
            "{combo} is not a combination of a width-{width} layer"
        )));
    }
    if config.len() != combo.way() {
        return Err(Error::InvalidParameter(format!(
            "configuration {config} has {} bits for a {}-way combination",
            config.len(),
            combo.way()
        )));
    }
    Ok(())
}

/// Per-component box `[max(0, x_j - d), min(1, x_j + d)]`.
pub fn input_box(seed: &InputVector, d: f64) -> Vec<(f64, f64)> {
    seed.as_slice()
        .iter()
        .map(|&x| ((x - d).max(0.0), (x + d).min(1.0)))
        .collect()
}

pub fn encode_target(
    model: &NetworkModel,
    seed: &InputVector,
    seed_sig: &ActivationSignature,
    combo: &Combination,
    config: &Configuration,
    params: &EncodingParams,
) -> Result<LinearProgram> {
    if seed.len() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "seed has {} components, model expects {}",
            seed.len(),
            model.input_dim()
        )));
    }
    check_pattern(model, seed_sig)?;
    check_target(model, combo, config)?;

    let pattern = seed_sig.with_override(combo, config);
    let forms = propagate_affine(model, &pattern, combo.layer)?;
    let n = model.input_dim();
    let m = n;
    let mut lp = LinearProgram::new(n + 1);

    let mut objective = vec![0.0; n + 1];
    objective[m] = 1.0;
    lp.set_objective(objective);

    for (j, (lo, hi)) in input_box(seed, params.d).into_iter().enumerate() {
        lp.set_bounds(j, lo, hi);
    }
    lp.set_bounds(m, 0.0, f64::INFINITY);

    for (j, &x) in seed.as_slice().iter().enumerate() {
        // x'_j - m <= x_j
        let mut up = vec![0.0; n + 1];
        up[j] = 1.0;
        up[m] = -1.0;
        lp.add_le(up, x);
        // -x'_j - m <= -x_j
        let mut down = vec![0.0; n + 1];
        down[j] = -1.0;
        down[m] = -1.0;
        lp.add_le(down, -x);
    }

    for (layer, layer_forms) in forms.iter().enumerate() {
        let bits = pattern.layer(layer);
        for (form, &on) in layer_forms.iter().zip(bits) {
            let mut coeffs = Vec::with_capacity(n + 1);
            coeffs.extend_from_slice(&form.coeffs);
            coeffs.push(0.0);
            if on {
                lp.add_ge(coeffs, params.epsilon - form.constant);
            } else {
                lp.add_le(coeffs, -DEACTIVATION_GUARD - form.constant);
            }
        }
    }
    Ok(lp)
}

/// True iff the real forward pass on `candidate` shows `config` on `combo`.
pub fn verify_target(
    model: &NetworkModel,
    candidate: &InputVector,
    combo: &Combination,
    config: &Configuration,
) -> Result<bool> {
    check_target(model, combo, config)?;
    let (_, trace) = model.forward_with_trace(candidate)?;
    let layer = &trace.layers[combo.layer];
    Ok(combo
        .neurons
        .iter()
        .zip(config.bits())
        .all(|(&k, &b)| (layer[k] > 0.0) == b))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetOutcome {
    /// A point inside the budget box; `distance` is the LP optimum.
    Found {
        input: InputVector,
        distance: f64,
    },
    Infeasible,
}

/// Encodes and solves one target, returning the witness clamped to the box.
pub fn solve_target(
    model: &NetworkModel,
    seed: &InputVector,
    seed_sig: &ActivationSignature,
    combo: &Combination,
    config: &Configuration,
    params: &EncodingParams,
) -> Result<TargetOutcome> {
    let lp = encode_target(model, seed, seed_sig, combo, config, params)?;
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let n = model.input_dim();
            let values: Vec<f64> = sol.x[..n]
                .iter()
                .zip(input_box(seed, params.d))
                .map(|(&v, (lo, hi))| v.clamp(lo, hi))
                .collect();
            let input = InputVector::new(values)?;
            Ok(TargetOutcome::Found {
                input,
                distance: sol.x[n],
            })
        }
        // the objective is bounded below by m >= 0, so this only arises
        // from numeric trouble
        LpStatus::Infeasible | LpStatus::Unbounded => Ok(TargetOutcome::Infeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::signature_of;
    use crate::model::{Activation, LayerSpec};

    /// 2 inputs, hidden = identity with bias -0.05, 2 classes.
    fn toy() -> NetworkModel {
        NetworkModel::new(
            2,
            vec![
                LayerSpec::new(
                    vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    vec![-0.05, -0.05],
                    Activation::Relu,
                )
                .unwrap(),
                LayerSpec::new(
                    vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    vec![0.0, 0.0],
                    Activation::Linear,
                )
                .unwrap(),
            ],
        )
        .unwrap()
    }

    fn seed_and_sig(model: &NetworkModel, x: Vec<f64>) -> (InputVector, ActivationSignature) {
        let x = InputVector::new(x).unwrap();
        let sig = signature_of(&model.forward_with_trace(&x).unwrap().1);
        (x, sig)
    }

    #[test]
    fn first_layer_forms_are_raw_rows() {
        let m = crate::fixture::random_model(&[5, 3, 2, 2], 4).unwrap();
        let off = ActivationSignature::from_bits(vec![vec![false; 3], vec![false; 2]]);
        let forms = propagate_affine(&m, &off, 1).unwrap();
        for (k, f) in forms[0].iter().enumerate() {
            assert_eq!(f.coeffs, m.layers()[0].row(k));
            assert_eq!(f.constant, m.layers()[0].bias()[k]);
        }
        for (k, f) in forms[1].iter().enumerate() {
            assert!(f.coeffs.iter().all(|&c| c == 0.0));
            assert_eq!(f.constant, m.layers()[1].bias()[k]);
        }
        assert!(propagate_affine(&m, &off, 2).is_err());
    }

    #[test]
    fn own_configuration_has_zero_distance() {
        let m = toy();
        let (x, sig) = seed_and_sig(&m, vec![0.1, 0.0]);
        let combo = Combination::new(0, vec![0, 1]).unwrap();
        let own = Configuration::restrict(&sig, &combo);
        let outcome = solve_target(&m, &x, &sig, &combo, &own, &EncodingParams::default()).unwrap();
        match outcome {
            TargetOutcome::Found { distance, .. } => assert!(distance.abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toy_target_distance() {
        // second neuron needs x'_2 >= 0.05 + eps; the first stays active.
        let m = toy();
        let (x, sig) = seed_and_sig(&m, vec![0.1, 0.0]);
        let combo = Combination::new(0, vec![0, 1]).unwrap();
        let config = Configuration::from_bits(vec![true, true]);
        let params = EncodingParams::default();
        match solve_target(&m, &x, &sig, &combo, &config, &params).unwrap() {
            TargetOutcome::Found { input, distance } => {
                assert!((distance - (0.05 + params.epsilon)).abs() < 1e-9, "{distance}");
                assert!(verify_target(&m, &input, &combo, &config).unwrap());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        // bias -0.5 keeps neuron 1 off for every x'_2 <= 0.15
        let m = NetworkModel::new(
            2,
            vec![
                LayerSpec::new(
                    vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    vec![-0.05, -0.5],
                    Activation::Relu,
                )
                .unwrap(),
                LayerSpec::new(vec![vec![1.0, 0.0]], vec![0.0], Activation::Linear).unwrap(),
            ],
        )
        .unwrap();
        let (x, sig) = seed_and_sig(&m, vec![0.1, 0.0]);
        let combo = Combination::new(0, vec![0, 1]).unwrap();
        let config = Configuration::from_bits(vec![true, true]);
        assert_eq!(
            solve_target(&m, &x, &sig, &combo, &config, &EncodingParams::default()).unwrap(),
            TargetOutcome::Infeasible
        );
    }

    #[test]
    fn boundary_zero_is_not_activated() {
        let m = toy();
        let x = InputVector::new(vec![0.05, 0.3]).unwrap();
        let combo = Combination::new(0, vec![0, 1]).unwrap();
        assert!(!verify_target(&m, &x, &combo, &Configuration::from_bits(vec![true, true])).unwrap());
        assert!(verify_target(&m, &x, &combo, &Configuration::from_bits(vec![false, true])).unwrap());
    }

    #[test]
    fn mismatched_targets_rejected() {
        let m = toy();
        let (x, sig) = seed_and_sig(&m, vec![0.1, 0.0]);
        let p = EncodingParams::default();
        let bad_layer = Combination {
            layer: 1,
            neurons: vec![0, 1],
        };
        let cfg = Configuration::from_bits(vec![true, true]);
        assert!(encode_target(&m, &x, &sig, &bad_layer, &cfg, &p).is_err());
        let bad_neuron = Combination {
            layer: 0,
            neurons: vec![0, 2],
        };
        assert!(encode_target(&m, &x, &sig, &bad_neuron, &cfg, &p).is_err());
        let combo = Combination::new(0, vec![0, 1]).unwrap();
        assert!(encode_target(&m, &x, &sig, &combo, &Configuration::from_bits(vec![true]), &p).is_err());
    }

    #[test]
    fn params_validated() {
        assert!(EncodingParams::new(0.0, 1e-4).is_err());
        assert!(EncodingParams::new(0.1, 0.0).is_err());
        assert!(EncodingParams::new(0.1, 0.2).is_err());
        assert!(EncodingParams::new(0.15, 1e-4).is_ok());
    }
}
