mod common;

use ctcov_core::fixture::{random_model, random_seeds};
use ctcov_core::{signature_of, Activation, InputVector, LayerSpec, NetworkModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_input(rng: &mut ChaCha8Rng, n: usize) -> InputVector {
    InputVector::new((0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
}

#[test]
fn forward_matches_naive_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200u64 {
        let depth = rng.random_range(1..=4);
        let mut widths = vec![rng.random_range(1..=12)];
        widths.extend((0..depth).map(|_| rng.random_range(1..=10)));
        widths.push(rng.random_range(2..=5));
        let model = random_model(&widths, case).unwrap();
        for _ in 0..5 {
            let x = random_input(&mut rng, widths[0]);
            let (logits, trace) = model.forward_with_trace(&x).unwrap();
            let (want_logits, want_trace) = common::naive_forward(&model, x.as_slice());
            for (a, b) in logits.iter().zip(&want_logits) {
                assert!((a - b).abs() <= 1e-9, "logit {a} vs {b}");
            }
            assert_eq!(trace.layers.len(), want_trace.len());
            for (la, lb) in trace.layers.iter().zip(&want_trace) {
                for (a, b) in la.iter().zip(lb) {
                    assert!((a - b).abs() <= 1e-9);
                }
            }
            assert_eq!(
                model.classify(&x).unwrap(),
                common::naive_class(&model, x.as_slice())
            );
            let sig = signature_of(&trace);
            assert_eq!(sig.layers(), common::naive_bits(&model, x.as_slice()).as_slice());
        }
    }
}

#[test]
fn reference_architecture_parameter_counts() {
    let a = random_model(&[784, 64, 32, 64, 10], 1).unwrap();
    let b = random_model(&[784, 84, 42, 64, 42, 84, 10], 1).unwrap();
    assert_eq!(a.param_count(), 55_082);
    assert_eq!(b.param_count(), 79_454);
}

#[test]
fn param_count_is_sum_of_layer_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let widths: Vec<usize> = (0..rng.random_range(3..=6))
            .map(|_| rng.random_range(1..=20))
            .collect();
        let model = random_model(&widths, 0).unwrap();
        let want: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        assert_eq!(model.param_count(), want);
    }
}

#[test]
fn constant_logit_shift_keeps_the_class() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = random_model(&[6, 5, 4, 3], 9).unwrap();
    let mut layers = model.layers().to_vec();
    let last = layers.pop().unwrap();
    let weights: Vec<Vec<f64>> = (0..last.width()).map(|i| last.row(i).to_vec()).collect();
    let bias: Vec<f64> = last.bias().iter().map(|b| b + 2.5).collect();
    layers.push(LayerSpec::new(weights, bias, Activation::Linear).unwrap());
    let shifted = NetworkModel::new(6, layers).unwrap();
    for _ in 0..100 {
        let x = random_input(&mut rng, 6);
        assert_eq!(model.classify(&x).unwrap(), shifted.classify(&x).unwrap());
    }
}

#[test]
fn model_file_round_trip_is_exact() {
    let model = random_model(&[8, 7, 6, 3], 42).unwrap();
    let mut buf = Vec::new();
    model.write(&mut buf).unwrap();
    let back = NetworkModel::load(buf.as_slice()).unwrap();
    assert_eq!(model, back);
    let mut again = Vec::new();
    back.write(&mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn fixture_seeds_are_correctly_classified() {
    let model = random_model(&[36, 16, 8, 16, 4], 7).unwrap();
    for rec in random_seeds(&model, 25, 7) {
        let x = rec.input().unwrap();
        assert_eq!(common::naive_class(&model, x.as_slice()), rec.label);
    }
}
