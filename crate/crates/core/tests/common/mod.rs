//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the library's evaluation, coverage or solver code;
//! each oracle recomputes its answer from first principles.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashSet;

use ctcov_core::{LinearProgram, NetworkModel};
use rand::Rng;

/// Plain double loop over the model's weights.
pub fn naive_forward(model: &NetworkModel, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut act = x.to_vec();
    let mut pre_trace = Vec::new();
    let layers = model.layers();
    for (li, layer) in layers.iter().enumerate() {
        let mut pre = vec![0.0; layer.width()];
        for i in 0..layer.width() {
            let mut s = 0.0;
            for j in 0..layer.fan_in() {
                s += layer.weight(i, j) * act[j];
            }
            pre[i] = s + layer.bias()[i];
        }
        if li + 1 == layers.len() {
            return (pre, pre_trace);
        }
        act = pre.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        pre_trace.push(pre);
    }
    unreachable!("model has an output layer")
}

pub fn naive_class(model: &NetworkModel, x: &[f64]) -> usize {
    let (logits, _) = naive_forward(model, x);
    let mut best = 0;
    for i in 0..logits.len() {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    best
}

pub fn naive_bits(model: &NetworkModel, x: &[f64]) -> Vec<Vec<bool>> {
    naive_forward(model, x)
        .1
        .iter()
        .map(|l| l.iter().map(|&v| v > 0.0).collect())
        .collect()
}

/// Counts from a brute-force rescan of every test for every combination.
#[derive(Debug, Clone, PartialEq)]
pub struct RecountLayer {
    pub combos: u64,
    pub full: u64,
    pub covered_pairs: u64,
    /// Number of configurations covered, one entry per combination.
    pub per_combo: Vec<u64>,
}

impl RecountLayer {
    pub fn completeness(&self, p: f64, way: usize) -> u64 {
        let total = (1u64 << way) as f64;
        self.per_combo.iter().filter(|&&c| c as f64 / total >= p).count() as u64
    }
}

/// Enumerates combinations as bitmasks with `way` set bits, and for each one
/// collects the distinct configurations seen across all tests.
pub fn brute_force_recount(tests: &[Vec<Vec<bool>>], widths: &[usize], way: usize) -> Vec<RecountLayer> {
    widths
        .iter()
        .enumerate()
        .map(|(l, &w)| {
            let mut layer = RecountLayer {
                combos: 0,
                full: 0,
                covered_pairs: 0,
                per_combo: Vec::new(),
            };
            for mask in 0u32..(1 << w) {
                if mask.count_ones() as usize != way {
                    continue;
                }
                let members: Vec<usize> = (0..w).filter(|&n| mask >> n & 1 == 1).collect();
                let mut seen: HashSet<Vec<bool>> = HashSet::new();
                for t in tests {
                    seen.insert(members.iter().map(|&n| t[l][n]).collect());
                }
                layer.combos += 1;
                layer.covered_pairs += seen.len() as u64;
                if seen.len() == 1 << way {
                    layer.full += 1;
                }
                layer.per_combo.push(seen.len() as u64);
            }
            layer
        })
        .collect()
}

pub fn random_bits<R: Rng>(rng: &mut R, widths: &[usize], bias: f64) -> Vec<Vec<bool>> {
    widths
        .iter()
        .map(|&w| (0..w).map(|_| rng.random::<f64>() < bias).collect())
        .collect()
}

/// Solves a square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn violation(lp: &LinearProgram, x: &[f64]) -> f64 {
    let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    let mut worst: f64 = 0.0;
    for r in lp.inequalities() {
        worst = worst.max(dot(&r.coeffs) - r.rhs);
    }
    for r in lp.equalities() {
        worst = worst.max((dot(&r.coeffs) - r.rhs).abs());
    }
    for (v, &(lo, hi)) in x.iter().zip(lp.bounds()) {
        worst = worst.max(lo - v).max(v - hi);
    }
    worst
}

/// Minimum objective over all basic feasible points of a box-bounded LP,
/// found by intersecting every choice of `n` active constraints. `None`
/// means no vertex is feasible.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let n = lp.var_count();
    let mut halfspaces: Vec<(Vec<f64>, f64)> = lp
        .inequalities()
        .iter()
        .map(|r| (r.coeffs.clone(), r.rhs))
        .collect();
    for (j, &(lo, hi)) in lp.bounds().iter().enumerate() {
        assert!(lo.is_finite() && hi.is_finite(), "oracle needs a bounded box");
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        halfspaces.push((e.clone(), hi));
        halfspaces.push((e, lo));
    }
    let equalities: Vec<(Vec<f64>, f64)> = lp
        .equalities()
        .iter()
        .map(|r| (r.coeffs.clone(), r.rhs))
        .collect();
    if equalities.len() > n {
        return None;
    }
    let pick = n - equalities.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut chosen = Vec::with_capacity(pick);
    subsets(halfspaces.len(), pick, 0, &mut chosen, &mut |idx| {
        let mut a: Vec<Vec<f64>> = equalities.iter().map(|e| e.0.clone()).collect();
        let mut b: Vec<f64> = equalities.iter().map(|e| e.1).collect();
        for &i in idx {
            a.push(halfspaces[i].0.clone());
            b.push(halfspaces[i].1);
        }
        if let Some(x) = solve_square(a, b) {
            if violation(lp, &x) <= 1e-9 {
                let obj: f64 = lp.objective().iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
        }
    });
    best
}

fn subsets(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    for i in start..n {
        if n - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        subsets(n, k, i + 1, chosen, f);
        chosen.pop();
    }
}

/// Random box-bounded LP with at most 6 variables and 10 rows.
pub fn random_bounded_lp<R: Rng>(rng: &mut R) -> LinearProgram {
    let n = rng.random_range(1..=6);
    let rows = rng.random_range(0..=10);
    let mut lp = LinearProgram::new(n);
    lp.set_objective((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    for j in 0..n {
        let lo = rng.random_range(-2.0..0.0);
        let hi = rng.random_range(0.5..2.0);
        lp.set_bounds(j, lo, hi);
    }
    let equality = rows > 0 && rng.random_bool(0.25);
    for r in 0..rows {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rhs = rng.random_range(-0.6..1.0);
        if equality && r == 0 {
            lp.add_eq(coeffs, rhs);
        } else {
            lp.add_le(coeffs, rhs);
        }
    }
    lp
}

/// A small random model, a seed input, and a random target in one of its
/// hidden layers.
pub struct EncoderCase {
    pub model: NetworkModel,
    pub seed: ctcov_core::InputVector,
    pub combo: ctcov_core::Combination,
    pub config: ctcov_core::Configuration,
}

pub fn random_encoder_case<R: Rng>(rng: &mut R) -> EncoderCase {
    let inputs = rng.random_range(2..=6);
    let hidden: Vec<usize> = (0..rng.random_range(1..=3))
        .map(|_| rng.random_range(2..=6))
        .collect();
    let mut widths = vec![inputs];
    widths.extend(&hidden);
    widths.push(rng.random_range(2..=3));
    let model = ctcov_core::fixture::random_model(&widths, rng.random()).unwrap();
    let seed = ctcov_core::InputVector::new((0..inputs).map(|_| rng.random::<f64>()).collect()).unwrap();
    let layer = rng.random_range(0..hidden.len());
    let way = rng.random_range(1..=hidden[layer].min(3));
    let mut neurons: Vec<usize> = (0..hidden[layer]).collect();
    while neurons.len() > way {
        neurons.remove(rng.random_range(0..neurons.len()));
    }
    let combo = ctcov_core::Combination::new(layer, neurons).unwrap();
    let config = ctcov_core::Configuration::from_index(rng.random_range(0..1 << way), way);
    EncoderCase {
        model,
        seed,
        combo,
        config,
    }
}
