//! Combinatorial (t-way) coverage of neuron-activation configurations.
//!
//! A neuron is *activated* by an input when its pre-activation value is
//! strictly positive; zero counts as deactivated. For every hidden layer the
//! table tracks, per t-way combination of that layer's neurons, which of the
//! `2^t` activation configurations some input has exhibited. Combinations
//! never mix neurons from different layers.
//!
//! Configurations are indexed as binary numbers with the first (lowest-index)
//! neuron of the combination as the most significant bit, so `(0, 1)` is 1
//! and `(1, 0)` is 2.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NetworkModel, PreActivationTrace};

/// Largest supported interaction strength.
pub const MAX_WAY: usize = 3;

/// Hard cap on the number of (layer, combination) entries in one table.
pub const MAX_TABLE_ENTRIES: u64 = 1 << 26;

/// Activation bit of every hidden neuron for one input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationSignature {
    layers: Vec<Vec<bool>>,
}

impl ActivationSignature {
    pub fn from_trace(trace: &PreActivationTrace) -> Self {
        Self {
            layers: trace
                .layers
                .iter()
                .map(|layer| layer.iter().map(|&v| v > 0.0).collect())
                .collect(),
        }
    }

    pub fn from_bits(layers: Vec<Vec<bool>>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[Vec<bool>] {
        &self.layers
    }

    pub fn layer(&self, layer: usize) -> &[bool] {
        &self.layers[layer]
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// Copy of this signature with the combination's neurons forced to `config`.
    pub fn with_override(&self, combo: &Combination, config: &Configuration) -> Self {
        let mut out = self.clone();
        for (&n, &b) in combo.neurons.iter().zip(config.bits()) {
            out.layers[combo.layer][n] = b;
        }
        out
    }
}

/// Binarizes a pre-activation trace.
pub fn signature_of(trace: &PreActivationTrace) -> ActivationSignature {
    ActivationSignature::from_trace(trace)
}

/// Signature of `x` under `model`, skipping the input validation of
/// [`NetworkModel::forward_with_trace`].
pub(crate) fn signature_of_raw(model: &NetworkModel, x: &[f64]) -> ActivationSignature {
    signature_of(&model.forward_raw(x).1)
}

/// A set of `t` distinct neurons of one hidden layer, indices increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Combination {
    pub layer: usize,
    pub neurons: Vec<usize>,
}

impl Combination {
    pub fn new(layer: usize, neurons: Vec<usize>) -> Result<Self> {
        if neurons.is_empty() || neurons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "combination neurons {neurons:?} must be non-empty and strictly increasing"
            )));
        }
        Ok(Self { layer, neurons })
    }

    pub fn way(&self) -> usize {
        self.neurons.len()
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}{{", self.layer)?;
        for (i, n) in self.neurons.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "n{n}")?;
        }
        write!(f, "}}")
    }
}

/// Activation bits over the neurons of a combination, in neuron order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<bool>);

impl Configuration {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn from_index(index: usize, way: usize) -> Self {
        Self((0..way).map(|k| index >> (way - 1 - k) & 1 == 1).collect())
    }

    /// Restriction of `sig` to `combo`.
    pub fn restrict(sig: &ActivationSignature, combo: &Combination) -> Self {
        let layer = sig.layer(combo.layer);
        Self(combo.neurons.iter().map(|&n| layer[n]).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| acc << 1 | b as usize)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", *b as u8)?;
        }
        write!(f, ")")
    }
}

/// A (combination, configuration) pair that coverage may or may not include.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Target {
    pub combination: Combination,
    pub configuration: Configuration,
}

impl Target {
    pub fn is_hit_by(&self, sig: &ActivationSignature) -> bool {
        let layer = sig.layer(self.combination.layer);
        self.combination
            .neurons
            .iter()
            .zip(self.configuration.bits())
            .all(|(&n, &b)| layer[n] == b)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.combination, self.configuration)
    }
}

/// Exact ratio of two counts. Equality and ordering compare the rational
/// values, not the raw pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    pub fn value(&self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.value()
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        // 0/0 is treated as 0.
        let lhs = self.num as u128 * other.den.max(1) as u128;
        let rhs = other.num as u128 * self.den.max(1) as u128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Sparse,
    Dense,
    /// (p, t)-completeness.
    Completeness(f64),
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All `t`-subsets of `0..width` in lexicographic order.
pub fn enumerate_combinations(width: usize, way: usize) -> Result<Vec<Vec<usize>>> {
    if way == 0 || way > width {
        return Err(Error::InvalidParameter(format!(
            "combination size {way} must be between 1 and the layer width {width}"
        )));
    }
    let mut out = Vec::with_capacity(binomial(width, way) as usize);
    let mut current: Vec<usize> = (0..way).collect();
    loop {
        out.push(current.clone());
        // rightmost position that can still advance
        let Some(i) = (0..way).rev().find(|&i| current[i] < width - way + i) else {
            break;
        };
        current[i] += 1;
        for j in i + 1..way {
            current[j] = current[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Position of `neurons` in the lexicographic order of [`enumerate_combinations`].
fn lex_rank(width: usize, neurons: &[usize]) -> usize {
    let way = neurons.len();
    let mut rank = 0u64;
    let mut start = 0;
    for (i, &n) in neurons.iter().enumerate() {
        for skipped in start..n {
            rank += binomial(width - 1 - skipped, way - 1 - i);
        }
        start = n + 1;
    }
    rank as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LayerCoverage {
    width: usize,
    /// Neuron tuples, `way` entries per combination, in lexicographic order.
    combos: Vec<u32>,
    /// One bit per configuration index, per combination.
    masks: Vec<u8>,
}

impl LayerCoverage {
    fn combination_count(&self) -> usize {
        self.masks.len()
    }
}

/// Per-layer covered configuration sets for a fixed interaction strength `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageTable {
    way: usize,
    layers: Vec<LayerCoverage>,
}

impl CoverageTable {
    /// Empty table for hidden layers of the given widths.
    pub fn new(widths: &[usize], way: usize) -> Result<Self> {
        if way == 0 || way > MAX_WAY {
            return Err(Error::InvalidParameter(format!(
                "t = {way} unsupported; expected 1..={MAX_WAY}"
            )));
        }
        if widths.is_empty() {
            return Err(Error::InvalidParameter(
                "coverage table needs at least one layer".into(),
            ));
        }
        let entries = widths
            .iter()
            .map(|&w| binomial(w, way))
            .fold(0u64, u64::saturating_add);
        if entries > MAX_TABLE_ENTRIES {
            return Err(Error::InvalidParameter(format!(
                "t = {way} over widths {widths:?} needs {entries} combinations \
                 (~{} MiB), above the cap of {MAX_TABLE_ENTRIES}",
                entries.saturating_mul(1 + 4 * way as u64) >> 20
            )));
        }
        let layers = widths
            .iter()
            .map(|&width| {
                let combos = enumerate_combinations(width, way)?;
                let masks = vec![0u8; combos.len()];
                Ok(LayerCoverage {
                    width,
                    combos: combos.into_iter().flatten().map(|n| n as u32).collect(),
                    masks,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { way, layers })
    }

    pub fn for_model(model: &NetworkModel, way: usize) -> Result<Self> {
        Self::new(&model.hidden_widths(), way)
    }

    pub fn way(&self) -> usize {
        self.way
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.width).collect()
    }

    pub fn combination_count(&self, layer: usize) -> Result<usize> {
        Ok(self.layer(layer)?.combination_count())
    }

    fn layer(&self, layer: usize) -> Result<&LayerCoverage> {
        self.layers.get(layer).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "layer {layer} does not exist; table has {} layers",
                self.layers.len()
            ))
        })
    }

    fn configs_per_combination(&self) -> u64 {
        1 << self.way
    }

    /// Marks every configuration `sig` exhibits and returns how many
    /// (combination, configuration) pairs were not covered before.
    pub fn update(&mut self, sig: &ActivationSignature) -> Result<usize> {
        if sig.widths() != self.widths() {
            return Err(Error::DimensionMismatch(format!(
                "signature widths {:?} do not match table widths {:?}",
                sig.widths(),
                self.widths()
            )));
        }
        let way = self.way;
        let mut fresh = 0;
        for (layer, bits) in self.layers.iter_mut().zip(sig.layers()) {
            for (mask, combo) in layer.masks.iter_mut().zip(layer.combos.chunks_exact(way)) {
                let index = combo
                    .iter()
                    .fold(0usize, |acc, &n| acc << 1 | bits[n as usize] as usize);
                let bit = 1u8 << index;
                if *mask & bit == 0 {
                    *mask |= bit;
                    fresh += 1;
                }
            }
        }
        Ok(fresh)
    }

    pub fn combination(&self, layer: usize, rank: usize) -> Result<Combination> {
        let l = self.layer(layer)?;
        let combo = l.combos.chunks_exact(self.way).nth(rank).ok_or_else(|| {
            Error::InvalidParameter(format!("combination rank {rank} out of range in layer {layer}"))
        })?;
        Ok(Combination {
            layer,
            neurons: combo.iter().map(|&n| n as usize).collect(),
        })
    }

    fn rank_of(&self, combo: &Combination) -> Result<usize> {
        let l = self.layer(combo.layer)?;
        if combo.way() != self.way
            || combo.neurons.iter().any(|&n| n >= l.width)
            || combo.neurons.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParameter(format!(
                "{combo} is not a {}-way combination of layer {} (width {})",
                self.way, combo.layer, l.width
            )));
        }
        Ok(lex_rank(l.width, &combo.neurons))
    }

    pub fn is_covered(&self, target: &Target) -> Result<bool> {
        let rank = self.rank_of(&target.combination)?;
        if target.configuration.len() != self.way {
            return Err(Error::InvalidParameter(format!(
                "configuration {} has the wrong length for t = {}",
                target.configuration, self.way
            )));
        }
        let mask = self.layers[target.combination.layer].masks[rank];
        Ok(mask >> target.configuration.index() & 1 == 1)
    }

    /// Number of covered configurations per combination of `layer`.
    pub fn covered_counts(&self, layer: usize) -> Result<Vec<u32>> {
        Ok(self.layer(layer)?.masks.iter().map(|m| m.count_ones()).collect())
    }

    /// Total covered (combination, configuration) pairs over all layers.
    pub fn covered_pairs(&self) -> u64 {
        self.layers
            .iter()
            .flat_map(|l| &l.masks)
            .map(|m| m.count_ones() as u64)
            .sum()
    }

    /// Fraction of `layer`'s combinations with every configuration covered.
    pub fn sparse(&self, layer: usize) -> Result<Ratio> {
        let l = self.layer(layer)?;
        Ok(self.sparse_counts(l))
    }

    /// Fraction of `layer`'s (combination, configuration) pairs covered.
    pub fn dense(&self, layer: usize) -> Result<Ratio> {
        let l = self.layer(layer)?;
        Ok(self.dense_counts(l))
    }

    /// Fraction of `layer`'s combinations whose own covered fraction is at
    /// least `p`.
    pub fn completeness(&self, layer: usize, p: f64) -> Result<Ratio> {
        check_threshold(p)?;
        let l = self.layer(layer)?;
        Ok(self.completeness_counts(l, p))
    }

    pub fn metric(&self, layer: usize, metric: Metric) -> Result<Ratio> {
        match metric {
            Metric::Sparse => self.sparse(layer),
            Metric::Dense => self.dense(layer),
            Metric::Completeness(p) => self.completeness(layer, p),
        }
    }

    /// `metric` over the union of all layers' combinations.
    pub fn aggregate(&self, metric: Metric) -> Result<Ratio> {
        if let Metric::Completeness(p) = metric {
            check_threshold(p)?;
        }
        let mut total = Ratio::new(0, 0);
        for l in &self.layers {
            let r = match metric {
                Metric::Sparse => self.sparse_counts(l),
                Metric::Dense => self.dense_counts(l),
                Metric::Completeness(p) => self.completeness_counts(l, p),
            };
            total.num += r.num;
            total.den += r.den;
        }
        Ok(total)
    }

    fn sparse_counts(&self, l: &LayerCoverage) -> Ratio {
        let full = self.configs_per_combination() as u32;
        let hit = l.masks.iter().filter(|m| m.count_ones() == full).count();
        Ratio::new(hit as u64, l.combination_count() as u64)
    }

    fn dense_counts(&self, l: &LayerCoverage) -> Ratio {
        let hit: u64 = l.masks.iter().map(|m| m.count_ones() as u64).sum();
        Ratio::new(hit, self.configs_per_combination() * l.combination_count() as u64)
    }

    fn completeness_counts(&self, l: &LayerCoverage, p: f64) -> Ratio {
        // `p * 2^t` is exact in binary floating point, so this comparison is
        // the rational test `count / 2^t >= p`.
        let needed = p * self.configs_per_combination() as f64;
        let hit = l.masks.iter().filter(|m| m.count_ones() as f64 >= needed).count();
        Ratio::new(hit as u64, l.combination_count() as u64)
    }

    /// Every uncovered pair of `layer`, ordered by combination then by
    /// configuration index.
    pub fn uncovered_targets(&self, layer: usize) -> Result<Vec<Target>> {
        let l = self.layer(layer)?;
        let mut out = Vec::new();
        for (combo, &mask) in l.combos.chunks_exact(self.way).zip(&l.masks) {
            for index in 0..1usize << self.way {
                if mask >> index & 1 == 0 {
                    out.push(Target {
                        combination: Combination {
                            layer,
                            neurons: combo.iter().map(|&n| n as usize).collect(),
                        },
                        configuration: Configuration::from_index(index, self.way),
                    });
                }
            }
        }
        Ok(out)
    }

    fn check_compatible(&self, other: &CoverageTable) -> Result<()> {
        if self.way != other.way || self.widths() != other.widths() {
            return Err(Error::InvalidParameter(format!(
                "cannot merge a t = {} table over {:?} with a t = {} table over {:?}",
                self.way,
                self.widths(),
                other.way,
                other.widths()
            )));
        }
        Ok(())
    }

    /// Union of the covered sets of two tables built for the same model and `t`.
    pub fn merge(&self, other: &CoverageTable) -> Result<CoverageTable> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &CoverageTable) -> Result<()> {
        self.check_compatible(other)?;
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            for (a, b) in mine.masks.iter_mut().zip(&theirs.masks) {
                *a |= b;
            }
        }
        Ok(())
    }
}

fn check_threshold(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "completeness threshold {p} outside [0, 1]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(bits: &[&[u8]]) -> ActivationSignature {
        ActivationSignature::from_bits(bits.iter().map(|l| l.iter().map(|&b| b == 1).collect()).collect())
    }

    fn four_rows() -> CoverageTable {
        let mut table = CoverageTable::new(&[4], 2).unwrap();
        for row in [[0, 0, 0, 0], [0, 1, 0, 1], [1, 0, 1, 0], [1, 1, 1, 1]] {
            table.update(&sig(&[&row])).unwrap();
        }
        table
    }

    #[test]
    fn binarization_boundary_is_deactivated() {
        let trace = PreActivationTrace {
            layers: vec![vec![0.0, -1.0, 2.0]],
        };
        assert_eq!(signature_of(&trace), sig(&[&[0, 0, 1]]));
        let zero = PreActivationTrace {
            layers: vec![vec![0.0; 5], vec![0.0; 2]],
        };
        assert_eq!(signature_of(&zero), sig(&[&[0; 5], &[0; 2]]));
    }

    #[test]
    fn combination_enumeration() {
        assert_eq!(
            enumerate_combinations(4, 2).unwrap(),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(enumerate_combinations(4, 4).unwrap(), vec![vec![0, 1, 2, 3]]);
        assert_eq!(enumerate_combinations(84, 2).unwrap().len(), 3486);
        assert!(enumerate_combinations(3, 4).is_err());
        assert!(enumerate_combinations(3, 0).is_err());
    }

    #[test]
    fn lex_rank_matches_enumeration() {
        for (w, t) in [(5, 1), (6, 2), (7, 3), (4, 4)] {
            for (i, c) in enumerate_combinations(w, t).unwrap().iter().enumerate() {
                assert_eq!(lex_rank(w, c), i);
            }
        }
    }

    #[test]
    fn configuration_indexing() {
        let c = Configuration::from_index(1, 2);
        assert_eq!(c.bits(), &[false, true]);
        assert_eq!(c.index(), 1);
        assert_eq!(Configuration::from_index(6, 3).bits(), &[true, true, false]);
    }

    #[test]
    fn update_counts_fresh_pairs() {
        let mut table = CoverageTable::new(&[4], 2).unwrap();
        assert_eq!(table.update(&sig(&[&[0, 0, 0, 0]])).unwrap(), 6);
        assert_eq!(table.update(&sig(&[&[0, 0, 0, 0]])).unwrap(), 0);
        let mut table = CoverageTable::new(&[4], 2).unwrap();
        let mut total = 0;
        for row in [[0, 0, 0, 0], [0, 1, 0, 1], [1, 0, 1, 0], [1, 1, 1, 1]] {
            total += table.update(&sig(&[&row])).unwrap();
        }
        assert_eq!(total, 20);
        assert!(table.update(&sig(&[&[0, 0, 0]])).is_err());
    }

    #[test]
    fn four_row_metrics() {
        let table = four_rows();
        assert_eq!(table.sparse(0).unwrap(), Ratio::new(4, 6));
        assert_eq!(table.dense(0).unwrap(), Ratio::new(20, 24));
        assert_eq!(table.completeness(0, 0.5).unwrap(), Ratio::new(1, 1));
        assert_eq!(table.completeness(0, 1.0).unwrap(), Ratio::new(4, 6));
        assert_eq!(table.completeness(0, 0.0).unwrap(), Ratio::new(1, 1));
        assert!(table.completeness(0, 1.5).is_err());
        assert!(table.completeness(0, f64::NAN).is_err());
        assert!(table.sparse(1).is_err());
    }

    #[test]
    fn four_row_uncovered_targets() {
        let targets = four_rows().uncovered_targets(0).unwrap();
        let got: Vec<String> = targets.iter().map(ToString::to_string).collect();
        assert_eq!(
            got,
            vec![
                "L0{n0,n2}=(0,1)",
                "L0{n0,n2}=(1,0)",
                "L0{n1,n3}=(0,1)",
                "L0{n1,n3}=(1,0)"
            ]
        );
        assert_eq!(
            CoverageTable::new(&[3], 2)
                .unwrap()
                .uncovered_targets(0)
                .unwrap()
                .len(),
            12
        );
    }

    #[test]
    fn empty_and_single_test_tables() {
        let mut table = CoverageTable::new(&[5], 3).unwrap();
        assert_eq!(table.sparse(0).unwrap().value(), 0.0);
        assert_eq!(table.dense(0).unwrap().value(), 0.0);
        table.update(&sig(&[&[1, 0, 1, 1, 0]])).unwrap();
        assert_eq!(table.sparse(0).unwrap().value(), 0.0);
        assert_eq!(table.dense(0).unwrap(), Ratio::new(1, 8));
        assert_eq!(table.completeness(0, 0.0).unwrap(), Ratio::new(1, 1));
    }

    #[test]
    fn fully_covered_layer_has_no_targets() {
        let mut table = CoverageTable::new(&[2], 1).unwrap();
        table.update(&sig(&[&[0, 0]])).unwrap();
        table.update(&sig(&[&[1, 1]])).unwrap();
        assert!(table.uncovered_targets(0).unwrap().is_empty());
        assert_eq!(table.sparse(0).unwrap(), Ratio::new(1, 1));
    }

    #[test]
    fn aggregate_pools_denominators() {
        let mut table = CoverageTable::new(&[2, 2], 1).unwrap();
        table.update(&sig(&[&[0, 0], &[1, 1]])).unwrap();
        table.update(&sig(&[&[1, 1], &[1, 1]])).unwrap();
        assert_eq!(table.sparse(0).unwrap(), Ratio::new(1, 1));
        assert_eq!(table.sparse(1).unwrap(), Ratio::new(0, 1));
        assert_eq!(table.aggregate(Metric::Sparse).unwrap(), Ratio::new(1, 2));
        assert_eq!(table.aggregate(Metric::Dense).unwrap(), Ratio::new(6, 8));

        let single = four_rows();
        for m in [Metric::Sparse, Metric::Dense, Metric::Completeness(0.75)] {
            assert_eq!(single.aggregate(m).unwrap(), single.metric(0, m).unwrap());
        }
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let t = four_rows();
        let empty = CoverageTable::new(&[4], 2).unwrap();
        assert_eq!(t.merge(&empty).unwrap(), t);
        assert_eq!(t.merge(&t).unwrap(), t);
        assert!(t.merge(&CoverageTable::new(&[4], 1).unwrap()).is_err());
        assert!(t.merge(&CoverageTable::new(&[5], 2).unwrap()).is_err());
    }

    #[test]
    fn target_queries() {
        let t = four_rows();
        let hole = Target {
            combination: Combination::new(0, vec![0, 2]).unwrap(),
            configuration: Configuration::from_bits(vec![false, true]),
        };
        assert!(!t.is_covered(&hole).unwrap());
        let hit = Target {
            configuration: Configuration::from_bits(vec![true, true]),
            ..hole.clone()
        };
        assert!(t.is_covered(&hit).unwrap());
        assert!(hole.is_hit_by(&sig(&[&[0, 1, 1, 0]])));
        assert!(t
            .is_covered(&Target {
                combination: Combination {
                    layer: 0,
                    neurons: vec![0, 4]
                },
                ..hole
            })
            .is_err());
    }

    #[test]
    fn rejects_unsupported_way_and_oversized_tables() {
        assert!(CoverageTable::new(&[8], 4).is_err());
        assert!(CoverageTable::new(&[8], 0).is_err());
        assert!(CoverageTable::new(&[2], 3).is_err());
        assert!(CoverageTable::new(&[2000], 3).is_err());
    }

    #[test]
    fn ratio_compares_by_value() {
        assert_eq!(Ratio::new(2, 4), Ratio::new(1, 2));
        assert!(Ratio::new(2, 3) > Ratio::new(1, 2));
        assert_eq!(Ratio::new(0, 0).value(), 0.0);
    }
}
