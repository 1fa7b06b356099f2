//! Test generation around seed inputs: the uniform random baseline and
//! layer-by-layer coverage-guided generation, plus the robustness verdicts
//! built from their results.
//!
//! Guided generation, for each seed independently:
//!
//! 1. start from a coverage table holding every seed's signature;
//! 2. for each hidden layer in order, list the layer's uncovered targets;
//! 3. repeatedly draw one target uniformly at random, try to reach it with an
//!    LP solve around the seed, drop every target the resulting test hits
//!    (plus the drawn one, hit or not), and record the test;
//! 4. stop a layer when no targets remain, the per-layer solve cap is hit, or
//!    the seed's time limit expires.
//!
//! Seeds run in parallel on private tables that are merged in seed order, and
//! each seed draws from its own RNG stream, so results do not depend on the
//! worker count.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{signature_of_raw, ActivationSignature, CoverageTable, Target};
use crate::encoder::{solve_target, EncodingParams, TargetOutcome};
use crate::error::{Error, Result};
use crate::model::{argmax, InputVector, NetworkModel};
use crate::report::{
    CoverageRow, DatasetRecord, IssueCount, IssueOverlap, RobustnessReport, RunMetadata, SeedVerdict,
};

/// A correctly classified input around which tests are generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub id: u64,
    pub input: InputVector,
    pub label: usize,
}

impl Seed {
    pub fn new(model: &NetworkModel, id: u64, input: InputVector, label: usize) -> Result<Self> {
        let predicted = model.classify(&input)?;
        if predicted != label {
            return Err(Error::MisclassifiedSeed { id, label, predicted });
        }
        Ok(Self { id, input, label })
    }

    pub fn from_record(model: &NetworkModel, record: &DatasetRecord) -> Result<Self> {
        Self::new(model, record.id, record.input()?, record.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Provenance {
    Random,
    Ct(Target),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTest {
    pub input: InputVector,
    pub seed_id: u64,
    pub seed_label: usize,
    pub provenance: Provenance,
    /// L∞ distance to the seed input.
    pub distance: f64,
    pub predicted: usize,
    pub adversarial: bool,
}

impl GeneratedTest {
    fn evaluate(
        model: &NetworkModel,
        seed: &Seed,
        input: InputVector,
        provenance: Provenance,
        d: f64,
    ) -> (Self, ActivationSignature) {
        let (logits, trace) = model.forward_raw(input.as_slice());
        let predicted = argmax(&logits);
        let distance = input.linf_distance(&seed.input);
        let test = Self {
            seed_id: seed.id,
            seed_label: seed.label,
            provenance,
            distance,
            predicted,
            adversarial: distance <= d && predicted != seed.label,
            input,
        };
        (test, crate::coverage::signature_of(&trace))
    }
}

/// True iff `candidate` lies within L∞ distance `d` of the seed and is
/// classified differently, i.e. witnesses that the model is not
/// `d`-locally-robust at the seed.
pub fn is_adversarial(model: &NetworkModel, seed: &Seed, candidate: &InputVector, d: f64) -> Result<bool> {
    if candidate.len() != seed.input.len() {
        return Err(Error::DimensionMismatch(format!(
            "candidate has {} components, seed has {}",
            candidate.len(),
            seed.input.len()
        )));
    }
    Ok(candidate.linf_distance(&seed.input) <= d && model.classify(candidate)? != seed.label)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenBudget {
    pub t: usize,
    pub d: f64,
    pub epsilon: f64,
    pub rng_seed: u64,
    /// Wall-clock limit per seed.
    pub time_limit: Option<Duration>,
    pub max_solves_per_layer: Option<usize>,
}

impl GenBudget {
    pub fn new(t: usize, d: f64, rng_seed: u64) -> Self {
        Self {
            t,
            d,
            epsilon: EncodingParams::default().epsilon,
            rng_seed,
            time_limit: None,
            max_solves_per_layer: None,
        }
    }

    pub fn validate(&self) -> Result<EncodingParams> {
        if !(1..=crate::coverage::MAX_WAY).contains(&self.t) {
            return Err(Error::InvalidParameter(format!(
                "t = {} must be 1, 2 or 3",
                self.t
            )));
        }
        if self.max_solves_per_layer == Some(0) {
            return Err(Error::InvalidParameter(
                "max solves per layer must be positive".into(),
            ));
        }
        if self.time_limit == Some(Duration::ZERO) {
            return Err(Error::InvalidParameter("time limit must be positive".into()));
        }
        EncodingParams::new(self.d, self.epsilon)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const RANDOM_STREAM: u64 = 0x7261_6e64;
const CT_STREAM: u64 = 0x6374;

/// RNG stream for one seed, independent of scheduling.
pub fn seed_rng(rng_seed: u64, seed_id: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(rng_seed ^ splitmix64(seed_id ^ splitmix64(stream))))
}

/// `n` tests, each component drawn uniformly from `[x_j - d, x_j + d]` and
/// clipped to `[0, 1]`.
pub fn random_testgen<R: Rng + ?Sized>(
    model: &NetworkModel,
    seed: &Seed,
    n: usize,
    d: f64,
    rng: &mut R,
) -> Result<Vec<GeneratedTest>> {
    Ok(random_tests(model, seed, n, d, rng)?
        .into_iter()
        .map(|(t, _)| t)
        .collect())
}

fn random_tests<R: Rng + ?Sized>(
    model: &NetworkModel,
    seed: &Seed,
    n: usize,
    d: f64,
    rng: &mut R,
) -> Result<Vec<(GeneratedTest, ActivationSignature)>> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget d = {d} must be non-negative"
        )));
    }
    if seed.input.len() != model.input_dim() {
        return Err(Error::DimensionMismatch("seed does not match model input".into()));
    }
    Ok((0..n)
        .map(|_| {
            let x: Vec<f64> = seed
                .input
                .as_slice()
                .iter()
                .map(|&v| (v + d * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0))
                .collect();
            let input = InputVector::new(x).expect("clamped into [0, 1]");
            GeneratedTest::evaluate(model, seed, input, Provenance::Random, d)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    Ct,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Ct => "ct",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedStats {
    pub id: u64,
    pub label: usize,
    pub tests: u64,
    pub adversarial: u64,
    pub lp_solves: u64,
    pub infeasible: u64,
    pub solver_failures: u64,
    pub time_limit_hit: bool,
}

/// Coverage after one stage of generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// Hidden layer whose targets were just processed; `None` for the random
    /// baseline, which has a single stage.
    pub layer: Option<usize>,
    pub table: CoverageTable,
    pub accumulated_tests: u64,
    pub adversarial_tests: u64,
}

/// Everything one generation method produced over a seed set.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    /// The suite `T`, in seed order then generation order.
    pub tests: Vec<GeneratedTest>,
    pub seeds: Vec<SeedStats>,
    pub stages: Vec<Stage>,
    /// Seed signatures plus every generated test.
    pub table: CoverageTable,
}

impl MethodRun {
    /// The adversarial subset `T'` of the suite.
    pub fn adversarial(&self) -> impl Iterator<Item = &GeneratedTest> {
        self.tests.iter().filter(|t| t.adversarial)
    }

    pub fn final_stage(&self) -> &Stage {
        self.stages.last().expect("a run has at least one stage")
    }
}

fn seed_table(model: &NetworkModel, seeds: &[Seed], t: usize) -> Result<CoverageTable> {
    let mut table = CoverageTable::for_model(model, t)?;
    for s in seeds {
        if s.input.len() != model.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "seed {} does not match the model input",
                s.id
            )));
        }
        table.update(&signature_of_raw(model, s.input.as_slice()))?;
    }
    Ok(table)
}

struct SeedWork {
    stats: SeedStats,
    /// (test, its signature, stage key)
    tests: Vec<(GeneratedTest, ActivationSignature, usize)>,
    table: CoverageTable,
}

fn stats_for(seed: &Seed) -> SeedStats {
    SeedStats {
        id: seed.id,
        label: seed.label,
        ..SeedStats::default()
    }
}

/// Splits `total` tests over `seeds` as evenly as possible, earlier seeds
/// taking the remainder.
pub fn split_budget(total: usize, seeds: usize) -> Vec<usize> {
    if seeds == 0 {
        return Vec::new();
    }
    (0..seeds)
        .map(|i| total / seeds + usize::from(i < total % seeds))
        .collect()
}

/// Random baseline over a seed set; `tests_per_seed[i]` tests for seed `i`.
pub fn random_suite(
    model: &NetworkModel,
    seeds: &[Seed],
    tests_per_seed: &[usize],
    d: f64,
    t: usize,
    rng_seed: u64,
) -> Result<MethodRun> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds".into()));
    }
    if tests_per_seed.len() != seeds.len() {
        return Err(Error::InvalidParameter("one test count per seed required".into()));
    }
    let init = seed_table(model, seeds, t)?;
    let work = seeds
        .par_iter()
        .zip(tests_per_seed)
        .map(|(seed, &n)| {
            let mut rng = seed_rng(rng_seed, seed.id, RANDOM_STREAM);
            let tests = random_tests(model, seed, n, d, &mut rng)?;
            let mut table = init.clone();
            let mut stats = stats_for(seed);
            for (test, sig) in &tests {
                table.update(sig)?;
                stats.tests += 1;
                stats.adversarial += test.adversarial as u64;
            }
            Ok(SeedWork {
                stats,
                tests: tests.into_iter().map(|(t, s)| (t, s, 0)).collect(),
                table,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(Method::Random, init, work, &[None])
}

/// Merges per-seed results in seed order and replays them stage by stage.
fn assemble(
    method: Method,
    init: CoverageTable,
    work: Vec<SeedWork>,
    stage_layers: &[Option<usize>],
) -> Result<MethodRun> {
    let mut table = init.clone();
    for w in &work {
        table.merge_from(&w.table)?;
    }

    let mut stages = Vec::with_capacity(stage_layers.len());
    let mut replay = init;
    let (mut accumulated, mut adversarial) = (0u64, 0u64);
    for (key, &layer) in stage_layers.iter().enumerate() {
        for w in &work {
            for (test, sig, _) in w.tests.iter().filter(|(_, _, k)| *k == key) {
                replay.update(sig)?;
                accumulated += 1;
                adversarial += test.adversarial as u64;
            }
        }
        stages.push(Stage {
            layer,
            table: replay.clone(),
            accumulated_tests: accumulated,
            adversarial_tests: adversarial,
        });
    }
    debug_assert_eq!(replay, table);

    let mut tests = Vec::new();
    let mut seeds = Vec::with_capacity(work.len());
    for w in work {
        seeds.push(w.stats);
        tests.extend(w.tests.into_iter().map(|(t, _, _)| t));
    }
    Ok(MethodRun {
        method,
        tests,
        seeds,
        stages,
        table,
    })
}

/// Coverage-guided generation over `seeds`.
pub fn ct_testgen(model: &NetworkModel, seeds: &[Seed], budget: &GenBudget) -> Result<MethodRun> {
    let params = budget.validate()?;
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds".into()));
    }
    for s in seeds {
        let predicted = model.classify(&s.input)?;
        if predicted != s.label {
            return Err(Error::MisclassifiedSeed {
                id: s.id,
                label: s.label,
                predicted,
            });
        }
    }
    let init = seed_table(model, seeds, budget.t)?;
    let work = seeds
        .par_iter()
        .map(|seed| ct_seed(model, seed, &init, budget, &params))
        .collect::<Result<Vec<_>>>()?;
    let layers: Vec<Option<usize>> = (0..model.hidden_layers().len()).map(Some).collect();
    assemble(Method::Ct, init, work, &layers)
}

fn ct_seed(
    model: &NetworkModel,
    seed: &Seed,
    init: &CoverageTable,
    budget: &GenBudget,
    params: &EncodingParams,
) -> Result<SeedWork> {
    let started = Instant::now();
    let mut rng = seed_rng(budget.rng_seed, seed.id, CT_STREAM);
    let seed_sig = signature_of_raw(model, seed.input.as_slice());
    let mut table = init.clone();
    let mut stats = stats_for(seed);
    let mut tests = Vec::new();

    'layers: for layer in 0..table.layer_count() {
        let mut targets = table.uncovered_targets(layer)?;
        let mut solves = 0usize;
        while !targets.is_empty() {
            if budget.time_limit.is_some_and(|limit| started.elapsed() >= limit) {
                stats.time_limit_hit = true;
                debug!("seed {}: time limit reached in layer {layer}", seed.id);
                break 'layers;
            }
            if budget.max_solves_per_layer.is_some_and(|cap| solves >= cap) {
                break;
            }
            let target = targets.swap_remove(rng.random_range(0..targets.len()));
            solves += 1;
            stats.lp_solves += 1;
            let outcome = solve_target(
                model,
                &seed.input,
                &seed_sig,
                &target.combination,
                &target.configuration,
                params,
            );
            match outcome {
                Ok(TargetOutcome::Found { input, .. }) => {
                    let (test, sig) =
                        GeneratedTest::evaluate(model, seed, input, Provenance::Ct(target), budget.d);
                    targets.retain(|t| !t.is_hit_by(&sig));
                    table.update(&sig)?;
                    stats.tests += 1;
                    stats.adversarial += test.adversarial as u64;
                    tests.push((test, sig, layer));
                }
                Ok(TargetOutcome::Infeasible) => stats.infeasible += 1,
                Err(Error::IterationLimit(cap)) => {
                    warn!(
                        "seed {}: target {target} skipped, simplex exceeded {cap} pivots",
                        seed.id
                    );
                    stats.solver_failures += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(SeedWork { stats, tests, table })
}

/// Non-robust seed overlap of two result sets over the same seeds.
pub fn compare_issues(first: &[SeedVerdict], second: &[SeedVerdict]) -> Result<IssueOverlap> {
    let ids = |v: &[SeedVerdict]| v.iter().map(|s| s.id).collect::<BTreeSet<_>>();
    if ids(first) != ids(second) {
        return Err(Error::SeedMismatch(
            "both result sets must cover the same seed ids".into(),
        ));
    }
    let flagged = |v: &[SeedVerdict]| {
        v.iter()
            .filter(|s| !s.robust)
            .map(|s| s.id)
            .collect::<BTreeSet<_>>()
    };
    let (a, b) = (flagged(first), flagged(second));
    let label = |v: &[SeedVerdict]| {
        v.first()
            .map(|s| format!("{}/{}", s.model, s.method))
            .unwrap_or_default()
    };
    Ok(IssueOverlap {
        first: label(first),
        second: label(second),
        unique: a.union(&b).count() as u64,
        shared: a.intersection(&b).count() as u64,
    })
}

/// Builds the report for one or two (model name, run) result sets. With two,
/// the overlap of their non-robust seeds is included.
pub fn robustness_summary(runs: &[(&str, &MethodRun)], metadata: RunMetadata) -> Result<RobustnessReport> {
    if runs.is_empty() {
        return Err(Error::InvalidParameter("no results to summarize".into()));
    }
    let ps = metadata.p_thresholds.clone();
    let mut report = RobustnessReport::new(metadata);
    let mut verdict_sets = Vec::new();
    for &(model, run) in runs {
        let method = run.method.as_str();
        for stage in &run.stages {
            report.rows.push(CoverageRow::from_table(
                model,
                method,
                stage.layer,
                &stage.table,
                &ps,
                stage.accumulated_tests,
                stage.adversarial_tests,
            )?);
        }
        let verdicts: Vec<SeedVerdict> = run
            .seeds
            .iter()
            .map(|s| SeedVerdict {
                model: model.to_string(),
                method: method.to_string(),
                id: s.id,
                label: s.label,
                tests: s.tests,
                adversarial: s.adversarial,
                robust: s.adversarial == 0,
                lp_solves: s.lp_solves,
                infeasible: s.infeasible,
                solver_failures: s.solver_failures,
                time_limit_hit: s.time_limit_hit,
            })
            .collect();
        report.issues.push(IssueCount {
            model: model.to_string(),
            method: method.to_string(),
            seeds: verdicts.len() as u64,
            non_robust: verdicts.iter().filter(|v| !v.robust).count() as u64,
        });
        report.seeds.extend(verdicts.iter().cloned());
        verdict_sets.push(verdicts);
    }
    if let [a, b] = verdict_sets.as_slice() {
        report.overlap = Some(compare_issues(a, b)?);
    }
    report.canonicalize();
    Ok(report)
}
