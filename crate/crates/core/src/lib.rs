//! Combinatorial coverage of neuron-activation configurations in dense ReLU
//! classifiers, and coverage-guided generation of perturbed tests that look
//! for local-robustness violations.
//!
//! * [`model`]: model format, forward pass with pre-activation trace
//! * [`coverage`]: activation signatures, t-way coverage table and metrics
//! * [`lp`]: dense two-phase simplex
//! * [`encoder`]: coverage targets as linear programs over an activation region
//! * [`testgen`]: random baseline, guided generation, robustness verdicts
//! * [`report`]: dataset, suite, signature and report files

pub mod coverage;
pub mod encoder;
pub mod error;
pub mod fixture;
pub mod json;
pub mod lp;
pub mod model;
pub mod report;
pub mod testgen;

pub use coverage::{
    enumerate_combinations, signature_of, ActivationSignature, Combination, Configuration, CoverageTable,
    Metric, Ratio, Target,
};
pub use encoder::{
    encode_target, propagate_affine, solve_target, verify_target, AffineForm, EncodingParams, TargetOutcome,
};
pub use error::{Error, Result};
pub use lp::{solve, LinearProgram, LpSolution, LpStatus, SolverOptions};
pub use model::{argmax, Activation, InputVector, LayerSpec, NetworkModel, PreActivationTrace};
pub use report::{DatasetRecord, RobustnessReport, RunMetadata};
pub use testgen::{
    ct_testgen, is_adversarial, random_suite, random_testgen, robustness_summary, GenBudget, GeneratedTest,
    Method, MethodRun, Provenance, Seed,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
