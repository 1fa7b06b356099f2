use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::anyhow;
use ctcov_core::fixture::{parse_width_spec, random_model, random_seeds};
use ctcov_core::report::{
    read_dataset, read_report, read_signatures, read_suite, write_dataset, write_report, write_suite,
    CoverageRow,
};
use ctcov_core::testgen::{compare_issues, split_budget};
use ctcov_core::{
    ct_testgen, encode_target, random_suite, robustness_summary, signature_of, solve_target, verify_target,
    Combination, Configuration, CoverageTable, EncodingParams, Error, GenBudget, Metric, NetworkModel,
    RobustnessReport, RunMetadata, Seed, TargetOutcome,
};
use log::{info, warn};

use crate::failure::{Context, Failure};
use crate::{CompareArgs, CoverageArgs, EncodeArgs, FixtureArgs, GenerateArgs, MethodArg};

fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::input(anyhow!("cannot open {}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::input(anyhow!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<NetworkModel, Failure> {
    NetworkModel::load(open_input(path)?).context(format!("model {}", path.display()))
}

/// Writes one output file in full; the file is only created once there is
/// something to write.
fn write_output(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> ctcov_core::Result<()>,
) -> Result<(), Failure> {
    let fail = |e: anyhow::Error| Failure::runtime(e.context(format!("cannot write {}", path.display())));
    let file = File::create(path).map_err(|e| fail(e.into()))?;
    let mut out = BufWriter::new(file);
    write(&mut out).map_err(|e| fail(e.into()))?;
    out.flush().map_err(|e| fail(e.into()))
}

/// Name of a model or trace in reports: its file name.
fn display_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn log_row(row: &CoverageRow) {
    info!(
        "{} {}: sparse {}/{} ({:.2}%), dense {}/{} ({:.2}%), {} tests, {} adversarial",
        row.model,
        row.method,
        row.sparse.covered,
        row.sparse.total,
        row.sparse.pct,
        row.dense.covered,
        row.dense.total,
        row.dense.pct,
        row.accumulated_tests,
        row.adversarial_tests
    );
}

pub fn coverage(args: &CoverageArgs) -> Result<(), Failure> {
    let t = args.coverage.t as usize;
    let model = args.model.as_deref().map(load_model).transpose()?;
    let (name, table, tests, adversarial) = if let Some(path) = &args.signatures {
        let sigs = read_signatures(open_input(path)?).context(format!("signatures {}", path.display()))?;
        let widths = match (&model, sigs.first()) {
            (Some(m), _) => m.hidden_widths(),
            (None, Some((_, s))) => s.widths(),
            (None, None) => return Err(Failure::input(anyhow!("{} holds no signatures", path.display()))),
        };
        let mut table = CoverageTable::new(&widths, t)?;
        for (id, sig) in &sigs {
            table
                .update(sig)
                .context(format!("signature {id} in {}", path.display()))?;
        }
        (display_name(path), table, sigs.len() as u64, 0)
    } else {
        let (model, path) = match (&model, &args.inputs) {
            (Some(m), Some(p)) => (m, p),
            _ => return Err(Failure::usage("--inputs needs --model")),
        };
        let bytes = read_bytes(path)?;
        // A suite also carries adversarial verdicts; a plain dataset does not.
        let adversarial = read_suite(bytes.as_slice())
            .ok()
            .map(|s| s.iter().filter(|t| t.adversarial).count());
        let records = read_dataset(bytes.as_slice()).context(format!("inputs {}", path.display()))?;
        let mut table = CoverageTable::for_model(model, t)?;
        for r in &records {
            let x = r.input()?;
            let (_, trace) = model.forward_with_trace(&x).context(format!("record {}", r.id))?;
            table.update(&signature_of(&trace))?;
        }
        let name = display_name(args.model.as_deref().expect("checked above"));
        (name, table, records.len() as u64, adversarial.unwrap_or(0) as u64)
    };

    let metadata = RunMetadata {
        t,
        p_thresholds: args.coverage.p.clone(),
        ..RunMetadata::default()
    };
    let mut report = RobustnessReport::new(metadata);
    let row = CoverageRow::from_table(&name, "suite", None, &table, &args.coverage.p, tests, adversarial)?;
    log_row(&row);
    report.rows.push(row);
    report.canonicalize();
    write_output(&args.out_report, |w| write_report(&report, w))
}

fn load_seeds(model: &NetworkModel, path: &Path) -> Result<Vec<Seed>, Failure> {
    let records = read_dataset(open_input(path)?).context(format!("seeds {}", path.display()))?;
    let mut ids = BTreeSet::new();
    let mut seeds = Vec::with_capacity(records.len());
    for r in &records {
        if !ids.insert(r.id) {
            return Err(Failure::input(anyhow!(
                "seed id {} appears twice in {}",
                r.id,
                path.display()
            )));
        }
        match Seed::from_record(model, r) {
            Ok(s) => seeds.push(s),
            Err(Error::MisclassifiedSeed { id, label, predicted }) => {
                warn!("skipping seed {id}: labelled {label}, model predicts {predicted}");
            }
            Err(e) => return Err(Failure::from(e)).context(format!("seed {}", r.id)),
        }
    }
    if seeds.is_empty() {
        return Err(Failure::input(anyhow!(
            "{} has no correctly classified seeds",
            path.display()
        )));
    }
    Ok(seeds)
}

pub fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let seeds = load_seeds(&model, &args.seeds)?;
    let t = args.coverage.t as usize;
    info!("{} seeds, method {:?}", seeds.len(), args.method);

    let mut metadata = RunMetadata {
        t,
        d: Some(args.d),
        rng_seed: Some(args.rng_seed),
        p_thresholds: args.coverage.p.clone(),
        ..RunMetadata::default()
    };
    let run = match args.method {
        MethodArg::Random => {
            if args.time_limit_s.is_some() || args.max_solves_per_layer.is_some() {
                warn!("--time-limit-s and --max-solves-per-layer only apply to --method ct");
            }
            let counts = match (args.n, args.total) {
                (Some(n), None) => vec![n; seeds.len()],
                (None, Some(total)) => split_budget(total, seeds.len()),
                _ => return Err(Failure::usage("--method random needs --n or --total")),
            };
            metadata.tests_per_seed = args.n;
            random_suite(&model, &seeds, &counts, args.d, t, args.rng_seed)?
        }
        MethodArg::Ct => {
            if args.n.is_some() || args.total.is_some() {
                warn!("--n and --total only apply to --method random");
            }
            EncodingParams::new(args.d, args.epsilon)?;
            let budget = GenBudget {
                epsilon: args.epsilon,
                time_limit: args.time_limit_s.map(Duration::from_secs_f64),
                max_solves_per_layer: args.max_solves_per_layer.map(|n| n as usize),
                ..GenBudget::new(t, args.d, args.rng_seed)
            };
            metadata.epsilon = Some(args.epsilon);
            metadata.time_limit_s = args.time_limit_s;
            metadata.max_solves_per_layer = budget.max_solves_per_layer;
            ct_testgen(&model, &seeds, &budget)?
        }
    };

    let report = robustness_summary(&[(&display_name(&args.model), &run)], metadata)?;
    for row in &report.rows {
        log_row(row);
    }
    let non_robust = run.seeds.iter().filter(|s| s.adversarial > 0).count();
    info!("{non_robust} of {} seeds are not locally robust", run.seeds.len());
    info!(
        "final sparse coverage {:.2}%",
        run.table.aggregate(Metric::Sparse)?.percent()
    );
    write_output(&args.out_suite, |w| write_suite(&run.tests, w))?;
    write_output(&args.out_report, |w| write_report(&report, w))
}

pub fn make_fixture(args: &FixtureArgs) -> Result<(), Failure> {
    let widths = parse_width_spec(&args.widths)?;
    let model = random_model(&widths, args.rng_seed)?;
    info!("model {} with {} parameters", args.widths, model.param_count());
    write_output(&args.out, |w| model.write(w))?;
    if let (Some(n), Some(path)) = (args.n_seeds, &args.out_seeds) {
        let seeds = random_seeds(&model, n, args.rng_seed);
        write_output(path, |w| write_dataset(&seeds, w))?;
    }
    Ok(())
}

fn parse_config(bits: &str) -> Result<Configuration, Failure> {
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Failure::usage(format!(
                "--config takes 0 and 1 only, got {other:?}"
            ))),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Configuration::from_bits)
}

pub fn encode(args: &EncodeArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let records =
        read_dataset(open_input(&args.seeds)?).context(format!("seeds {}", args.seeds.display()))?;
    let record = records.iter().find(|r| r.id == args.seed_id).ok_or_else(|| {
        Failure::input(anyhow!(
            "no seed with id {} in {}",
            args.seed_id,
            args.seeds.display()
        ))
    })?;
    let seed = record.input()?;
    let (_, trace) = model.forward_with_trace(&seed)?;
    let seed_sig = signature_of(&trace);
    let combo = Combination::new(args.layer, args.neurons.clone())?;
    let config = parse_config(&args.config)?;
    let params = EncodingParams::new(args.d, args.epsilon)?;

    let lp = encode_target(&model, &seed, &seed_sig, &combo, &config, &params)?;
    if let Some(path) = &args.dump_lp {
        write_output(path, |w| Ok(w.write_all(lp.to_text().as_bytes())?))?;
    }
    let target = format!("{combo}={config}");
    match solve_target(&model, &seed, &seed_sig, &combo, &config, &params)? {
        TargetOutcome::Found { input, distance } => {
            let realized = verify_target(&model, &input, &combo, &config)?;
            let class = model.classify(&input)?;
            eprintln!("{target}: optimal, distance {distance:.6e}, realized {realized}, class {class}");
        }
        TargetOutcome::Infeasible => eprintln!("{target}: infeasible within d = {}", args.d),
    }
    Ok(())
}

pub fn compare(args: &CompareArgs) -> Result<(), Failure> {
    let [a, b] = args.reports.as_slice() else {
        return Err(Failure::usage("--report must be given exactly twice"));
    };
    let load = |p: &Path| -> Result<RobustnessReport, Failure> {
        let r = read_report(open_input(p)?).context(format!("report {}", p.display()))?;
        let runs: BTreeSet<_> = r.seeds.iter().map(|s| (&s.model, &s.method)).collect();
        if runs.len() != 1 {
            return Err(Failure::input(anyhow!(
                "{} must hold exactly one generation run",
                p.display()
            )));
        }
        Ok(r)
    };
    let (first, second) = (load(a)?, load(b)?);
    if first.metadata != second.metadata {
        warn!("the two reports were produced with different settings; keeping the first");
    }
    let overlap = compare_issues(&first.seeds, &second.seeds)?;
    info!(
        "{} unique and {} shared non-robust seeds",
        overlap.unique, overlap.shared
    );

    let mut merged = RobustnessReport::new(first.metadata.clone());
    for r in [first, second] {
        merged.rows.extend(r.rows);
        merged.seeds.extend(r.seeds);
        merged.issues.extend(r.issues);
    }
    merged.overlap = Some(overlap);
    merged.canonicalize();
    write_output(&args.out_report, |w| write_report(&merged, w))
}
