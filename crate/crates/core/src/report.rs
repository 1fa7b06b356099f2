//! On-disk formats.
//!
//! * dataset: one JSON object per line, `{"id": <u64>, "x": [...], "label": <class>}`
//! * suite: one JSON object per line, a dataset record plus the generation
//!   details of the test (seed, provenance, distance, prediction, verdict)
//! * signatures: one JSON object per line, `{"id": <u64>, "layers": [[0, 1, ...], ...]}`
//! * report: a single JSON document, see [`RobustnessReport`]
//!
//! Floats are written with 17 significant digits so that reading a file back
//! reproduces every value exactly. Blank lines in line-delimited files are
//! ignored.

use std::io::{BufRead, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::coverage::{ActivationSignature, CoverageTable, Metric, Ratio};
use crate::error::{Error, Result};
use crate::model::InputVector;
use crate::testgen::{GeneratedTest, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: u64,
    pub x: Vec<f64>,
    pub label: usize,
}

impl DatasetRecord {
    fn check_bounds(&self) -> Result<()> {
        if let Some((j, v)) = self.x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Bounds {
                id: self.id,
                message: format!("component {j} = {v} is outside [0, 1]"),
            });
        }
        Ok(())
    }

    pub fn input(&self) -> Result<InputVector> {
        self.check_bounds()?;
        InputVector::new(self.x.clone())
    }
}

fn read_lines<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

fn write_lines<T: Serialize, W: Write>(records: impl IntoIterator<Item = T>, mut writer: W) -> Result<()> {
    for r in records {
        crate::json::to_writer(&mut writer, &r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a dataset, rejecting malformed lines and components outside `[0, 1]`.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<DatasetRecord>> {
    let records: Vec<DatasetRecord> = read_lines(reader)?.into_iter().map(|(_, r)| r).collect();
    for r in &records {
        r.check_bounds()?;
    }
    Ok(records)
}

pub fn write_dataset<W: Write>(records: &[DatasetRecord], writer: W) -> Result<()> {
    write_lines(records, writer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SuiteRecord {
    id: u64,
    x: Vec<f64>,
    /// Label of the originating seed.
    label: usize,
    seed: u64,
    predicted: usize,
    distance: f64,
    adversarial: bool,
    provenance: Provenance,
}

/// Writes generated tests; record ids are positions in `tests`.
pub fn write_suite<W: Write>(tests: &[GeneratedTest], writer: W) -> Result<()> {
    write_lines(
        tests.iter().enumerate().map(|(i, t)| SuiteRecord {
            id: i as u64,
            x: t.input.as_slice().to_vec(),
            label: t.seed_label,
            seed: t.seed_id,
            predicted: t.predicted,
            distance: t.distance,
            adversarial: t.adversarial,
            provenance: t.provenance.clone(),
        }),
        writer,
    )
}

pub fn read_suite<R: BufRead>(reader: R) -> Result<Vec<GeneratedTest>> {
    read_lines::<SuiteRecord, _>(reader)?
        .into_iter()
        .map(|(_, r)| {
            let input = InputVector::new(r.x).map_err(|e| Error::Bounds {
                id: r.id,
                message: e.to_string(),
            })?;
            Ok(GeneratedTest {
                input,
                seed_id: r.seed,
                seed_label: r.label,
                provenance: r.provenance,
                distance: r.distance,
                predicted: r.predicted,
                adversarial: r.adversarial,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SignatureRecord {
    id: u64,
    layers: Vec<Vec<u8>>,
}

/// Reads precomputed activation signatures; bits must be 0 or 1.
pub fn read_signatures<R: BufRead>(reader: R) -> Result<Vec<(u64, ActivationSignature)>> {
    read_lines::<SignatureRecord, _>(reader)?
        .into_iter()
        .map(|(line, r)| {
            let layers = r
                .layers
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|&b| match b {
                            0 => Ok(false),
                            1 => Ok(true),
                            other => Err(Error::Format {
                                line,
                                message: format!("activation bit {other} is not 0 or 1"),
                            }),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((r.id, ActivationSignature::from_bits(layers)))
        })
        .collect()
}

pub fn write_signatures<W: Write>(sigs: &[(u64, ActivationSignature)], writer: W) -> Result<()> {
    write_lines(
        sigs.iter().map(|(id, s)| SignatureRecord {
            id: *id,
            layers: s
                .layers()
                .iter()
                .map(|l| l.iter().map(|&b| b as u8).collect())
                .collect(),
        }),
        writer,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub covered: u64,
    pub total: u64,
    pub pct: f64,
}

impl From<Ratio> for MetricValue {
    fn from(r: Ratio) -> Self {
        Self {
            covered: r.num,
            total: r.den,
            pct: r.percent(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessValue {
    pub p: f64,
    pub covered: u64,
    pub total: u64,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCoverageRow {
    pub layer: usize,
    pub sparse: MetricValue,
    pub dense: MetricValue,
    pub completeness: Vec<CompletenessValue>,
}

/// Coverage of one (model, method, stage). For guided generation `layer` is
/// the last hidden layer processed; metrics always pool every hidden layer,
/// with the per-layer breakdown in `per_layer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub model: String,
    pub method: String,
    pub layer: Option<usize>,
    pub sparse: MetricValue,
    pub dense: MetricValue,
    pub completeness: Vec<CompletenessValue>,
    pub accumulated_tests: u64,
    pub adversarial_tests: u64,
    pub adversarial_ratio_pct: f64,
    pub per_layer: Vec<LayerCoverageRow>,
}

fn completeness_values(ps: &[f64], f: impl Fn(f64) -> Result<Ratio>) -> Result<Vec<CompletenessValue>> {
    ps.iter()
        .map(|&p| {
            let r = f(p)?;
            Ok(CompletenessValue {
                p,
                covered: r.num,
                total: r.den,
                pct: r.percent(),
            })
        })
        .collect()
}

impl CoverageRow {
    pub fn from_table(
        model: &str,
        method: &str,
        layer: Option<usize>,
        table: &CoverageTable,
        p_thresholds: &[f64],
        accumulated_tests: u64,
        adversarial_tests: u64,
    ) -> Result<Self> {
        let per_layer = (0..table.layer_count())
            .map(|l| {
                Ok(LayerCoverageRow {
                    layer: l,
                    sparse: table.sparse(l)?.into(),
                    dense: table.dense(l)?.into(),
                    completeness: completeness_values(p_thresholds, |p| table.completeness(l, p))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: model.to_string(),
            method: method.to_string(),
            layer,
            sparse: table.aggregate(Metric::Sparse)?.into(),
            dense: table.aggregate(Metric::Dense)?.into(),
            completeness: completeness_values(p_thresholds, |p| table.aggregate(Metric::Completeness(p)))?,
            accumulated_tests,
            adversarial_tests,
            adversarial_ratio_pct: if accumulated_tests == 0 {
                0.0
            } else {
                100.0 * adversarial_tests as f64 / accumulated_tests as f64
            },
            per_layer,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedVerdict {
    pub model: String,
    pub method: String,
    pub id: u64,
    pub label: usize,
    pub tests: u64,
    pub adversarial: u64,
    /// No adversarial example was found within the budget.
    pub robust: bool,
    pub lp_solves: u64,
    pub infeasible: u64,
    pub solver_failures: u64,
    pub time_limit_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueCount {
    pub model: String,
    pub method: String,
    pub seeds: u64,
    pub non_robust: u64,
}

/// Non-robust seeds found by two result sets over the same seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueOverlap {
    pub first: String,
    pub second: String,
    /// Seeds flagged by either result set.
    pub unique: u64,
    /// Seeds flagged by both.
    pub shared: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub t: usize,
    pub d: Option<f64>,
    pub epsilon: Option<f64>,
    pub rng_seed: Option<u64>,
    pub time_limit_s: Option<f64>,
    pub max_solves_per_layer: Option<usize>,
    pub tests_per_seed: Option<usize>,
    pub p_thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub tool_version: String,
    pub metadata: RunMetadata,
    pub rows: Vec<CoverageRow>,
    pub seeds: Vec<SeedVerdict>,
    pub issues: Vec<IssueCount>,
    pub overlap: Option<IssueOverlap>,
}

impl RobustnessReport {
    pub fn new(metadata: RunMetadata) -> Self {
        Self {
            tool_version: crate::VERSION.to_string(),
            metadata,
            rows: Vec::new(),
            seeds: Vec::new(),
            issues: Vec::new(),
            overlap: None,
        }
    }

    /// Sorts rows by (model, method, layer) and seeds by (model, method, id).
    pub fn canonicalize(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.model, &a.method, a.layer.map_or(usize::MAX, |l| l)).cmp(&(
                &b.model,
                &b.method,
                b.layer.map_or(usize::MAX, |l| l),
            ))
        });
        self.seeds
            .sort_by(|a, b| (&a.model, &a.method, a.id).cmp(&(&b.model, &b.method, b.id)));
        self.issues
            .sort_by(|a, b| (&a.model, &a.method).cmp(&(&b.model, &b.method)));
    }
}

/// Writes a report in canonical order.
pub fn write_report<W: Write>(report: &RobustnessReport, mut writer: W) -> Result<()> {
    let mut report = report.clone();
    report.canonicalize();
    crate::json::to_writer(&mut writer, &report)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(reader: R) -> Result<RobustnessReport> {
    Ok(serde_json::from_reader(reader)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{Combination, Configuration, Target};

    #[test]
    fn empty_dataset() {
        assert!(read_dataset("".as_bytes()).unwrap().is_empty());
        assert!(read_dataset("\n\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_component_names_record() {
        let text =
            "{\"id\": 3, \"x\": [0.5, 0.2], \"label\": 1}\n{\"id\": 9, \"x\": [1.5, 0.0], \"label\": 0}\n";
        match read_dataset(text.as_bytes()).unwrap_err() {
            Error::Bounds { id, .. } => assert_eq!(id, 9),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"id\": 0, \"x\": [0.5], \"label\": 1}\n\n{\"id\": 1, \"x\": [0.5]\n";
        match read_dataset(text.as_bytes()).unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn suite_round_trip() {
        let tests = vec![
            GeneratedTest {
                input: InputVector::new(vec![0.1, 1.0 / 3.0]).unwrap(),
                seed_id: 4,
                seed_label: 1,
                provenance: Provenance::Random,
                distance: 0.07,
                predicted: 1,
                adversarial: false,
            },
            GeneratedTest {
                input: InputVector::new(vec![0.0, 0.95]).unwrap(),
                seed_id: 4,
                seed_label: 1,
                provenance: Provenance::Ct(Target {
                    combination: Combination::new(1, vec![0, 3]).unwrap(),
                    configuration: Configuration::from_bits(vec![true, false]),
                }),
                distance: 0.15,
                predicted: 0,
                adversarial: true,
            },
        ];
        let mut buf = Vec::new();
        write_suite(&tests, &mut buf).unwrap();
        assert_eq!(read_suite(buf.as_slice()).unwrap(), tests);
        // a suite is also a readable dataset
        assert_eq!(read_dataset(buf.as_slice()).unwrap().len(), 2);
    }

    #[test]
    fn signature_round_trip_and_bad_bits() {
        let sigs = vec![(
            0,
            ActivationSignature::from_bits(vec![vec![true, false], vec![false]]),
        )];
        let mut buf = Vec::new();
        write_signatures(&sigs, &mut buf).unwrap();
        assert_eq!(read_signatures(buf.as_slice()).unwrap(), sigs);
        assert!(read_signatures("{\"id\": 0, \"layers\": [[0, 2]]}".as_bytes()).is_err());
    }

    #[test]
    fn report_is_canonical() {
        let mut table = CoverageTable::new(&[3], 2).unwrap();
        table
            .update(&ActivationSignature::from_bits(vec![vec![true, false, true]]))
            .unwrap();
        let ps = [0.5, 0.75];
        let mut report = RobustnessReport::new(RunMetadata {
            t: 2,
            p_thresholds: ps.to_vec(),
            ..Default::default()
        });
        for (method, layer) in [("random", None), ("ct", Some(1)), ("ct", Some(0))] {
            report
                .rows
                .push(CoverageRow::from_table("m", method, layer, &table, &ps, 4, 1).unwrap());
        }
        let mut a = Vec::new();
        write_report(&report, &mut a).unwrap();
        report.rows.reverse();
        let mut b = Vec::new();
        write_report(&report, &mut b).unwrap();
        assert_eq!(a, b);
        let back = read_report(a.as_slice()).unwrap();
        let order: Vec<_> = back.rows.iter().map(|r| (r.method.as_str(), r.layer)).collect();
        assert_eq!(order, vec![("ct", Some(0)), ("ct", Some(1)), ("random", None)]);
        assert_eq!(back.rows[0].adversarial_ratio_pct, 25.0);
        assert_eq!(back.rows[0].dense.covered, 3);
    }
}
