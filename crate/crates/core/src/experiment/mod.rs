//! End-to-end experiments: configuration, the featurize/reservoir/readout
//! pipeline, and the commands behind the CLI.
//!
//! Each command returns its records and, when given an output directory,
//! appends them to `records.jsonl` there and writes its figures and tables.

mod config;
mod pipeline;
mod record;

use std::collections::BTreeMap;
use std::path::Path;

pub use config::{Paths, RunConfig};
pub use pipeline::{predicted_diagram, run_job, shot_seed, standardized_pixels, Features, Job, JobInputs, Prepared};
pub use record::{append_records, read_records, ExperimentRecord, InputChecksums, Method, Prediction, RepResult, Summary};

use crate::dataset::{Dataset, ThinningVariant};
use crate::error::{Error, Result};
use crate::featurizer::{ComponentSelection, PcaModel};
use crate::labeler::BoundaryTable;
use crate::phase_viz::{
    diff_diagram, render_accuracy_curve, render_panels_svg, AccuracySeries, DiffReport, LineStyle, Palette, PhaseDiagramGrid,
};
use crate::reservoir::Variant;

pub const RECORDS_FILE: &str = "records.jsonl";

/// Records of a command plus the per-method summaries.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub records: Vec<ExperimentRecord>,
    pub results: Vec<RepResult>,
    pub summaries: Vec<Summary>,
}

impl Outcome {
    pub fn summary(&self, method: Method, n_qubits: Option<usize>) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.method == method && s.n_qubits == n_qubits)
    }

    pub fn mean(&self, method: Method, n_qubits: Option<usize>) -> Option<f64> {
        self.summary(method, n_qubits).map(|s| s.mean)
    }

    pub fn results_for(&self, method: Method, n_qubits: Option<usize>) -> Vec<&RepResult> {
        self.results
            .iter()
            .filter(|r| r.method == method && r.n_qubits == n_qubits)
            .collect()
    }
}

/// Runs `jobs`, grouping results into summary rows by (method, qubits, shots).
fn execute<'a>(
    command: &str,
    cfg: &RunConfig,
    prep: &Prepared,
    inputs_for: &dyn Fn(&Job) -> Result<(JobInputs<'a>, InputChecksums)>,
    jobs: &[Job],
) -> Result<Outcome> {
    let mut records = Vec::new();
    let mut results: Vec<RepResult> = Vec::new();
    let mut checks: Vec<InputChecksums> = Vec::new();
    for job in jobs {
        let (inputs, checksums) = inputs_for(job)?;
        let (result, timings) = run_job(prep, &inputs, *job, cfg)?;
        let mut rec = ExperimentRecord::new(command, cfg, &checksums, Some(result.clone()), None)?;
        rec.timings = timings.into_iter().collect::<BTreeMap<_, _>>();
        records.push(rec);
        results.push(result);
        checks.push(checksums);
    }
    let mut summaries = Vec::new();
    let mut seen: Vec<(Method, Option<usize>, u32)> = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let key = (r.method, r.n_qubits, r.shots);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let group: Vec<&RepResult> = results
            .iter()
            .filter(|x| (x.method, x.n_qubits, x.shots) == key)
            .collect();
        let summary = Summary::of(&group).expect("group contains r");
        records.push(ExperimentRecord::new(command, cfg, &checks[i], None, Some(summary.clone()))?);
        summaries.push(summary);
    }
    Ok(Outcome {
        records,
        results,
        summaries,
    })
}

fn write_text(dir: &Path, name: &str, text: &str, artifacts: &mut Vec<String>) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    artifacts.push(name.to_string());
    Ok(())
}

/// Attaches artifact names to every record, then appends the records.
fn finish(outcome: &mut Outcome, dir: Option<&Path>, artifacts: Vec<String>) -> Result<()> {
    for r in &mut outcome.records {
        r.artifacts = artifacts.clone();
        r.checksum = r.content_checksum()?;
    }
    if let Some(dir) = dir {
        append_records(dir.join(RECORDS_FILE), &outcome.records)?;
    }
    Ok(())
}

fn reps(cfg: &RunConfig) -> std::ops::Range<usize> {
    0..cfg.repetitions
}

/// Ground-truth diagram of the configured grid.
pub fn truth_diagram(cfg: &RunConfig, table: &BoundaryTable) -> Result<PhaseDiagramGrid> {
    PhaseDiagramGrid::from_truth(&cfg.grid, table)
}

/// Featurize, reservoir, readout for the configured qubit count and variant,
/// once per repetition and per entry of `shots_list` (or `shots` when empty).
pub fn run(cfg: &RunConfig, dataset: &Dataset, out: Option<&Path>) -> Result<Outcome> {
    cfg.validate()?;
    let table = cfg.boundary_table()?;
    let prep = Prepared::with_table(dataset, cfg, &table)?;
    let selection = cfg.selection_for(cfg.n_qubits);
    let pca = prep.fit_pca(selection.max_index())?;
    let features = Features::new(&prep, &pca, selection)?;
    let checks = prep.with_pca(&pca)?;
    let shots: Vec<u32> = if cfg.shots_list.is_empty() {
        vec![cfg.shots]
    } else {
        cfg.shots_list.clone()
    };
    let method = Method::Qerc { variant: cfg.variant };
    let jobs: Vec<Job> = shots
        .iter()
        .flat_map(|&s| {
            reps(cfg).map(move |repetition| Job {
                method,
                n_qubits: Some(cfg.n_qubits),
                shots: s,
                repetition,
            })
        })
        .collect();
    let mut outcome = execute(
        "run",
        cfg,
        &prep,
        &|_| {
            Ok((
                JobInputs {
                    features: Some(&features),
                    pixels: None,
                },
                checks.clone(),
            ))
        },
        &jobs,
    )?;
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        pipeline::ensure_dir(dir)?;
        let truth = truth_diagram(cfg, &table)?;
        let predicted = predicted_diagram(cfg, &outcome.results.iter().collect::<Vec<_>>())?;
        let title = format!("{} {}q", method.name(), cfg.n_qubits);
        let svg = render_panels_svg(&[("truth", &truth), (&title, &predicted)], &Palette::default());
        write_text(dir, "run-diagram.svg", &svg, &mut artifacts)?;
        write_text(dir, "run-diagram.csv", &predicted.to_csv(), &mut artifacts)?;
    }
    finish(&mut outcome, out, artifacts)?;
    Ok(outcome)
}

/// One row of the qubit-sweep accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub n_qubits: Option<usize>,
    pub repetition: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub outcome: Outcome,
    /// Sorted by qubit count; the pixel baseline (no qubit count) comes first.
    pub rows: Vec<SweepRow>,
    pub series: Vec<AccuracySeries>,
}

impl SweepOutcome {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("method,qubits,repetition,accuracy\n");
        for r in &self.rows {
            let q = r.n_qubits.map(|n| n.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{q},{},{}\n", r.method.name(), r.repetition, r.accuracy));
        }
        out
    }
}

/// QERC and the PCA-feature baseline at every qubit count in `qubit_range`,
/// plus the standardized-pixel baseline once per repetition.
pub fn sweep_qubits(cfg: &RunConfig, dataset: &Dataset, out: Option<&Path>) -> Result<SweepOutcome> {
    cfg.validate()?;
    let [lo, hi] = cfg.qubit_range;
    let prep = Prepared::new(dataset, cfg)?;
    let pca = prep.fit_pca(2 * hi)?;
    let checks = prep.with_pca(&pca)?;
    let features: BTreeMap<usize, Features> = (lo..=hi)
        .map(|n| Ok((n, Features::new(&prep, &pca, ComponentSelection::identity(2 * n))?)))
        .collect::<Result<_>>()?;
    let pixels = standardized_pixels(&prep)?;
    let qerc = Method::Qerc { variant: cfg.variant };
    let mut jobs = Vec::new();
    for repetition in reps(cfg) {
        jobs.push(Job {
            method: Method::PixelBaseline,
            n_qubits: None,
            shots: 0,
            repetition,
        });
        for n in lo..=hi {
            for (method, shots) in [(qerc, cfg.shots), (Method::PcaBaseline, 0)] {
                jobs.push(Job {
                    method,
                    n_qubits: Some(n),
                    shots,
                    repetition,
                });
            }
        }
    }
    let mut outcome = execute(
        "sweep-qubits",
        cfg,
        &prep,
        &|job| {
            let feats = job.n_qubits.and_then(|n| features.get(&n));
            let inputs = JobInputs {
                features: feats,
                pixels: Some(&pixels),
            };
            let checks = match job.method {
                Method::PixelBaseline => prep.inputs.clone(),
                _ => checks.clone(),
            };
            Ok((inputs, checks))
        },
        &jobs,
    )?;

    let mut rows: Vec<SweepRow> = outcome
        .results
        .iter()
        .map(|r| SweepRow {
            method: r.method,
            n_qubits: r.n_qubits,
            repetition: r.repetition,
            accuracy: r.test_accuracy,
        })
        .collect();
    rows.sort_by_key(|r| (r.n_qubits, r.method.name(), r.repetition));

    let mut series = vec![
        AccuracySeries::new(qerc.name(), LineStyle::Solid),
        AccuracySeries::new(Method::PcaBaseline.name(), LineStyle::Dashed),
        AccuracySeries::new(Method::PixelBaseline.name(), LineStyle::Dashed),
    ];
    for r in &outcome.results {
        match (r.method, r.n_qubits) {
            (Method::PixelBaseline, _) => {
                for n in lo..=hi {
                    series[2].push(n, r.test_accuracy);
                }
            }
            (Method::PcaBaseline, Some(n)) => series[1].push(n, r.test_accuracy),
            (_, Some(n)) => series[0].push(n, r.test_accuracy),
            _ => {}
        }
    }

    let mut sweep = SweepOutcome {
        outcome: Outcome {
            records: Vec::new(),
            results: Vec::new(),
            summaries: Vec::new(),
        },
        rows,
        series,
    };
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        pipeline::ensure_dir(dir)?;
        write_text(dir, "sweep-table.csv", &sweep.table_csv(), &mut artifacts)?;
        write_text(dir, "sweep-curve.csv", &AccuracySeries::to_csv(&sweep.series), &mut artifacts)?;
        render_accuracy_curve(&sweep.series, dir.join("sweep-curve.svg"))?;
        artifacts.push("sweep-curve.svg".into());
        let table = cfg.boundary_table()?;
        let mut panels = vec![("truth".to_string(), truth_diagram(cfg, &table)?)];
        for n in lo..=hi {
            panels.push((format!("{n} qubits"), predicted_diagram(cfg, &outcome.results_for(qerc, Some(n)))?));
        }
        let refs: Vec<(&str, &PhaseDiagramGrid)> = panels.iter().map(|(t, g)| (t.as_str(), g)).collect();
        write_text(dir, "sweep-diagrams.svg", &render_panels_svg(&refs, &Palette::default()), &mut artifacts)?;
    }
    finish(&mut outcome, out, artifacts)?;
    sweep.outcome = outcome;
    Ok(sweep)
}

/// The three reservoir variants at the configured qubit count, sharing one PCA model.
pub fn ablate(cfg: &RunConfig, dataset: &Dataset, out: Option<&Path>) -> Result<Outcome> {
    cfg.validate()?;
    let prep = Prepared::new(dataset, cfg)?;
    let selection = cfg.selection_for(cfg.n_qubits);
    let pca = prep.fit_pca(selection.max_index())?;
    let features = Features::new(&prep, &pca, selection)?;
    let checks = prep.with_pca(&pca)?;
    let variants = [Variant::CliffordT, Variant::CliffordOnly, Variant::TOnly];
    let jobs: Vec<Job> = variants
        .iter()
        .flat_map(|&variant| {
            reps(cfg).map(move |repetition| Job {
                method: Method::Qerc { variant },
                n_qubits: Some(cfg.n_qubits),
                shots: cfg.shots,
                repetition,
            })
        })
        .collect();
    let mut outcome = execute(
        "ablate",
        cfg,
        &prep,
        &|_| {
            Ok((
                JobInputs {
                    features: Some(&features),
                    pixels: None,
                },
                checks.clone(),
            ))
        },
        &jobs,
    )?;
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        pipeline::ensure_dir(dir)?;
        let mut panels = Vec::new();
        for v in variants {
            let method = Method::Qerc { variant: v };
            panels.push((v.name(), predicted_diagram(cfg, &outcome.results_for(method, Some(cfg.n_qubits)))?));
        }
        let refs: Vec<(&str, &PhaseDiagramGrid)> = panels.iter().map(|(t, g)| (*t, g)).collect();
        write_text(dir, "ablation.svg", &render_panels_svg(&refs, &Palette::default()), &mut artifacts)?;
    }
    finish(&mut outcome, out, artifacts)?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct ShiftOutcome {
    pub outcome: Outcome,
    pub identity: Summary,
    pub shifted: Summary,
    /// Shifted mean accuracy minus identity mean accuracy.
    pub delta: f64,
    /// Per-repetition accuracy differences (shifted - identity).
    pub deltas: Vec<f64>,
}

/// Compares the identity encoding with `selection` at the configured qubit count.
pub fn shift_components(cfg: &RunConfig, dataset: &Dataset, selection: &ComponentSelection, out: Option<&Path>) -> Result<ShiftOutcome> {
    cfg.validate()?;
    let n = cfg.n_qubits;
    if selection.len() != 2 * n {
        return Err(Error::Selection(format!(
            "{n} qubits encode {} components, selection has {}",
            2 * n,
            selection.len()
        )));
    }
    let prep = Prepared::new(dataset, cfg)?;
    let identity = ComponentSelection::identity(2 * n);
    let k = identity.max_index().max(selection.max_index());
    let pca: PcaModel = prep.fit_pca(k)?;
    let checks = prep.with_pca(&pca)?;
    let base = Features::new(&prep, &pca, identity)?;
    let shifted = Features::new(&prep, &pca, selection.clone())?;
    let method = Method::Qerc { variant: cfg.variant };
    let mut outcomes = Vec::new();
    for feats in [&base, &shifted] {
        let jobs: Vec<Job> = reps(cfg)
            .map(|repetition| Job {
                method,
                n_qubits: Some(n),
                shots: cfg.shots,
                repetition,
            })
            .collect();
        let mut sub_cfg = cfg.clone();
        sub_cfg.selection = Some(feats.featurizer.selection.clone());
        outcomes.push(execute(
            "shift-components",
            &sub_cfg,
            &prep,
            &|_| {
                Ok((
                    JobInputs {
                        features: Some(feats),
                        pixels: None,
                    },
                    checks.clone(),
                ))
            },
            &jobs,
        )?);
    }
    let shifted_out = outcomes.pop().expect("two runs");
    let identity_out = outcomes.pop().expect("two runs");
    let identity_summary = identity_out.summaries[0].clone();
    let shifted_summary = shifted_out.summaries[0].clone();
    let deltas: Vec<f64> = identity_summary
        .accuracies
        .iter()
        .zip(&shifted_summary.accuracies)
        .map(|(a, b)| b - a)
        .collect();
    let mut outcome = Outcome {
        records: identity_out.records.into_iter().chain(shifted_out.records).collect(),
        results: identity_out.results.into_iter().chain(shifted_out.results).collect(),
        summaries: vec![identity_summary.clone(), shifted_summary.clone()],
    };
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        pipeline::ensure_dir(dir)?;
        let mut table = String::from("selection,repetition,accuracy\n");
        for (label, s) in [("identity", &identity_summary), (&selection.to_string()[..], &shifted_summary)] {
            for (r, a) in s.accuracies.iter().enumerate() {
                table.push_str(&format!("\"{label}\",{r},{a}\n"));
            }
        }
        write_text(dir, "shift.csv", &table, &mut artifacts)?;
    }
    finish(&mut outcome, out, artifacts)?;
    Ok(ShiftOutcome {
        delta: shifted_summary.mean - identity_summary.mean,
        outcome,
        identity: identity_summary,
        shifted: shifted_summary,
        deltas,
    })
}

#[derive(Debug, Clone)]
pub struct GeneralizeOutcome {
    pub outcome: Outcome,
    pub train_size: usize,
    pub predicted: PhaseDiagramGrid,
    pub diff: DiffReport,
}

/// Trains on a thinned (and, if configured, class-balanced) training set and
/// evaluates on the full test grid.
pub fn generalize(cfg: &RunConfig, dataset: &Dataset, variant: ThinningVariant, out: Option<&Path>) -> Result<GeneralizeOutcome> {
    let mut cfg = cfg.clone();
    cfg.downsample = Some(variant);
    let mut outcome = run(&cfg, dataset, None)?;
    for r in &mut outcome.records {
        r.command = "generalize".into();
    }
    let table = cfg.boundary_table()?;
    let truth = truth_diagram(&cfg, &table)?;
    let predicted = predicted_diagram(&cfg, &outcome.results.iter().collect::<Vec<_>>())?;
    let diff = diff_diagram(&predicted, &truth)?;
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        pipeline::ensure_dir(dir)?;
        let title = format!("variant {variant}");
        let svg = render_panels_svg(&[("truth", &truth), (&title, &predicted)], &Palette::default());
        write_text(dir, &format!("generalize-{variant}.svg"), &svg, &mut artifacts)?;
        write_text(dir, &format!("generalize-{variant}.csv"), &predicted.to_csv(), &mut artifacts)?;
    }
    finish(&mut outcome, out, artifacts)?;
    Ok(GeneralizeOutcome {
        train_size: outcome.results.first().map_or(0, |r| r.train_size),
        outcome,
        predicted,
        diff,
    })
}
