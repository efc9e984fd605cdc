use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::RunConfig;
use super::record::{InputChecksums, Method, Prediction, RepResult};
use crate::checksum::{sha256_hex, sha256_u64};
use crate::classifier::{evaluate, normalize_input, train, Example, LinearModel};
use crate::dataset::{balance_classes, downsample_training, Dataset, DownsampleSpec, SampleRecord, Split};
use crate::error::{Error, Result};
use crate::featurizer::{fit_pca, ComponentSelection, Featurizer, PcaModel, Standardizer};
use crate::labeler::BoundaryTable;
use crate::phase_viz::PhaseDiagramGrid;
use crate::reservoir::{Reservoir, ReservoirSpec};

/// Train/test images (as f64) after thinning, with their checksums.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Vec<(SampleRecord, Vec<f64>)>,
    pub test: Vec<(SampleRecord, Vec<f64>)>,
    pub inputs: InputChecksums,
}

impl Prepared {
    /// Applies the configured thinning (and balancing, for thinned sets) to the training split.
    pub fn new(dataset: &Dataset, cfg: &RunConfig) -> Result<Self> {
        let table = cfg.boundary_table()?;
        Self::with_table(dataset, cfg, &table)
    }

    pub fn with_table(dataset: &Dataset, cfg: &RunConfig, table: &BoundaryTable) -> Result<Self> {
        dataset.manifest.verify_labels(table)?;
        let mut manifest = dataset.manifest.clone();
        if let Some(variant) = cfg.downsample {
            manifest = downsample_training(&manifest, &DownsampleSpec::variant(variant))?;
            if cfg.balance {
                manifest = balance_classes(&manifest, cfg.balance_seed)?;
            }
        }
        let subset = dataset.restrict(&manifest)?;
        let collect = |split| -> Vec<(SampleRecord, Vec<f64>)> {
            subset
                .split(split)
                .map(|(r, img)| (r.clone(), img.iter().map(|&v| v as f64).collect()))
                .collect()
        };
        let (train, test) = (collect(Split::Train), collect(Split::Test));
        if train.is_empty() || test.is_empty() {
            return Err(Error::InvalidInput("dataset has an empty train or test split".into()));
        }
        let ids: Vec<String> = train.iter().map(|(r, _)| r.key.id()).collect();
        Ok(Self {
            train,
            test,
            inputs: InputChecksums {
                dataset: dataset.manifest.content_checksum(),
                boundary_table: sha256_hex(table.to_csv_string().as_bytes()),
                pca: None,
                train_subset: sha256_hex(ids.join("\n").as_bytes()),
            },
        })
    }

    pub fn train_images(&self) -> Vec<&[f64]> {
        self.train.iter().map(|(_, x)| x.as_slice()).collect()
    }

    pub fn fit_pca(&self, k: usize) -> Result<PcaModel> {
        fit_pca(&self.train_images(), k)
    }

    pub fn with_pca(&self, pca: &PcaModel) -> Result<InputChecksums> {
        Ok(InputChecksums {
            pca: Some(sha256_hex(&pca.to_bytes()?)),
            ..self.inputs.clone()
        })
    }
}

/// Encoder angles for both splits.
#[derive(Debug, Clone)]
pub struct Features {
    pub featurizer: Featurizer,
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
}

impl Features {
    pub fn new(prep: &Prepared, pca: &PcaModel, selection: ComponentSelection) -> Result<Self> {
        let featurizer = Featurizer::with_pca(pca.clone(), &prep.train_images(), selection)?;
        let map = |set: &[(SampleRecord, Vec<f64>)]| -> Result<Vec<Vec<f64>>> {
            set.iter().map(|(_, x)| featurizer.transform(x)).collect()
        };
        let train = map(&prep.train)?;
        let test = map(&prep.test)?;
        Ok(Self { featurizer, train, test })
    }
}

/// Seed for the shot sampler of one sample under one reservoir.
pub fn shot_seed(reservoir_seed: u64, sample_seed: u64) -> u64 {
    sha256_u64(format!("qerc-shots:{reservoir_seed}:{sample_seed}").as_bytes())
}

fn reservoir_outputs(
    reservoir: &Reservoir,
    features: &[Vec<f64>],
    records: &[(SampleRecord, Vec<f64>)],
    shots: u32,
) -> Result<Vec<Vec<f64>>> {
    let seed = reservoir.spec().seed;
    features
        .par_iter()
        .zip(records.par_iter())
        .map(|(x, (r, _))| Ok(reservoir.sampled(x, shots, shot_seed(seed, r.seed))?.probs))
        .collect()
}

fn examples(inputs: Vec<Vec<f64>>, records: &[(SampleRecord, Vec<f64>)], normalize: bool) -> Result<Vec<Example>> {
    inputs
        .into_iter()
        .zip(records)
        .map(|(x, (r, _))| {
            Ok(Example {
                input: normalize_input(&x, normalize)?,
                label: r.label,
            })
        })
        .collect()
}

/// What to train for one repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub method: Method,
    pub n_qubits: Option<usize>,
    pub shots: u32,
    pub repetition: usize,
}

/// Readout inputs for one job; `features` must match `job.n_qubits`
/// for the QERC and PCA methods, `pixels` is used by the pixel baseline.
pub struct JobInputs<'a> {
    pub features: Option<&'a Features>,
    pub pixels: Option<&'a (Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

/// Standardized pixels of both splits, fitted on the training split.
pub fn standardized_pixels(prep: &Prepared) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let std = Standardizer::fit(&prep.train_images())?;
    let map = |set: &[(SampleRecord, Vec<f64>)]| -> Result<Vec<Vec<f64>>> {
        set.iter().map(|(_, x)| std.apply(x)).collect()
    };
    Ok((map(&prep.train)?, map(&prep.test)?))
}

/// Runs one job and returns its result plus stage timings.
pub fn run_job(prep: &Prepared, inputs: &JobInputs<'_>, job: Job, cfg: &RunConfig) -> Result<(RepResult, Vec<(String, f64)>)> {
    let (reservoir_seed, train_seed) = cfg.repetition_seeds(job.repetition);
    let mut timings = Vec::new();
    let clock = Instant::now();
    let need_features = || {
        inputs
            .features
            .ok_or_else(|| Error::InvalidInput(format!("{} needs PCA features", job.method.name())))
    };
    let (train_x, test_x, normalize) = match job.method {
        Method::Qerc { variant } => {
            let feats = need_features()?;
            let n = job
                .n_qubits
                .ok_or_else(|| Error::InvalidInput("a reservoir job needs a qubit count".into()))?;
            let reservoir = Reservoir::new(ReservoirSpec::new(n, variant, reservoir_seed)?)?;
            let tr = reservoir_outputs(&reservoir, &feats.train, &prep.train, job.shots)?;
            let te = reservoir_outputs(&reservoir, &feats.test, &prep.test, job.shots)?;
            (tr, te, cfg.train.l2_normalize_inputs)
        }
        Method::PcaBaseline => {
            let feats = need_features()?;
            (feats.train.clone(), feats.test.clone(), false)
        }
        Method::PixelBaseline => {
            let px = inputs
                .pixels
                .ok_or_else(|| Error::InvalidInput("pixel baseline needs standardized pixels".into()))?;
            (px.0.clone(), px.1.clone(), false)
        }
    };
    timings.push(("inputs".to_string(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let train_set = examples(train_x, &prep.train, normalize)?;
    let test_set = examples(test_x, &prep.test, normalize)?;
    let dim = train_set[0].input.len();
    let train_cfg = crate::classifier::TrainConfig {
        seed: train_seed,
        ..cfg.train.clone()
    };
    let (model, history) = train(&LinearModel::zeros(dim), &train_set, &train_cfg)?;
    timings.push(("train".to_string(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let eval = evaluate(&model, &test_set)?;
    timings.push(("evaluate".to_string(), clock.elapsed().as_secs_f64()));
    let predictions = prep
        .test
        .iter()
        .zip(&eval.predictions)
        .map(|((r, _), &p)| Prediction {
            id: r.key.id(),
            f_index: r.key.f_index,
            chi_index: r.key.chi_index,
            f: r.f,
            chi_n: r.chi_n,
            seed: r.seed,
            truth: r.label,
            predicted: p,
        })
        .collect();
    let result = RepResult {
        method: job.method,
        n_qubits: job.n_qubits,
        shots: job.shots,
        repetition: job.repetition,
        reservoir_seed,
        train_seed,
        input_dim: dim,
        train_size: train_set.len(),
        test_size: test_set.len(),
        final_train_loss: history.loss.last().copied().unwrap_or(f64::NAN),
        final_train_accuracy: history.accuracy.last().copied().unwrap_or(f64::NAN),
        test_accuracy: eval.accuracy,
        confusion: eval.confusion,
        predictions,
    };
    Ok((result, timings))
}

/// Majority-vote diagram over all predictions of the given results.
pub fn predicted_diagram(cfg: &RunConfig, results: &[&RepResult]) -> Result<PhaseDiagramGrid> {
    PhaseDiagramGrid::from_predictions(
        &cfg.grid,
        results
            .iter()
            .flat_map(|r| r.predictions.iter().map(|p| (p.f_index, p.chi_index, p.predicted))),
    )
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
