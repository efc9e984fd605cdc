use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::checksum::sha256_hex;
use crate::classifier::CLASSES;
use crate::error::Result;
use crate::labeler::PhaseLabel;
use crate::reservoir::Variant;

/// Which model produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Method {
    Qerc { variant: Variant },
    /// Linear readout on the rescaled PCA features that the encoder would see.
    PcaBaseline,
    /// Linear readout on standardized raw pixels.
    PixelBaseline,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Qerc { variant } => format!("qerc-{}", variant.name()),
            Method::PcaBaseline => "pca-baseline".into(),
            Method::PixelBaseline => "pixel-baseline".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub f_index: usize,
    pub chi_index: usize,
    pub f: f64,
    pub chi_n: f64,
    pub seed: u64,
    pub truth: PhaseLabel,
    pub predicted: PhaseLabel,
}

/// Outcome of one trained and evaluated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub method: Method,
    /// Absent for the pixel baseline, which does not depend on the register size.
    pub n_qubits: Option<usize>,
    pub shots: u32,
    pub repetition: usize,
    pub reservoir_seed: u64,
    pub train_seed: u64,
    pub input_dim: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub final_train_loss: f64,
    pub final_train_accuracy: f64,
    pub test_accuracy: f64,
    pub confusion: [[usize; CLASSES]; CLASSES],
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: Method,
    pub n_qubits: Option<usize>,
    pub shots: u32,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(results: &[&RepResult]) -> Option<Self> {
        let first = results.first()?;
        let accuracies: Vec<f64> = results.iter().map(|r| r.test_accuracy).collect();
        Some(Self {
            method: first.method,
            n_qubits: first.n_qubits,
            shots: first.shots,
            mean: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
            min: accuracies.iter().copied().fold(f64::INFINITY, f64::min),
            max: accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            accuracies,
        })
    }
}

/// Content checksums of everything a result depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputChecksums {
    pub dataset: String,
    pub boundary_table: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<String>,
    /// Training subset after thinning and balancing.
    pub train_subset: String,
}

/// One JSON line of an experiment log: either a single result or a summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub command: String,
    pub config: RunConfig,
    pub inputs: InputChecksums,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<RepResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    pub artifacts: Vec<String>,
    /// Wall-clock seconds per stage; not part of the checksum.
    pub timings: BTreeMap<String, f64>,
    pub checksum: String,
}

impl ExperimentRecord {
    pub fn new(
        command: &str,
        config: &RunConfig,
        inputs: &InputChecksums,
        result: Option<RepResult>,
        summary: Option<Summary>,
    ) -> Result<Self> {
        let mut rec = Self {
            command: command.to_string(),
            config: config.clone(),
            inputs: inputs.clone(),
            result,
            summary,
            artifacts: Vec::new(),
            timings: BTreeMap::new(),
            checksum: String::new(),
        };
        rec.checksum = rec.content_checksum()?;
        Ok(rec)
    }

    /// SHA-256 over the record with timings and the checksum itself blanked.
    pub fn content_checksum(&self) -> Result<String> {
        let mut bare = self.clone();
        bare.timings.clear();
        bare.checksum.clear();
        Ok(sha256_hex(&serde_json::to_vec(&bare)?))
    }

    pub fn verify(&self) -> Result<bool> {
        Ok(self.content_checksum()? == self.checksum)
    }

    pub fn label(&self) -> String {
        let (method, n) = match (&self.result, &self.summary) {
            (Some(r), _) => (r.method, r.n_qubits),
            (None, Some(s)) => (s.method, s.n_qubits),
            _ => return self.command.clone(),
        };
        match n {
            Some(n) => format!("{}-{n}q", method.name()),
            None => method.name(),
        }
    }
}

pub fn append_records(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
