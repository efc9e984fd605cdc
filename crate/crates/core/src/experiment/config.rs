use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::dataset::{plan_dataset, DatasetManifest, GridSpec, SeedCounts, ThinningVariant};
use crate::error::{Error, Result};
use crate::featurizer::ComponentSelection;
use crate::labeler::BoundaryTable;
use crate::reservoir::{Variant, MAX_QUBITS, MIN_QUBITS};
use crate::scft::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub workdir: PathBuf,
    /// Dataset directory; relative paths resolve against `workdir`.
    pub dataset: PathBuf,
    /// Boundary CSV; the built-in table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_table: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            workdir: PathBuf::from("qerc-work"),
            dataset: PathBuf::from("dataset"),
            boundary_table: None,
        }
    }
}

/// Everything one experiment needs. Every key has a default; see
/// [`RunConfig::full`] and [`RunConfig::desk`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub paths: Paths,
    pub grid: GridSpec,
    pub seeds: SeedCounts,
    pub sim: SimConfig,
    pub n_qubits: usize,
    pub variant: Variant,
    pub reservoir_seed: u64,
    /// Measurement shots per sample; 0 means exact probabilities.
    pub shots: u32,
    /// When nonempty, `run` repeats once per entry instead of using `shots`.
    pub shots_list: Vec<u32>,
    pub qubit_range: [usize; 2],
    pub train: TrainConfig,
    pub repetitions: usize,
    /// 1-based PCA components to encode; `1..=2 n_qubits` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<ComponentSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downsample: Option<ThinningVariant>,
    pub balance: bool,
    pub balance_seed: u64,
    /// SCFT jobs between manifest flushes during generation.
    pub chunk: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl RunConfig {
    /// Production scale: 17 x 10 grid, 24/10 seeds, 64x64 images, 2,048 shots.
    pub fn full() -> Self {
        Self {
            paths: Paths::default(),
            grid: GridSpec::default(),
            seeds: SeedCounts::default(),
            sim: SimConfig::default(),
            n_qubits: 9,
            variant: Variant::CliffordT,
            reservoir_seed: 0,
            shots: 2048,
            shots_list: Vec::new(),
            qubit_range: [MIN_QUBITS, MAX_QUBITS],
            train: TrainConfig::default(),
            repetitions: 3,
            selection: None,
            downsample: None,
            balance: true,
            balance_seed: 0,
            chunk: 32,
        }
    }

    /// Laptop scale: 5 x 4 grid, 6/3 seeds, 32x32 images with a coarser contour.
    pub fn desk() -> Self {
        Self {
            grid: GridSpec::desk(),
            seeds: SeedCounts::desk(),
            sim: SimConfig {
                lattice: [32, 32],
                contour_steps: 50,
                max_iterations: 3_000,
                ..SimConfig::default()
            },
            n_qubits: 8,
            qubit_range: [MIN_QUBITS, 8],
            chunk: 8,
            ..Self::full()
        }
    }

    pub fn preset(desk: bool) -> Self {
        if desk {
            Self::desk()
        } else {
            Self::full()
        }
    }

    /// Parses a TOML file on top of `base`; keys absent from the file keep `base` values.
    pub fn layered(base: &RunConfig, toml_text: &str) -> Result<Self> {
        let overlay: toml::Table =
            toml::from_str(toml_text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        let mut merged = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, overlay);
        let cfg: RunConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(base: &RunConfig, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::layered(base, &text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::layered(&Self::full(), text)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.sim.validate()?;
        self.train.validate()?;
        let [lo, hi] = self.qubit_range;
        for n in [self.n_qubits, lo, hi] {
            if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
                return Err(Error::Config(format!("qubit counts must lie in {MIN_QUBITS}..={MAX_QUBITS}, got {n}")));
            }
        }
        if lo > hi {
            return Err(Error::Config(format!("qubit_range [{lo}, {hi}] is empty")));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.seeds.train == 0 || self.seeds.test == 0 {
            return Err(Error::Config("both splits need at least one seed per grid point".into()));
        }
        if let Some(sel) = &self.selection {
            if sel.len() != 2 * self.n_qubits {
                return Err(Error::Config(format!(
                    "selection has {} components but {} qubits encode {}",
                    sel.len(),
                    self.n_qubits,
                    2 * self.n_qubits
                )));
            }
        }
        Ok(())
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.paths.workdir.join(&self.paths.dataset)
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.paths.workdir.join("runs")
    }

    pub fn boundary_table(&self) -> Result<BoundaryTable> {
        match &self.paths.boundary_table {
            Some(p) => BoundaryTable::load(self.paths.workdir.join(p)),
            None => Ok(BoundaryTable::shipped()),
        }
    }

    /// Encoded components for `n_qubits`: the configured selection or `1..=2n`.
    pub fn selection_for(&self, n_qubits: usize) -> ComponentSelection {
        match &self.selection {
            Some(sel) if sel.len() == 2 * n_qubits => sel.clone(),
            _ => ComponentSelection::identity(2 * n_qubits),
        }
    }

    pub fn plan(&self) -> Result<DatasetManifest> {
        plan_dataset(&self.grid, &self.sim, self.seeds, &self.boundary_table()?)
    }

    /// Training-shuffle and reservoir seeds for repetition `rep`; both move together.
    pub fn repetition_seeds(&self, rep: usize) -> (u64, u64) {
        (
            self.reservoir_seed.wrapping_add(rep as u64),
            self.train.seed.wrapping_add(rep as u64),
        )
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
