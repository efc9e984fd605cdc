use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{build_grid, GridSpec};
use super::thinning::{BalanceSpec, DownsampleSpec};
use crate::checksum::{sha256_hex, sha256_u64};
use crate::error::{Error, Result};
use crate::labeler::{label_point, BoundaryTable, PhaseLabel};
use crate::scft::SimConfig;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidInput(format!("unknown split `{s}`"))),
        }
    }
}

/// Number of SCFT seeds per grid point in each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCounts {
    pub train: usize,
    pub test: usize,
}

impl Default for SeedCounts {
    fn default() -> Self {
        Self { train: 24, test: 10 }
    }
}

impl SeedCounts {
    pub fn desk() -> Self {
        Self { train: 6, test: 3 }
    }

    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Test => self.test,
        }
    }
}

/// Identity of one sample: grid point, split and replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleKey {
    pub split: Split,
    pub f_index: usize,
    pub chi_index: usize,
    pub replica: usize,
}

impl SampleKey {
    /// Stable 64-bit seed derived from the key.
    pub fn seed(&self) -> u64 {
        let text = format!(
            "qerc-sample:{}:{}:{}:{}",
            self.f_index,
            self.chi_index,
            self.split.tag(),
            self.replica
        );
        sha256_u64(text.as_bytes())
    }

    pub fn id(&self) -> String {
        format!("{}-{:02}-{:02}-{:02}", self.split.tag(), self.f_index, self.chi_index, self.replica)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    #[serde(flatten)]
    pub key: SampleKey,
    pub f: f64,
    pub chi_n: f64,
    pub seed: u64,
    pub label: PhaseLabel,
    /// Image slot in the container, once generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSample {
    #[serde(flatten)]
    pub key: SampleKey,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub grid: GridSpec,
    pub sim: SimConfig,
    pub seeds: SeedCounts,
    /// SHA-256 of the boundary table used for labels.
    pub boundary_checksum: String,
    pub image_shape: [usize; 2],
    pub container: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downsample: Option<DownsampleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceSpec>,
    pub samples: Vec<SampleRecord>,
    #[serde(default)]
    pub failures: Vec<FailedSample>,
}

pub const CONTAINER_FILE: &str = "images.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Enumerates every sample of the grid with its seed and label, without images.
pub fn plan_dataset(grid: &GridSpec, sim: &SimConfig, seeds: SeedCounts, table: &BoundaryTable) -> Result<DatasetManifest> {
    sim.validate()?;
    let points = build_grid(grid)?;
    let mut samples = Vec::with_capacity(points.len() * (seeds.train + seeds.test));
    for split in [Split::Train, Split::Test] {
        for p in &points {
            let label = label_point(p.f, p.chi_n, table)?;
            for replica in 0..seeds.count(split) {
                let key = SampleKey {
                    split,
                    f_index: p.f_index,
                    chi_index: p.chi_index,
                    replica,
                };
                samples.push(SampleRecord {
                    key,
                    f: p.f,
                    chi_n: p.chi_n,
                    seed: key.seed(),
                    label,
                    offset: None,
                    checksum: None,
                    converged: None,
                    iterations: None,
                });
            }
        }
    }
    Ok(DatasetManifest {
        version: MANIFEST_VERSION,
        grid: *grid,
        sim: sim.clone(),
        seeds,
        boundary_checksum: sha256_hex(table.to_csv_string().as_bytes()),
        image_shape: sim.lattice,
        container: CONTAINER_FILE.to_string(),
        downsample: None,
        balance: None,
        samples,
        failures: Vec::new(),
    })
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &SampleRecord> {
        self.samples.iter().filter(move |s| s.key.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Distinct grid points carrying at least one sample of `split`.
    pub fn point_count(&self, split: Split) -> usize {
        let mut points: Vec<(usize, usize)> = self.split(split).map(|s| (s.key.f_index, s.key.chi_index)).collect();
        points.sort_unstable();
        points.dedup();
        points.len()
    }

    pub fn class_counts(&self, split: Split) -> [usize; PhaseLabel::COUNT] {
        let mut counts = [0; PhaseLabel::COUNT];
        for s in self.split(split) {
            counts[s.label.code()] += 1;
        }
        counts
    }

    pub fn pixels(&self) -> usize {
        self.image_shape[0] * self.image_shape[1]
    }

    pub fn is_generated(&self) -> bool {
        self.samples.iter().all(|s| s.checksum.is_some())
    }

    /// Checksum over sample identities, labels and image checksums.
    pub fn content_checksum(&self) -> String {
        let mut text = String::new();
        for s in &self.samples {
            text.push_str(&format!(
                "{},{},{},{}\n",
                s.key.id(),
                s.seed,
                s.label.code(),
                s.checksum.as_deref().unwrap_or("-")
            ));
        }
        sha256_hex(text.as_bytes())
    }

    /// Checks that every label re-derives from the given boundary table.
    pub fn verify_labels(&self, table: &BoundaryTable) -> Result<()> {
        for s in &self.samples {
            let expected = label_point(s.f, s.chi_n, table)?;
            if expected != s.label {
                return Err(Error::Format(format!(
                    "sample {} is labeled {} but the boundary table gives {}",
                    s.key.id(),
                    s.label,
                    expected
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Format(format!("unsupported manifest version {}", manifest.version)));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Writes via a sibling temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
