use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::{write_atomic, DatasetManifest, FailedSample, SampleKey, SampleRecord, Split, MANIFEST_FILE};
use crate::checksum::sha256_hex;
use crate::error::{Error, ErrorKind, Result};
use crate::scft::{run_scft, MaterialParams};

/// Little-endian f32 bytes of one image.
pub fn image_bytes(image: &[f32]) -> Vec<u8> {
    image.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn image_from_bytes(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// Manifest plus the images it references, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    images: Vec<Vec<f32>>,
}

impl Dataset {
    pub fn new(manifest: DatasetManifest, images: Vec<Vec<f32>>) -> Result<Self> {
        if images.len() != manifest.samples.len() {
            return Err(Error::Shape(format!(
                "{} images for {} manifest samples",
                images.len(),
                manifest.samples.len()
            )));
        }
        let pixels = manifest.pixels();
        if let Some(bad) = images.iter().find(|im| im.len() != pixels) {
            return Err(Error::Shape(format!("image of {} pixels, expected {pixels}", bad.len())));
        }
        Ok(Self { manifest, images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, index: usize) -> &[f32] {
        &self.images[index]
    }

    pub fn samples(&self) -> impl Iterator<Item = (&SampleRecord, &[f32])> {
        self.manifest.samples.iter().zip(self.images.iter().map(Vec::as_slice))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = (&SampleRecord, &[f32])> {
        self.samples().filter(move |(s, _)| s.key.split == split)
    }

    /// The subset named by `manifest` (e.g. after thinning), which must only
    /// reference samples held here.
    pub fn restrict(&self, manifest: &DatasetManifest) -> Result<Dataset> {
        let index: HashMap<SampleKey, usize> = self
            .manifest
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.key, i))
            .collect();
        let images = manifest
            .samples
            .iter()
            .map(|s| {
                index
                    .get(&s.key)
                    .map(|&i| self.images[i].clone())
                    .ok_or_else(|| Error::Format(format!("sample {} is not in the dataset", s.key.id())))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(manifest.clone(), images)
    }
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}

/// Loads a generated dataset and verifies every image checksum.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let path = manifest_path(dir);
    if !path.exists() {
        return Err(Error::MissingDataset(dir.to_path_buf()));
    }
    let manifest = DatasetManifest::load(&path)?;
    if !manifest.is_generated() {
        return Err(Error::Format(format!(
            "dataset at {} is incomplete; rerun `qerc generate` to resume",
            dir.display()
        )));
    }
    let images = read_images(dir, &manifest)?;
    let images = manifest
        .samples
        .iter()
        .map(|s| {
            images
                .get(&s.key)
                .cloned()
                .ok_or_else(|| Error::Format(format!("image of sample {} is missing or corrupt", s.key.id())))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(manifest, images)
}

/// Images of every manifest sample whose container bytes match its checksum.
fn read_images(dir: &Path, manifest: &DatasetManifest) -> Result<HashMap<SampleKey, Vec<f32>>> {
    let path = dir.join(&manifest.container);
    let mut out = HashMap::new();
    let Ok(mut file) = File::open(&path) else {
        return Ok(out);
    };
    let len = file.metadata()?.len();
    let stride = (manifest.pixels() * 4) as u64;
    let mut buf = vec![0u8; stride as usize];
    for s in &manifest.samples {
        let (Some(offset), Some(checksum)) = (s.offset, s.checksum.as_deref()) else {
            continue;
        };
        let start = offset as u64 * stride;
        if start + stride > len {
            continue;
        }
        file.seek(SeekFrom::Start(start))?;
        file.read_exact(&mut buf)?;
        if sha256_hex(&buf) == checksum {
            out.insert(s.key, image_from_bytes(&buf));
        }
    }
    Ok(out)
}

/// Outcome counts of a generation call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenerateReport {
    pub generated: usize,
    pub reused: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

enum JobResult {
    Done { image: Vec<f32>, converged: bool, iterations: usize },
    Failed(String),
}

fn run_job(manifest: &DatasetManifest, record: &SampleRecord) -> Result<JobResult> {
    let chi = manifest.grid.chi_values()?[record.key.chi_index];
    let params = MaterialParams::new(record.f, chi)?.with_segments(manifest.grid.n_fixed)?;
    match run_scft(&params, &manifest.sim, record.seed) {
        Ok(m) => Ok(JobResult::Done {
            image: m.phi_a.as_slice().iter().map(|&v| v as f32).collect(),
            converged: m.converged,
            iterations: m.iterations_used,
        }),
        Err(e) if e.kind() == ErrorKind::Numerical => Ok(JobResult::Failed(e.to_string())),
        Err(e) => Err(e),
    }
}

fn same_plan(a: &DatasetManifest, b: &DatasetManifest) -> bool {
    a.grid == b.grid && a.sim == b.sim && a.seeds == b.seeds && a.boundary_checksum == b.boundary_checksum
}

/// Runs SCFT for every planned sample and writes the container and manifest to `dir`.
///
/// Samples already present in an existing container with matching checksums,
/// and samples already recorded as failed, are not recomputed. Progress is
/// flushed to disk every `chunk` jobs so an interrupted run can resume.
pub fn generate_dataset(
    dir: impl AsRef<Path>,
    plan: &DatasetManifest,
    chunk: usize,
    mut progress: impl FnMut(Progress),
) -> Result<(DatasetManifest, GenerateReport)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut report = GenerateReport::default();
    let mut existing: HashMap<SampleKey, (Vec<f32>, SampleRecord)> = HashMap::new();
    let mut failures = Vec::new();
    let path = manifest_path(dir);
    if path.exists() {
        let old = DatasetManifest::load(&path)?;
        if same_plan(&old, plan) {
            let images = read_images(dir, &old)?;
            for s in &old.samples {
                if let Some(image) = images.get(&s.key) {
                    existing.insert(s.key, (image.clone(), s.clone()));
                }
            }
            failures = old
                .failures
                .into_iter()
                .filter(|f| plan.samples.iter().any(|s| s.key == f.key))
                .collect();
        }
    }

    let mut manifest = plan.clone();
    manifest.samples.clear();
    manifest.failures.clear();
    let container = dir.join(&manifest.container);
    let mut writer = BufWriter::new(File::create(&container)?);
    let mut slot = 0;
    let total = plan.samples.len();
    let mut todo = Vec::new();

    for record in &plan.samples {
        if let Some((image, old)) = existing.remove(&record.key) {
            writer.write_all(&image_bytes(&image))?;
            manifest.samples.push(SampleRecord {
                offset: Some(slot),
                ..old
            });
            slot += 1;
            report.reused += 1;
        } else if failures.iter().any(|f: &FailedSample| f.key == record.key) {
            report.failed += 1;
        } else {
            todo.push(record.clone());
        }
    }
    writer.flush()?;
    drop(writer);
    manifest.failures = failures;
    manifest.save(&path)?;
    let mut done = report.reused + report.failed;
    progress(Progress { done, total });

    for batch in todo.chunks(chunk.max(1)) {
        let results = batch
            .par_iter()
            .map(|r| run_job(plan, r))
            .collect::<Result<Vec<_>>>()?;
        let mut file = OpenOptions::new().append(true).open(&container)?;
        for (record, result) in batch.iter().zip(results) {
            match result {
                JobResult::Done {
                    image,
                    converged,
                    iterations,
                } => {
                    let bytes = image_bytes(&image);
                    file.write_all(&bytes)?;
                    manifest.samples.push(SampleRecord {
                        offset: Some(slot),
                        checksum: Some(sha256_hex(&bytes)),
                        converged: Some(converged),
                        iterations: Some(iterations),
                        ..record.clone()
                    });
                    slot += 1;
                    report.generated += 1;
                }
                JobResult::Failed(reason) => {
                    manifest.failures.push(FailedSample {
                        key: record.key,
                        seed: record.seed,
                        reason,
                    });
                    report.failed += 1;
                }
            }
        }
        file.flush()?;
        manifest.save(&path)?;
        done += batch.len();
        progress(Progress { done, total });
    }

    canonicalize(dir, &mut manifest, plan)?;
    Ok((manifest, report))
}

/// Reorders samples and container slots to plan order.
fn canonicalize(dir: &Path, manifest: &mut DatasetManifest, plan: &DatasetManifest) -> Result<()> {
    let order: HashMap<SampleKey, usize> = plan.samples.iter().enumerate().map(|(i, s)| (s.key, i)).collect();
    manifest.samples.sort_by_key(|s| order[&s.key]);
    manifest.failures.sort_by_key(|f| order[&f.key]);
    let in_place = manifest.samples.iter().enumerate().all(|(i, s)| s.offset == Some(i));
    if !in_place {
        let images = read_images(dir, manifest)?;
        let mut bytes = Vec::with_capacity(manifest.samples.len() * manifest.pixels() * 4);
        for (i, s) in manifest.samples.iter_mut().enumerate() {
            bytes.extend(image_bytes(&images[&s.key]));
            s.offset = Some(i);
        }
        write_atomic(&dir.join(&manifest.container), &bytes)?;
    }
    manifest.save(manifest_path(dir))
}

/// Grayscale PNG of one density image, mapping [0, 1] to black..white.
pub fn export_png(image: &[f32], shape: [usize; 2], path: impl AsRef<Path>) -> Result<()> {
    let [nx, ny] = shape;
    if image.len() != nx * ny {
        return Err(Error::Shape(format!("{} pixels for a {nx}x{ny} image", image.len())));
    }
    let pixels: Vec<u8> = image.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let img = image::GrayImage::from_raw(ny as u32, nx as u32, pixels).expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
