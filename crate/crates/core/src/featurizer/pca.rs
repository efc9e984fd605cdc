use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::checksum::sha256_hex;
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest count as zero when judging rank.
const RANK_TOL: f64 = 1e-10;

/// Principal axes of a centered training set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`, by descending variance.
    pub components: Vec<Vec<f64>>,
    pub variance_ratios: Vec<f64>,
}

fn check_images<T: AsRef<[f64]>>(images: &[T]) -> Result<usize> {
    let d = images.first().map(|x| x.as_ref().len()).unwrap_or(0);
    if d == 0 {
        return Err(Error::InvalidInput("no training images".into()));
    }
    if images.iter().any(|x| x.as_ref().len() != d) {
        return Err(Error::Shape("training images differ in size".into()));
    }
    Ok(d)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits the top-`k` principal axes.
///
/// Works on the `n x n` Gram matrix when there are fewer images than pixels,
/// otherwise on the `d x d` covariance.
pub fn fit_pca<T: AsRef<[f64]>>(images: &[T], k: usize) -> Result<PcaModel> {
    let d = check_images(images)?;
    let n = images.len();
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if n < k + 1 {
        return Err(Error::Rank { requested: k, rank: n.saturating_sub(1) });
    }
    let mut mean = vec![0.0; d];
    for x in images {
        for (m, v) in mean.iter_mut().zip(x.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| images[i].as_ref()[j] - mean[j]);

    let (values, mut axes) = if n <= d {
        let gram = &centered * centered.transpose();
        let eig = SymmetricEigen::new(gram);
        let order = descending(&eig.eigenvalues);
        let axes: Vec<Vec<f64>> = order
            .iter()
            .take(k)
            .map(|&i| {
                let u = eig.eigenvectors.column(i);
                let v = centered.transpose() * u;
                v.iter().copied().collect()
            })
            .collect();
        (order.iter().map(|&i| eig.eigenvalues[i]).collect::<Vec<_>>(), axes)
    } else {
        let scatter = centered.transpose() * &centered;
        let eig = SymmetricEigen::new(scatter);
        let order = descending(&eig.eigenvalues);
        let axes = order
            .iter()
            .take(k)
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (order.iter().map(|&i| eig.eigenvalues[i]).collect::<Vec<_>>(), axes)
    };

    let top = values[0].max(0.0);
    let rank = values.iter().filter(|&&v| v > RANK_TOL * top && top > 0.0).count();
    if k > rank {
        return Err(Error::Rank { requested: k, rank });
    }
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();

    // Gram-Schmidt cleans up the loss of orthogonality from the Gram route.
    for i in 0..k {
        for j in 0..i {
            let proj = dot(&axes[i], &axes[j]);
            let (head, tail) = axes.split_at_mut(i);
            for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                *a -= proj * b;
            }
        }
        let norm = dot(&axes[i], &axes[i]).sqrt();
        axes[i].iter_mut().for_each(|a| *a /= norm);
        fix_sign(&mut axes[i]);
    }

    Ok(PcaModel {
        mean,
        components: axes,
        variance_ratios: values.iter().take(k).map(|v| v.max(0.0) / total).collect(),
    })
}

fn descending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Makes the largest-magnitude coordinate positive (first one on ties).
fn fix_sign(axis: &mut [f64]) {
    let mut best = 0;
    for (i, v) in axis.iter().enumerate() {
        if v.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis[best] < 0.0 {
        axis.iter_mut().for_each(|v| *v = -*v);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTable {
    pub ratios: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl VarianceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("component,ratio,cumulative\n");
        for (i, (r, c)) in self.ratios.iter().zip(&self.cumulative).enumerate() {
            out.push_str(&format!("{},{r},{c}\n", i + 1));
        }
        out
    }
}

pub fn explained_variance(model: &PcaModel) -> VarianceTable {
    let mut acc = 0.0;
    let cumulative = model
        .variance_ratios
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();
    VarianceTable {
        ratios: model.variance_ratios.clone(),
        cumulative,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BlobHeader {
    k: usize,
    d: usize,
    variance_ratios: Vec<f64>,
    checksum: String,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn payload(&self) -> Vec<u8> {
        self.mean
            .iter()
            .chain(self.components.iter().flatten())
            .flat_map(|v| v.to_le_bytes())
            .collect()
    }

    /// One JSON header line followed by little-endian f64 mean and axes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = self.payload();
        let header = BlobHeader {
            k: self.k(),
            d: self.dim(),
            variance_ratios: self.variance_ratios.clone(),
            checksum: sha256_hex(&payload),
        };
        let mut out = serde_json::to_vec(&header)?;
        out.push(b'\n');
        out.write_all(&payload)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("PCA blob has no header line".into()))?;
        let header: BlobHeader = serde_json::from_slice(&bytes[..split])?;
        let payload = &bytes[split + 1..];
        if payload.len() != (header.k + 1) * header.d * 8 {
            return Err(Error::Format("PCA blob payload has the wrong length".into()));
        }
        if sha256_hex(payload) != header.checksum {
            return Err(Error::Format("PCA blob checksum mismatch".into()));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut rows = values.chunks(header.d).map(<[f64]>::to_vec);
        let mean = rows.next().expect("mean row");
        Ok(Self {
            mean,
            components: rows.collect(),
            variance_ratios: header.variance_ratios,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
