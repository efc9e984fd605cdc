use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pca::PcaModel;
use crate::error::{Error, Result};

/// Ordered, distinct, 1-based principal-component indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComponentSelection {
    indices: Vec<usize>,
}

impl ComponentSelection {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Selection("empty selection".into()));
        }
        if indices.contains(&0) {
            return Err(Error::Selection("component indices are 1-based".into()));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Selection(format!("repeated component in {indices:?}")));
        }
        Ok(Self { indices })
    }

    /// Components `1..=n`.
    pub fn identity(n: usize) -> Self {
        Self {
            indices: (1..=n).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max_index(&self) -> usize {
        self.indices.iter().copied().max().unwrap_or(0)
    }

    pub fn is_identity(&self) -> bool {
        self.indices.iter().enumerate().all(|(i, &c)| c == i + 1)
    }

    pub fn validate_for(&self, k: usize) -> Result<()> {
        if self.max_index() > k {
            return Err(Error::Selection(format!(
                "component {} requested but only {k} were fitted",
                self.max_index()
            )));
        }
        Ok(())
    }
}

impl FromStr for ComponentSelection {
    type Err = Error;

    /// Parses lists such as `1-12,15-16`.
    fn from_str(s: &str) -> Result<Self> {
        let mut indices = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Selection(format!("`{t}` is not a component index")))
            };
            match part.split_once('-') {
                Some((a, b)) => {
                    let (a, b) = (parse(a)?, parse(b)?);
                    if b < a {
                        return Err(Error::Selection(format!("descending range `{part}`")));
                    }
                    indices.extend(a..=b);
                }
                None => indices.push(parse(part)?),
            }
        }
        Self::new(indices)
    }
}

impl fmt::Display for ComponentSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut i = 0;
        while i < self.indices.len() {
            let start = self.indices[i];
            let mut end = start;
            while i + 1 < self.indices.len() && self.indices[i + 1] == end + 1 {
                end += 1;
                i += 1;
            }
            parts.push(if end == start { start.to_string() } else { format!("{start}-{end}") });
            i += 1;
        }
        f.write_str(&parts.join(","))
    }
}

impl Serialize for ComponentSelection {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ComponentSelection {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Centered image dotted with the selected axes, in selection order.
pub fn project(model: &PcaModel, image: &[f64], selection: &ComponentSelection) -> Result<Vec<f64>> {
    selection.validate_for(model.k())?;
    if image.len() != model.dim() {
        return Err(Error::Shape(format!("image of {} pixels, model expects {}", image.len(), model.dim())));
    }
    Ok(selection
        .indices()
        .iter()
        .map(|&c| {
            model.components[c - 1]
                .iter()
                .zip(image.iter().zip(&model.mean))
                .map(|(a, (x, m))| a * (x - m))
                .sum()
        })
        .collect())
}

/// Per-component training range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_rescale<T: AsRef<[f64]>>(raw: &[T]) -> Result<RescaleParams> {
    let first = raw
        .first()
        .ok_or_else(|| Error::InvalidInput("no training features to fit the rescale".into()))?
        .as_ref();
    let mut min = first.to_vec();
    let mut max = first.to_vec();
    for x in raw {
        let x = x.as_ref();
        if x.len() != min.len() {
            return Err(Error::Shape("feature vectors differ in length".into()));
        }
        for (j, &v) in x.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(RescaleParams { min, max })
}

/// Maps train-min to 0 and train-max to pi, clamping outside values;
/// a constant component maps to pi/2.
pub fn apply_rescale(params: &RescaleParams, raw: &[f64]) -> Result<Vec<f64>> {
    if raw.len() != params.min.len() {
        return Err(Error::Shape(format!(
            "{} features, rescale fitted on {}",
            raw.len(),
            params.min.len()
        )));
    }
    Ok(raw
        .iter()
        .zip(params.min.iter().zip(&params.max))
        .map(|(&v, (&lo, &hi))| {
            if hi > lo {
                (PI * (v - lo) / (hi - lo)).clamp(0.0, PI)
            } else {
                FRAC_PI_2
            }
        })
        .collect())
}

const ZERO_SPREAD: f64 = 1e-12;

/// Per-pixel training mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<T: AsRef<[f64]>>(images: &[T]) -> Result<Self> {
        let d = images
            .first()
            .ok_or_else(|| Error::InvalidInput("no training images to standardize".into()))?
            .as_ref()
            .len();
        let n = images.len() as f64;
        let mut mean = vec![0.0; d];
        for x in images {
            let x = x.as_ref();
            if x.len() != d {
                return Err(Error::Shape("training images differ in size".into()));
            }
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for x in images {
            for ((s, v), m) in var.iter_mut().zip(x.as_ref()).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        // rounding leaves a constant pixel with a tiny nonzero spread
        let std = var
            .into_iter()
            .zip(&mean)
            .map(|(v, m)| {
                let s = v.sqrt();
                if s <= ZERO_SPREAD * (1.0 + m.abs()) {
                    0.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    /// Zero-variance pixels map to 0.
    pub fn apply(&self, image: &[f64]) -> Result<Vec<f64>> {
        if image.len() != self.mean.len() {
            return Err(Error::Shape(format!(
                "image of {} pixels, standardizer fitted on {}",
                image.len(),
                self.mean.len()
            )));
        }
        Ok(image
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect())
    }
}
