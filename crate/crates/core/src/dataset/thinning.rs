use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::labeler::PhaseLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThinningVariant {
    A,
    B,
}

impl fmt::Display for ThinningVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThinningVariant::A => "A",
            ThinningVariant::B => "B",
        })
    }
}

impl FromStr for ThinningVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ThinningVariant::A),
            "B" | "b" => Ok(ThinningVariant::B),
            _ => Err(Error::InvalidInput(format!("unknown thinning variant `{s}` (expected A or B)"))),
        }
    }
}

/// Training coordinates to drop: any sample whose f or chiN is listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownsampleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<ThinningVariant>,
    pub omit_f: Vec<f64>,
    pub omit_chi_n: Vec<f64>,
}

impl DownsampleSpec {
    /// f = 0.3125 + 0.025 n for n = 0..=7, shared by both variants.
    fn thinned_f() -> Vec<f64> {
        (0..8).map(|n| ((0.3125 + 0.025 * n as f64) * 1e10).round() / 1e10).collect()
    }

    pub fn variant(variant: ThinningVariant) -> Self {
        let omit_chi_n = match variant {
            ThinningVariant::A => vec![2.5, 7.5, 12.5, 17.5, 22.5],
            ThinningVariant::B => vec![5.0, 10.0, 15.0, 20.0, 25.0],
        };
        Self {
            variant: Some(variant),
            omit_f: Self::thinned_f(),
            omit_chi_n,
        }
    }

    pub fn none() -> Self {
        Self {
            variant: None,
            omit_f: Vec::new(),
            omit_chi_n: Vec::new(),
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-6
}

/// Removes training samples at omitted coordinates; the test split is kept.
pub fn downsample_training(manifest: &DatasetManifest, spec: &DownsampleSpec) -> Result<DatasetManifest> {
    for &f in &spec.omit_f {
        if manifest.grid.f_index_of(f)?.is_none() {
            return Err(Error::Spec(format!("f = {f} is not on the grid")));
        }
    }
    for &c in &spec.omit_chi_n {
        if manifest.grid.chi_n_index_of(c)?.is_none() {
            return Err(Error::Spec(format!("chiN = {c} is not on the grid")));
        }
    }
    let mut out = manifest.clone();
    if spec.omit_f.is_empty() && spec.omit_chi_n.is_empty() {
        return Ok(out);
    }
    out.samples.retain(|s| {
        s.key.split == Split::Test
            || !(spec.omit_f.iter().any(|&f| close(f, s.f)) || spec.omit_chi_n.iter().any(|&c| close(c, s.chi_n)))
    });
    if out.count(Split::Train) == 0 {
        return Err(Error::Spec("downsampling removes every training sample".into()));
    }
    out.downsample = Some(spec.clone());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub seed: u64,
    pub per_class: usize,
    pub counts_before: [usize; PhaseLabel::COUNT],
}

/// Subsamples each training class, without replacement, to the smallest class count.
pub fn balance_classes(manifest: &DatasetManifest, seed: u64) -> Result<DatasetManifest> {
    let counts = manifest.class_counts(Split::Train);
    if let Some(code) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Balance(format!(
            "class {} has no training samples",
            PhaseLabel::from_code(code).expect("valid code")
        )));
    }
    let per_class = *counts.iter().min().expect("four classes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; manifest.samples.len()];
    for label in PhaseLabel::ALL {
        let members: Vec<usize> = manifest
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.key.split == Split::Train && s.label == label)
            .map(|(i, _)| i)
            .collect();
        let mut chosen = vec![false; members.len()];
        for k in sample(&mut rng, members.len(), per_class) {
            chosen[k] = true;
        }
        for (&i, &c) in members.iter().zip(&chosen) {
            keep[i] = c;
        }
    }
    let mut out = manifest.clone();
    let mut flags = keep.into_iter();
    out.samples.retain(|_| flags.next().expect("one flag per sample"));
    out.balance = Some(BalanceSpec {
        seed,
        per_class,
        counts_before: counts,
    });
    Ok(out)
}
