//! PCA compression, component selection, [0, pi] rescaling and pixel standardization.

mod pca;
mod transform;

pub use pca::{explained_variance, fit_pca, PcaModel, VarianceTable};
pub use transform::{apply_rescale, fit_rescale, project, ComponentSelection, RescaleParams, Standardizer};

use crate::error::Result;

/// A fitted PCA + selection + rescale chain producing encoder angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub pca: PcaModel,
    pub selection: ComponentSelection,
    pub rescale: RescaleParams,
}

impl Featurizer {
    /// Fits PCA with enough components for `selection`, then the rescale on
    /// the projected training set.
    pub fn fit<T: AsRef<[f64]>>(train: &[T], selection: ComponentSelection) -> Result<Self> {
        let pca = fit_pca(train, selection.max_index())?;
        Self::with_pca(pca, train, selection)
    }

    /// Reuses an already fitted PCA model, refitting only the rescale.
    pub fn with_pca<T: AsRef<[f64]>>(pca: PcaModel, train: &[T], selection: ComponentSelection) -> Result<Self> {
        selection.validate_for(pca.k())?;
        let raw = train
            .iter()
            .map(|x| project(&pca, x.as_ref(), &selection))
            .collect::<Result<Vec<_>>>()?;
        let rescale = fit_rescale(&raw)?;
        Ok(Self { pca, selection, rescale })
    }

    pub fn raw(&self, image: &[f64]) -> Result<Vec<f64>> {
        project(&self.pca, image, &self.selection)
    }

    pub fn transform(&self, image: &[f64]) -> Result<Vec<f64>> {
        apply_rescale(&self.rescale, &self.raw(image)?)
    }
}
