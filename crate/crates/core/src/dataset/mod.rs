//! Parameter grid, seeded SCFT generation, labels, splits and training-set thinning.

mod grid;
mod manifest;
mod store;
mod thinning;

pub use grid::{build_grid, GridPoint, GridSpec};
pub use manifest::{
    plan_dataset, DatasetManifest, FailedSample, SampleKey, SampleRecord, SeedCounts, Split, CONTAINER_FILE,
    MANIFEST_FILE,
};
pub use store::{export_png, generate_dataset, image_bytes, load_dataset, Dataset, GenerateReport, Progress};
pub use thinning::{balance_classes, downsample_training, BalanceSpec, DownsampleSpec, ThinningVariant};

#[cfg(test)]
mod tests;
