//! Phase classification of block-copolymer microstructures with a quantum
//! extreme reservoir.
//!
//! The pipeline generates labeled density images with a 2D SCFT solver
//! ([`scft`], [`labeler`], [`dataset`]), compresses them with PCA
//! ([`featurizer`]), maps them through a fixed random Clifford+T circuit
//! ([`reservoir`]), trains a softmax readout ([`classifier`]) and rebuilds
//! predicted phase diagrams by majority vote ([`phase_viz`]). The
//! [`experiment`] module wires these into the reproducible runs exposed by
//! the `qerc` binary.

pub mod checksum;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod featurizer;
pub mod labeler;
pub mod phase_viz;
pub mod reservoir;
pub mod scft;

pub use error::{Error, ErrorKind, Result};
