//! Self-consistent field solver for an A-B diblock melt on a periodic 2D lattice.
//!
//! Chain statistics are computed by pseudospectral operator splitting of the
//! modified diffusion equation; the mean fields are relaxed by simple mixing
//! and incompressibility is imposed through a Lagrange-multiplier field.

mod field;
mod propagator;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use field::{wavenumbers_squared, Field2, Spectral};
pub use propagator::{
    compute_density, solve_propagator, Block, BlockPlan, ContourStep, Direction, Propagator,
    PropagatorSolver,
};
pub use solver::{init_fields, run_scft, run_scft_from, update_fields, FieldState, Microstructure, ScftRun};

/// Molecular parameters of the diblock melt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Volume fraction of the A block.
    pub f: f64,
    /// Flory interaction parameter between unlike segments.
    pub chi: f64,
    pub n_segments: usize,
    /// Statistical segment length, in the same length unit as the box.
    pub bond_length: f64,
    /// Inverse temperature; simulation units use 1.
    pub beta: f64,
}

impl MaterialParams {
    pub const DEFAULT_SEGMENTS: usize = 25;
    pub const DEFAULT_BOND_LENGTH: f64 = 1.0;

    pub fn new(f: f64, chi: f64) -> Result<Self> {
        let p = Self {
            f,
            chi,
            n_segments: Self::DEFAULT_SEGMENTS,
            bond_length: Self::DEFAULT_BOND_LENGTH,
            beta: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_segments(mut self, n_segments: usize) -> Result<Self> {
        self.n_segments = n_segments;
        self.validate()?;
        Ok(self)
    }

    pub fn with_bond_length(mut self, bond_length: f64) -> Result<Self> {
        self.bond_length = bond_length;
        self.validate()?;
        Ok(self)
    }

    pub fn chi_n(&self) -> f64 {
        self.chi * self.n_segments as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f < 1.0) {
            return Err(Error::InvalidInput(format!("f must lie in (0, 1), got {}", self.f)));
        }
        if !(self.chi >= 0.0) || !self.chi.is_finite() {
            return Err(Error::InvalidInput(format!("chi must be >= 0, got {}", self.chi)));
        }
        if self.n_segments == 0 {
            return Err(Error::InvalidInput("n_segments must be >= 1".into()));
        }
        if !(self.bond_length > 0.0) || !self.bond_length.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bond_length must be > 0, got {}",
                self.bond_length
            )));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Numerical settings of one SCFT run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub lattice: [usize; 2],
    pub system_size: [f64; 2],
    pub contour_steps: usize,
    pub max_iterations: usize,
    pub mixing_rate: f64,
    pub incompressibility_rate: f64,
    pub tolerance: f64,
    pub noise_amplitude: f64,
    /// Residual above which a run is declared diverged.
    pub divergence_threshold: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lattice: [64, 64],
            system_size: [16.0, 16.0],
            contour_steps: 500,
            max_iterations: 5_000,
            mixing_rate: 0.2,
            incompressibility_rate: 0.3,
            tolerance: 1e-4,
            noise_amplitude: 0.01,
            divergence_threshold: 1e3,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Iteration budget of the original production runs.
    pub const PRODUCTION_ITERATIONS: usize = 300_001;

    pub fn validate(&self) -> Result<()> {
        for &n in &self.lattice {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::InvalidInput(format!(
                    "lattice dimensions must be powers of two >= 2, got {:?}",
                    self.lattice
                )));
            }
        }
        if self.system_size.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "system size must be positive, got {:?}",
                self.system_size
            )));
        }
        if self.contour_steps < 2 {
            return Err(Error::InvalidInput("contour_steps must be >= 2".into()));
        }
        if !(self.mixing_rate >= 0.0 && self.mixing_rate <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "mixing_rate must lie in [0, 1], got {}",
                self.mixing_rate
            )));
        }
        if !(self.incompressibility_rate >= 0.0) {
            return Err(Error::InvalidInput("incompressibility_rate must be >= 0".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be > 0".into()));
        }
        if !(self.noise_amplitude >= 0.0) {
            return Err(Error::InvalidInput("noise_amplitude must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests;
