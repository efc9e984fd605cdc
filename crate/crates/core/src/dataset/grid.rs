use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis ranges of the (f, chi) parameter grid; `chi N` uses the fixed chain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub f_start: f64,
    pub f_stop: f64,
    pub f_step: f64,
    pub chi_start: f64,
    pub chi_stop: f64,
    pub chi_step: f64,
    pub n_fixed: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            f_start: 0.3,
            f_stop: 0.5,
            f_step: 0.0125,
            chi_start: 0.1,
            chi_stop: 1.0,
            chi_step: 0.1,
            n_fixed: 25,
        }
    }
}

/// Values are rounded to this many decimals so grid coordinates compare exactly.
const DECIMALS: f64 = 1e10;
const ALIGN_TOL: f64 = 1e-6;

fn snap(x: f64) -> f64 {
    (x * DECIMALS).round() / DECIMALS
}

fn axis(name: &str, start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(Error::Grid(format!("{name} axis has non-finite bounds")));
    }
    if stop < start {
        return Err(Error::Grid(format!("{name} axis stops ({stop}) before it starts ({start})")));
    }
    if stop == start {
        return Ok(vec![snap(start)]);
    }
    if step <= 0.0 {
        return Err(Error::Grid(format!("{name} step must be positive, got {step}")));
    }
    let intervals = (stop - start) / step;
    let n = intervals.round();
    if (intervals - n).abs() > ALIGN_TOL {
        return Err(Error::Grid(format!(
            "{name} step {step} does not divide [{start}, {stop}] ({intervals} steps)"
        )));
    }
    Ok((0..=n as usize).map(|i| snap(start + i as f64 * step)).collect())
}

impl GridSpec {
    /// The reduced 5 x 4 grid used for quick end-to-end runs.
    pub fn desk() -> Self {
        Self {
            f_step: 0.05,
            chi_step: 0.3,
            ..Self::default()
        }
    }

    pub fn f_values(&self) -> Result<Vec<f64>> {
        axis("f", self.f_start, self.f_stop, self.f_step)
    }

    pub fn chi_values(&self) -> Result<Vec<f64>> {
        axis("chi", self.chi_start, self.chi_stop, self.chi_step)
    }

    pub fn chi_n_values(&self) -> Result<Vec<f64>> {
        Ok(self.chi_values()?.into_iter().map(|c| snap(c * self.n_fixed as f64)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fixed == 0 {
            return Err(Error::Grid("n_fixed must be positive".into()));
        }
        let f = self.f_values()?;
        if f.iter().any(|&v| v <= 0.0 || v >= 1.0) {
            return Err(Error::Grid("f values must lie in (0, 1)".into()));
        }
        if self.chi_values()?.iter().any(|&v| v < 0.0) {
            return Err(Error::Grid("chi values must be non-negative".into()));
        }
        Ok(())
    }

    /// Index of `value` on the f axis, if it is a grid value.
    pub fn f_index_of(&self, value: f64) -> Result<Option<usize>> {
        Ok(self.f_values()?.iter().position(|&v| (v - value).abs() < ALIGN_TOL))
    }

    pub fn chi_n_index_of(&self, value: f64) -> Result<Option<usize>> {
        Ok(self.chi_n_values()?.iter().position(|&v| (v - value).abs() < ALIGN_TOL))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub f_index: usize,
    pub chi_index: usize,
    pub f: f64,
    pub chi: f64,
    pub chi_n: f64,
}

/// All grid points, f-major: the chi index varies fastest.
pub fn build_grid(spec: &GridSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    let f = spec.f_values()?;
    let chi = spec.chi_values()?;
    let chi_n = spec.chi_n_values()?;
    Ok(f.iter()
        .enumerate()
        .flat_map(|(fi, &f)| {
            let (chi, chi_n) = (&chi, &chi_n);
            (0..chi.len()).map(move |ci| GridPoint {
                f_index: fi,
                chi_index: ci,
                f,
                chi: chi[ci],
                chi_n: chi_n[ci],
            })
        })
        .collect())
}
