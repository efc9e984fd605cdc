//! Ground-truth phase labels over the `(f, chiN)` plane.
//!
//! The order-disorder line is the mean-field spinodal of the diblock melt;
//! order-order boundaries come from an interpolated boundary table.

mod boundary;
mod spinodal;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boundary::{interpolate_boundary, BoundaryCurve, BoundaryTable, Interpolated, CURVE_GYROID_LAMELLAR, CURVE_HEX_GYROID};
pub use spinodal::{debye_g, spinodal_chi_n, spinodal_chi_n_in, structure_factor_f, Spinodal, SpinodalQuery};

/// The four microphase classes, with stable integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseLabel {
    Disordered = 0,
    Hexagonal = 1,
    Gyroid = 2,
    Lamellar = 3,
}

impl PhaseLabel {
    pub const ALL: [PhaseLabel; 4] = [
        PhaseLabel::Disordered,
        PhaseLabel::Hexagonal,
        PhaseLabel::Gyroid,
        PhaseLabel::Lamellar,
    ];
    pub const COUNT: usize = 4;

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseLabel::Disordered => "disordered",
            PhaseLabel::Hexagonal => "hexagonal",
            PhaseLabel::Gyroid => "gyroid",
            PhaseLabel::Lamellar => "lamellar",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disordered" | "d" | "0" => Ok(PhaseLabel::Disordered),
            "hexagonal" | "h" | "1" => Ok(PhaseLabel::Hexagonal),
            "gyroid" | "g" | "2" => Ok(PhaseLabel::Gyroid),
            "lamellar" | "l" | "3" => Ok(PhaseLabel::Lamellar),
            other => Err(Error::InvalidInput(format!("unknown phase label `{other}`"))),
        }
    }
}

/// Labels one state point.
///
/// Compositions above one half are folded onto `1 - f`. Below the spinodal the
/// melt is disordered; above it, `f` is compared with the hexagonal/gyroid and
/// gyroid/lamellar curves. A point exactly on a curve goes to the side farther
/// from `f = 0.5`.
pub fn label_point(f: f64, chi_n: f64, table: &BoundaryTable) -> Result<PhaseLabel> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidInput(format!("f must lie in (0, 1), got {f}")));
    }
    let folded = f.min(1.0 - f);
    let spinodal = spinodal_chi_n(folded)?;
    if chi_n < spinodal.chi_n {
        return Ok(PhaseLabel::Disordered);
    }
    let gap = |e: Error| match e {
        Error::Extrapolation { curve, lo, hi, .. } => Error::LabelingGap {
            f,
            chi_n,
            reason: format!("curve `{curve}` only spans chiN in [{lo}, {hi}]"),
        },
        other => other,
    };
    let hex_gyroid = interpolate_boundary(table, CURVE_HEX_GYROID, chi_n).map_err(gap)?.linear;
    let gyroid_lamellar = interpolate_boundary(table, CURVE_GYROID_LAMELLAR, chi_n)
        .map_err(gap)?
        .linear;
    Ok(if folded <= hex_gyroid {
        PhaseLabel::Hexagonal
    } else if folded <= gyroid_lamellar {
        PhaseLabel::Gyroid
    } else {
        PhaseLabel::Lamellar
    })
}
