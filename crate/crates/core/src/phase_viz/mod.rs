//! Majority-vote phase diagrams, their renderings and accuracy curves.

mod curve;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use curve::{render_accuracy_curve, AccuracySeries, LineStyle};
pub use render::{render_panels_svg, render_phase_diagram, render_png, render_svg, Palette};

use crate::dataset::{build_grid, GridSpec};
use crate::error::{Error, Result};
use crate::labeler::{label_point, BoundaryTable, PhaseLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VotedCell {
    pub label: PhaseLabel,
    /// Fraction of votes for `label`.
    pub ratio: f64,
    pub tied: bool,
}

/// Most frequent label; ties go to the lowest class code and are flagged.
pub fn majority_vote(predictions: &[PhaseLabel]) -> Result<VotedCell> {
    if predictions.is_empty() {
        return Err(Error::EmptyVote);
    }
    let mut counts = [0usize; PhaseLabel::COUNT];
    for p in predictions {
        counts[p.code()] += 1;
    }
    let best = *counts.iter().max().expect("four classes");
    let winner = counts.iter().position(|&c| c == best).expect("max exists");
    Ok(VotedCell {
        label: PhaseLabel::from_code(winner).expect("valid code"),
        ratio: best as f64 / predictions.len() as f64,
        tied: counts.iter().filter(|&&c| c == best).count() > 1,
    })
}

/// Voted cells over the (f, chiN) grid, f-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramGrid {
    pub f_values: Vec<f64>,
    pub chi_n_values: Vec<f64>,
    cells: Vec<Option<VotedCell>>,
}

impl PhaseDiagramGrid {
    pub fn empty(spec: &GridSpec) -> Result<Self> {
        let f_values = spec.f_values()?;
        let chi_n_values = spec.chi_n_values()?;
        let cells = vec![None; f_values.len() * chi_n_values.len()];
        Ok(Self {
            f_values,
            chi_n_values,
            cells,
        })
    }

    /// Ground-truth labels from the boundary table, one unanimous vote per cell.
    pub fn from_truth(spec: &GridSpec, table: &BoundaryTable) -> Result<Self> {
        let mut grid = Self::empty(spec)?;
        for p in build_grid(spec)? {
            grid.set(
                p.f_index,
                p.chi_index,
                Some(VotedCell {
                    label: label_point(p.f, p.chi_n, table)?,
                    ratio: 1.0,
                    tied: false,
                }),
            );
        }
        Ok(grid)
    }

    /// Votes per grid point from `(f_index, chi_index, predicted)` triples.
    pub fn from_predictions(spec: &GridSpec, predictions: impl IntoIterator<Item = (usize, usize, PhaseLabel)>) -> Result<Self> {
        let mut grid = Self::empty(spec)?;
        let mut votes: BTreeMap<(usize, usize), Vec<PhaseLabel>> = BTreeMap::new();
        for (fi, ci, label) in predictions {
            if fi >= grid.f_values.len() || ci >= grid.chi_n_values.len() {
                return Err(Error::Shape(format!("prediction at ({fi}, {ci}) is off the grid")));
            }
            votes.entry((fi, ci)).or_default().push(label);
        }
        for ((fi, ci), labels) in votes {
            grid.set(fi, ci, Some(majority_vote(&labels)?));
        }
        Ok(grid)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.f_values.len(), self.chi_n_values.len())
    }

    pub fn get(&self, f_index: usize, chi_index: usize) -> Option<&VotedCell> {
        self.cells[f_index * self.chi_n_values.len() + chi_index].as_ref()
    }

    pub fn set(&mut self, f_index: usize, chi_index: usize, cell: Option<VotedCell>) {
        let n = self.chi_n_values.len();
        self.cells[f_index * n + chi_index] = cell;
    }

    /// `(f_index, chi_index, cell)` in f-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, Option<&VotedCell>)> {
        let n = self.chi_n_values.len();
        self.cells.iter().enumerate().map(move |(i, c)| (i / n, i % n, c.as_ref()))
    }

    /// CSV with header `f,chiN,label,ratio,tied`; empty cells are skipped.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f,chiN,label,ratio,tied\n");
        for (fi, ci, cell) in self.cells() {
            if let Some(c) = cell {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    self.f_values[fi], self.chi_n_values[ci], c.label, c.ratio, c.tied
                ));
            }
        }
        out
    }

    /// Reads the CSV written by [`to_csv`](Self::to_csv) onto the axes of `spec`.
    pub fn from_csv(spec: &GridSpec, text: &str) -> Result<Self> {
        let mut grid = Self::empty(spec)?;
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for row in reader.records() {
            let row = row?;
            if row.len() != 5 {
                return Err(Error::Format(format!("expected 5 columns, got {}", row.len())));
            }
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse()
                    .map_err(|_| Error::Format(format!("`{}` is not a number", &row[i])))
            };
            let (f, chi_n) = (num(0)?, num(1)?);
            let fi = spec
                .f_index_of(f)?
                .ok_or_else(|| Error::Shape(format!("f = {f} is not on the grid")))?;
            let ci = spec
                .chi_n_index_of(chi_n)?
                .ok_or_else(|| Error::Shape(format!("chiN = {chi_n} is not on the grid")))?;
            let cell = VotedCell {
                label: row[2].parse()?,
                ratio: num(3)?,
                tied: row[4]
                    .parse()
                    .map_err(|_| Error::Format(format!("`{}` is not a boolean", &row[4])))?,
            };
            grid.set(fi, ci, Some(cell));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub f: f64,
    pub chi_n: f64,
    pub predicted: Option<PhaseLabel>,
    pub truth: PhaseLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub cells: usize,
    pub mismatches: Vec<Mismatch>,
    pub cell_accuracy: f64,
}

/// Cell-by-cell comparison against ground truth; empty predicted cells count as misses.
pub fn diff_diagram(predicted: &PhaseDiagramGrid, truth: &PhaseDiagramGrid) -> Result<DiffReport> {
    let same_axis = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
    if !same_axis(&predicted.f_values, &truth.f_values) || !same_axis(&predicted.chi_n_values, &truth.chi_n_values) {
        return Err(Error::Shape("predicted and truth diagrams have different axes".into()));
    }
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for (fi, ci, t) in truth.cells() {
        let Some(t) = t else { continue };
        cells += 1;
        let p = predicted.get(fi, ci).map(|c| c.label);
        if p != Some(t.label) {
            mismatches.push(Mismatch {
                f: truth.f_values[fi],
                chi_n: truth.chi_n_values[ci],
                predicted: p,
                truth: t.label,
            });
        }
    }
    Ok(DiffReport {
        cells,
        cell_accuracy: if cells == 0 { 0.0 } else { (cells - mismatches.len()) as f64 / cells as f64 },
        mismatches,
    })
}
