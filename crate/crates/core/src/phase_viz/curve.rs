use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineStyle {
    Solid,
    Dashed,
}

/// Accuracy per qubit count, one value per repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySeries {
    pub name: String,
    pub style: LineStyle,
    pub points: BTreeMap<usize, Vec<f64>>,
}

impl AccuracySeries {
    pub fn new(name: impl Into<String>, style: LineStyle) -> Self {
        Self {
            name: name.into(),
            style,
            points: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, qubits: usize, accuracy: f64) {
        self.points.entry(qubits).or_default().push(accuracy);
    }

    pub fn mean(&self, qubits: usize) -> Option<f64> {
        self.points
            .get(&qubits)
            .filter(|v| !v.is_empty())
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Rows `series,style,qubits,repetition,accuracy`.
    pub fn to_csv(series: &[AccuracySeries]) -> String {
        let mut out = String::from("series,style,qubits,repetition,accuracy\n");
        for s in series {
            let style = match s.style {
                LineStyle::Solid => "solid",
                LineStyle::Dashed => "dashed",
            };
            for (q, values) in &s.points {
                for (r, v) in values.iter().enumerate() {
                    let _ = writeln!(out, "{},{style},{q},{r},{v}", s.name);
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Vec<AccuracySeries>> {
        let mut out: Vec<AccuracySeries> = Vec::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for row in reader.records() {
            let row = row?;
            let bad = |what: &str| Error::Format(format!("bad {what} in accuracy table row {row:?}"));
            let style = match &row[1] {
                "solid" => LineStyle::Solid,
                "dashed" => LineStyle::Dashed,
                _ => return Err(bad("style")),
            };
            let qubits: usize = row[2].parse().map_err(|_| bad("qubit count"))?;
            let value: f64 = row[4].parse().map_err(|_| bad("accuracy"))?;
            let idx = match out.iter().position(|s| s.name == row[0]) {
                Some(i) => i,
                None => {
                    out.push(AccuracySeries::new(&row[0], style));
                    out.len() - 1
                }
            };
            out[idx].push(qubits, value);
        }
        Ok(out)
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Accuracy against qubit count: mean line, min-max band and markers per series.
pub fn render_accuracy_curve(series: &[AccuracySeries], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, accuracy_svg(series)?)?;
    Ok(())
}

pub(crate) fn accuracy_svg(series: &[AccuracySeries]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidInput("no series to plot".into()));
    }
    let (w, h, left, top, right, bottom) = (520.0, 340.0, 56.0, 20.0, 150.0, 44.0);
    let qs: Vec<usize> = series.iter().flat_map(|s| s.points.keys().copied()).collect();
    let (qmin, qmax) = (
        *qs.iter().min().unwrap_or(&0) as f64,
        *qs.iter().max().unwrap_or(&1) as f64,
    );
    let span = if qmax > qmin { qmax - qmin } else { 1.0 };
    let pw = w - left - right;
    let ph = h - top - bottom;
    let x = |q: f64| left + if qmax > qmin { (q - qmin) / span * pw } else { pw / 2.0 };
    let y = |a: f64| top + (1.0 - a.clamp(0.0, 1.0)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let a = i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{a:.1}</text>"#,
            left - 4.0,
            y(a) + 3.0
        );
    }
    let mut ticks = qs.clone();
    ticks.sort_unstable();
    ticks.dedup();
    for q in &ticks {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{q}</text>"#,
            x(*q as f64),
            top + ph + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">qubits</text>"#,
        left + pw / 2.0,
        h - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{0}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {0})">test accuracy</text>"#,
        top + ph / 2.0
    );

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let dash = match s.style {
            LineStyle::Solid => "",
            LineStyle::Dashed => r#" stroke-dasharray="6 4""#,
        };
        let pts: Vec<(f64, f64, f64, f64)> = s
            .points
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(&q, v)| {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (q as f64, mean, lo, hi)
            })
            .collect();
        if pts.iter().any(|p| p.3 > p.2) {
            let upper: Vec<String> = pts.iter().map(|p| format!("{},{}", x(p.0), y(p.3))).collect();
            let lower: Vec<String> = pts.iter().rev().map(|p| format!("{},{}", x(p.0), y(p.2))).collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
                upper.join(" "),
                lower.join(" ")
            );
        }
        if pts.len() > 1 {
            let line: Vec<String> = pts.iter().map(|p| format!("{},{}", x(p.0), y(p.1))).collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                line.join(" ")
            );
        }
        for p in &pts {
            let _ = writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                x(p.0),
                y(p.1)
            );
        }
        let ly = top + 14.0 + k as f64 * 18.0;
        let lx = w - right + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            s.name
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
