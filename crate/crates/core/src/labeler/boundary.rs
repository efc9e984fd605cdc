use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const CURVE_HEX_GYROID: &str = "hex_gyroid";
pub const CURVE_GYROID_LAMELLAR: &str = "gyroid_lamellar";

const SHIPPED_TABLE: &str = include_str!("../../data/boundaries.csv");

/// One boundary as `(chiN, f)` knots with strictly increasing `chiN`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub name: String,
    pub knots: Vec<(f64, f64)>,
}

impl BoundaryCurve {
    pub fn new(name: impl Into<String>, knots: Vec<(f64, f64)>) -> Result<Self> {
        let name = name.into();
        if knots.len() < 2 {
            return Err(Error::Format(format!("curve `{name}` needs at least two knots")));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Format(format!(
                    "curve `{name}`: chiN must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(c, f)) = knots.iter().find(|(_, f)| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::Format(format!("curve `{name}`: f = {f} at chiN = {c} outside (0, 1)")));
        }
        Ok(Self { name, knots })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    fn segment(&self, chi_n: f64) -> usize {
        let i = self.knots.partition_point(|&(c, _)| c <= chi_n);
        i.saturating_sub(1).min(self.knots.len() - 2)
    }

    pub fn linear(&self, chi_n: f64) -> f64 {
        let i = self.segment(chi_n);
        let (x0, y0) = self.knots[i];
        let (x1, y1) = self.knots[i + 1];
        let t = (chi_n - x0) / (x1 - x0);
        y0 + t * (y1 - y0)
    }

    /// Not-a-knot cubic spline through the knots (reproduces cubics exactly).
    ///
    /// Two knots fall back to the line, three to the interpolating parabola.
    pub fn spline(&self, chi_n: f64) -> f64 {
        let k = &self.knots;
        match k.len() {
            2 => self.linear(chi_n),
            3 => {
                let mut acc = 0.0;
                for i in 0..3 {
                    let mut basis = k[i].1;
                    for j in 0..3 {
                        if i != j {
                            basis *= (chi_n - k[j].0) / (k[i].0 - k[j].0);
                        }
                    }
                    acc += basis;
                }
                acc
            }
            _ => {
                let m = self.second_derivatives();
                let i = self.segment(chi_n);
                let (x0, y0) = k[i];
                let (x1, y1) = k[i + 1];
                let h = x1 - x0;
                let a = x1 - chi_n;
                let b = chi_n - x0;
                m[i] * a.powi(3) / (6.0 * h)
                    + m[i + 1] * b.powi(3) / (6.0 * h)
                    + (y0 / h - m[i] * h / 6.0) * a
                    + (y1 / h - m[i + 1] * h / 6.0) * b
            }
        }
    }

    fn second_derivatives(&self) -> Vec<f64> {
        let k = &self.knots;
        let n = k.len();
        let h: Vec<f64> = k.windows(2).map(|w| w[1].0 - w[0].0).collect();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        // third derivative continuous across the second and penultimate knots
        a[(0, 0)] = h[1];
        a[(0, 1)] = -(h[0] + h[1]);
        a[(0, 2)] = h[0];
        a[(n - 1, n - 3)] = h[n - 2];
        a[(n - 1, n - 2)] = -(h[n - 3] + h[n - 2]);
        a[(n - 1, n - 1)] = h[n - 3];
        for i in 1..n - 1 {
            a[(i, i - 1)] = h[i - 1];
            a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
            a[(i, i + 1)] = h[i];
            rhs[i] = 6.0 * ((k[i + 1].1 - k[i].1) / h[i] - (k[i].1 - k[i - 1].1) / h[i - 1]);
        }
        a.lu()
            .solve(&rhs)
            .map(|v| v.iter().copied().collect())
            .expect("not-a-knot system is nonsingular for distinct knots")
    }
}

/// Named order-order boundary curves plus a free-text provenance note.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTable {
    pub curves: Vec<BoundaryCurve>,
    pub provenance: String,
}

impl BoundaryTable {
    /// The boundary table bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_csv_str(SHIPPED_TABLE).expect("bundled boundary table is well formed")
    }

    pub fn shipped_csv() -> &'static str {
        SHIPPED_TABLE
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Parses `curve,chiN,f` rows; leading `#` lines become the provenance note.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let provenance = text
            .lines()
            .take_while(|l| l.trim_start().starts_with('#'))
            .map(|l| l.trim_start().trim_start_matches('#').trim())
            .collect::<Vec<_>>()
            .join("\n");
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["curve", "chiN", "f"] {
            return Err(Error::Format(format!(
                "boundary table header must be `curve,chiN,f`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number `{}`: {e}", &record[i])))
            };
            let name = record[0].to_string();
            let knot = (parse(1)?, parse(2)?);
            match curves.last_mut() {
                Some((last, knots)) if *last == name => knots.push(knot),
                _ => {
                    if curves.iter().any(|(n, _)| *n == name) {
                        return Err(Error::Format(format!("rows of curve `{name}` are not contiguous")));
                    }
                    curves.push((name, vec![knot]));
                }
            }
        }
        let curves = curves
            .into_iter()
            .map(|(name, knots)| BoundaryCurve::new(name, knots))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { curves, provenance })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for line in self.provenance.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("curve,chiN,f\n");
        let mut curves: Vec<&BoundaryCurve> = self.curves.iter().collect();
        curves.sort_by(|a, b| a.name.cmp(&b.name));
        for c in curves {
            for (chi_n, f) in &c.knots {
                out.push_str(&format!("{},{},{}\n", c.name, chi_n, f));
            }
        }
        out
    }

    pub fn curve(&self, name: &str) -> Option<&BoundaryCurve> {
        self.curves.iter().find(|c| c.name == name)
    }
}

/// Linear and spline evaluations of one boundary at one `chiN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub linear: f64,
    pub spline: f64,
}

impl Interpolated {
    pub fn disagreement(&self) -> f64 {
        (self.linear - self.spline).abs()
    }
}

/// Boundary composition of `curve` at `chi_n`; errors outside the knot range.
pub fn interpolate_boundary(table: &BoundaryTable, curve: &str, chi_n: f64) -> Result<Interpolated> {
    let c = table
        .curve(curve)
        .ok_or_else(|| Error::Format(format!("boundary table has no curve `{curve}`")))?;
    let (lo, hi) = c.range();
    if !(chi_n >= lo && chi_n <= hi) {
        return Err(Error::Extrapolation {
            curve: curve.to_string(),
            chi_n,
            lo,
            hi,
        });
    }
    Ok(Interpolated {
        linear: c.linear(chi_n),
        spline: c.spline(chi_n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic(x: f64) -> f64 {
        0.4 - 0.01 * x + 3e-4 * x * x - 2e-6 * x * x * x
    }

    fn cubic_table() -> BoundaryTable {
        let mut csv = String::from("curve,chiN,f\n");
        for &x in &[10.0, 12.0, 15.0, 17.0, 21.0, 26.0, 30.0] {
            csv.push_str(&format!("c,{x},{}\n", cubic(x)));
        }
        BoundaryTable::from_csv_str(&csv).unwrap()
    }

    #[test]
    fn knots_reproduced_exactly() {
        let t = BoundaryTable::shipped();
        for c in &t.curves {
            for &(x, y) in &c.knots {
                let v = interpolate_boundary(&t, &c.name, x).unwrap();
                assert!((v.linear - y).abs() < 1e-15);
                assert!((v.spline - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_midpoint() {
        let t = BoundaryTable::from_csv_str("curve,chiN,f\nc,10,0.3\nc,20,0.4\n").unwrap();
        let v = interpolate_boundary(&t, "c", 15.0).unwrap();
        assert!((v.linear - 0.35).abs() < 1e-15);
    }

    #[test]
    fn spline_recovers_cubic() {
        let t = cubic_table();
        let mut x = 10.0;
        while x <= 30.0 {
            let v = interpolate_boundary(&t, "c", x).unwrap();
            assert!((v.spline - cubic(x)).abs() < 1e-9, "x = {x}");
            x += 0.37;
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let t = BoundaryTable::shipped();
        assert!(matches!(
            interpolate_boundary(&t, CURVE_HEX_GYROID, 5.0),
            Err(Error::Extrapolation { .. })
        ));
        assert!(interpolate_boundary(&t, "nope", 20.0).is_err());
    }

    #[test]
    fn shipped_table_linear_and_spline_agree_on_grid() {
        let t = BoundaryTable::shipped();
        assert!(!t.provenance.is_empty());
        for c in &t.curves {
            let (lo, hi) = c.range();
            for k in 1..=10 {
                let chi_n = 2.5 * k as f64;
                if chi_n < lo || chi_n > hi {
                    continue;
                }
                let v = interpolate_boundary(&t, &c.name, chi_n).unwrap();
                assert!(v.disagreement() <= 0.005, "{} at {chi_n}: {:?}", c.name, v);
            }
        }
    }

    #[test]
    fn malformed_tables_rejected() {
        assert!(BoundaryTable::from_csv_str("a,b,c\nx,1,0.3\n").is_err());
        assert!(BoundaryTable::from_csv_str("curve,chiN,f\nc,1,0.3\n").is_err());
        assert!(BoundaryTable::from_csv_str("curve,chiN,f\nc,2,0.3\nc,1,0.3\n").is_err());
        assert!(BoundaryTable::from_csv_str("curve,chiN,f\nc,1,1.3\nc,2,0.3\n").is_err());
        assert!(BoundaryTable::from_csv_str("curve,chiN,f\nc,1,0.3\nd,1,0.3\nd,2,0.3\nc,2,0.3\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = BoundaryTable::shipped();
        let again = BoundaryTable::from_csv_str(&t.to_csv_string()).unwrap();
        assert_eq!(t, again);
    }

    proptest! {
        #[test]
        fn linear_stays_within_knot_bounds(chi_n in 10.49f64..40.0) {
            let t = BoundaryTable::shipped();
            for c in &t.curves {
                let v = interpolate_boundary(&t, &c.name, chi_n).unwrap();
                let i = c.segment(chi_n);
                let (a, b) = (c.knots[i].1, c.knots[i + 1].1);
                prop_assert!(v.linear >= a.min(b) - 1e-15 && v.linear <= a.max(b) + 1e-15);
            }
        }
    }
}
