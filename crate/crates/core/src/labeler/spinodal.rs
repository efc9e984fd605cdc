use crate::error::{Error, Result};

/// Debye function of a block of fraction `f`: `2 (f x + e^{-f x} - 1) / x^2`.
///
/// Uses a Taylor expansion for small `f x`, where the closed form cancels badly.
pub fn debye_g(f: f64, x: f64) -> f64 {
    let u = f * x;
    if u.abs() < 1e-2 {
        // f^2 (1 - u/3 + u^2/12 - u^3/60 + u^4/360 - u^5/2520)
        let series = 1.0 + u * (-1.0 / 3.0 + u * (1.0 / 12.0 + u * (-1.0 / 60.0 + u * (1.0 / 360.0 - u / 2520.0))));
        f * f * series
    } else {
        2.0 * (u + (-u).exp_m1()) / (x * x)
    }
}

/// Inverse structure-factor combination whose minimum over `x` gives `2 (chiN)_s`.
pub fn structure_factor_f(x: f64, f: f64) -> Result<f64> {
    let g1 = debye_g(1.0, x);
    let ga = debye_g(f, x);
    let gb = debye_g(1.0 - f, x);
    let cross = g1 - ga - gb;
    let denom = ga * gb - 0.25 * cross * cross;
    if denom.abs() <= f64::EPSILON * g1.abs().max(f64::MIN_POSITIVE) || !denom.is_finite() {
        return Err(Error::Singularity { x, f });
    }
    Ok(g1 / denom)
}

/// Search window for the spinodal minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinodalQuery {
    pub f: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub coarse_step: f64,
}

impl SpinodalQuery {
    pub fn new(f: f64) -> Self {
        Self {
            f,
            x_lo: 0.05,
            x_hi: 60.0,
            coarse_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinodal {
    pub chi_n: f64,
    /// Minimizing argument of the structure-factor combination.
    pub x_star: f64,
}

/// Mean-field spinodal `(chiN)_s = min_x F(x, f) / 2` over the default window.
pub fn spinodal_chi_n(f: f64) -> Result<Spinodal> {
    spinodal_chi_n_in(SpinodalQuery::new(f))
}

/// Coarse scan over the window followed by golden-section refinement.
pub fn spinodal_chi_n_in(query: SpinodalQuery) -> Result<Spinodal> {
    let SpinodalQuery { f, x_lo, x_hi, coarse_step } = query;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidInput(format!("f must lie in (0, 1), got {f}")));
    }
    if !(x_lo > 0.0 && x_hi > x_lo && coarse_step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "invalid search window [{x_lo}, {x_hi}] with step {coarse_step}"
        )));
    }
    let n = ((x_hi - x_lo) / coarse_step).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| (x_lo + i as f64 * coarse_step).min(x_hi)).collect();
    let mut best = (0usize, f64::INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let v = structure_factor_f(x, f)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    if i == 0 || i == xs.len() - 1 {
        return Err(Error::SearchWindow { f, lo: x_lo, hi: x_hi });
    }

    let objective = |x: f64| structure_factor_f(x, f);
    let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while (b - a).abs() > 1e-12 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d)?;
        }
    }
    let x_star = 0.5 * (a + b);
    Ok(Spinodal {
        chi_n: objective(x_star)? / 2.0,
        x_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn debye_limits() {
        assert_abs_diff_eq!(debye_g(1.0, 1e-12), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(debye_g(1.0, 1.0), 2.0 / std::f64::consts::E, epsilon = 1e-15);
    }

    #[test]
    fn debye_continuous_across_series_branch() {
        for &f in &[0.25, 0.5, 1.0] {
            let u = f * 1e-8;
            assert!((debye_g(f, 1e-8) - f * f * (1.0 - u / 3.0)).abs() <= 1e-15);
            let edge = 1e-2 / f;
            let below = debye_g(f, edge * (1.0 - 1e-13));
            let above = debye_g(f, edge * (1.0 + 1e-13));
            assert!((below - above).abs() < 1e-14, "f = {f}: {below} vs {above}");
        }
    }

    #[test]
    fn debye_matches_high_precision_values() {
        // 40-digit evaluations of 2 (f x + e^{-f x} - 1) / x^2
        assert_abs_diff_eq!(debye_g(0.5, 2.0), 0.183_939_720_585_721_16, epsilon = 1e-15);
        assert_abs_diff_eq!(structure_factor_f(10.0, 0.5).unwrap(), 28.462_027_093_409_034, epsilon = 1e-11);
    }

    #[test]
    fn structure_factor_symmetric_in_composition() {
        for &x in &[0.3, 1.0, 3.79, 10.0, 42.0] {
            for &f in &[0.1, 0.25, 0.3, 0.45] {
                let a = structure_factor_f(x, f).unwrap();
                let b = structure_factor_f(x, 1.0 - f).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs(), "x={x} f={f}");
            }
        }
    }

    #[test]
    fn structure_factor_positive_on_physical_branch() {
        let mut x = 1.0;
        while x <= 50.0 {
            assert!(structure_factor_f(x, 0.5).unwrap() > 0.0);
            x += 0.01;
        }
    }

    #[test]
    fn spinodal_of_symmetric_diblock() {
        let s = spinodal_chi_n(0.5).unwrap();
        assert_abs_diff_eq!(s.chi_n, 10.495, epsilon = 0.001);
        assert!(s.x_star > 3.7 && s.x_star < 3.9);
    }

    #[test]
    fn spinodal_rises_away_from_symmetry() {
        let s3 = spinodal_chi_n(0.3).unwrap().chi_n;
        let s5 = spinodal_chi_n(0.5).unwrap().chi_n;
        assert!(s3 > s5);
        assert_abs_diff_eq!(s3, spinodal_chi_n(0.7).unwrap().chi_n, epsilon = 1e-9);
    }

    #[test]
    fn narrow_window_without_interior_minimum_fails() {
        let q = SpinodalQuery {
            f: 0.5,
            x_lo: 0.1,
            x_hi: 2.0,
            coarse_step: 0.01,
        };
        assert!(matches!(spinodal_chi_n_in(q), Err(Error::SearchWindow { .. })));
    }
}
