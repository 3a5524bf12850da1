//! Simple two-variable least squares, used to rank indicators against P&L.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fit of `y = intercept + slope * x` with the squared Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares over paired samples.
///
/// Errors explicitly on fewer than two points, non-finite values or zero
/// variance in either variable rather than producing a silent 0/0.
pub fn ols(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidParams(format!(
            "sample lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "regression needs at least 2 points, got {n}"
        )));
    }
    if let Some(v) = x.iter().chain(y.iter()).find(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "regression input contains non-finite value {v}"
        )));
    }

    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("x has zero variance".into()));
    }
    if syy == 0.0 {
        return Err(Error::Degenerate("y has zero variance".into()));
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = (sxy * sxy) / (sxx * syy);
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
        n,
    })
}

/// OLS over optional pairs: rows where either side is missing are dropped
/// pairwise, and the dropped count is reported alongside the fit.
pub fn ols_pairwise(
    x: &[Option<f64>],
    y: &[Option<f64>],
) -> Result<(RegressionResult, usize)> {
    if x.len() != y.len() {
        return Err(Error::InvalidParams(format!(
            "sample lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (a, b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (a, b) {
            xs.push(*a);
            ys.push(*b);
        }
    }
    let dropped = x.len() - xs.len();
    Ok((ols(&xs, &ys)?, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn perfect_fit() {
        let r = ols(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!(rel_close(r.slope, 2.0, 1e-12));
        assert!(r.intercept.abs() <= 1e-12);
        assert!(rel_close(r.r_squared, 1.0, 1e-12));
        assert_eq!(r.n, 3);
    }

    #[test]
    fn symmetric_design_has_zero_slope_and_r2() {
        let r = ols(&[-1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.slope, 0.0);
        assert_eq!(r.r_squared, 0.0);
    }

    #[test]
    fn constant_x_is_degenerate() {
        let err = ols(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.is_degenerate(), "{err}");
        let err = ols(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap_err();
        assert!(err.is_degenerate(), "{err}");
    }

    #[test]
    fn r_squared_cross_checks_against_residuals() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [2.1, 2.9, 4.2, 4.8, 6.3, 6.6];
        let r = ols(&x, &y).unwrap();
        let mean_y = y.iter().sum::<f64>() / y.len() as f64;
        let ssr: f64 = x
            .iter()
            .zip(&y)
            .map(|(&xi, &yi)| {
                let fit = r.intercept + r.slope * xi;
                (yi - fit) * (yi - fit)
            })
            .sum();
        let sst: f64 = y.iter().map(|&yi| (yi - mean_y) * (yi - mean_y)).sum();
        assert!(rel_close(r.r_squared, 1.0 - ssr / sst, 1e-12));
    }

    #[test]
    fn pairwise_drops_missing_rows() {
        let x = [Some(1.0), None, Some(3.0), Some(4.0)];
        let y = [Some(2.0), Some(9.0), None, Some(8.0)];
        let (r, dropped) = ols_pairwise(&x, &y).unwrap();
        assert_eq!(dropped, 2);
        assert_eq!(r.n, 2);
    }

    proptest! {
        #[test]
        fn r_squared_is_affine_invariant_and_symmetric(
            seed in 0u64..500,
            a in prop::sample::select(vec![-3.0f64, -0.5, 0.25, 2.0, 10.0]),
            b in -50.0..50.0f64,
            c in prop::sample::select(vec![-2.0f64, 0.5, 1.5, 7.0]),
            d in -50.0..50.0f64,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 40;
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let y: Vec<f64> = x.iter().map(|&xi| 0.7 * xi + rng.gen_range(-5.0..5.0)).collect();
            let base = ols(&x, &y).unwrap();

            let xt: Vec<f64> = x.iter().map(|&v| a * v + b).collect();
            let yt: Vec<f64> = y.iter().map(|&v| c * v + d).collect();
            let transformed = ols(&xt, &yt).unwrap();
            prop_assert!(rel_close(base.r_squared, transformed.r_squared, 1e-12),
                "{} vs {}", base.r_squared, transformed.r_squared);

            let swapped = ols(&y, &x).unwrap();
            prop_assert!(rel_close(base.r_squared, swapped.r_squared, 1e-12));
        }
    }
}
