//! Small least-squares helpers for convergence studies and fits.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Parallel sum with a fixed association order: the terms are gathered in
/// index order and added sequentially, so the result does not depend on how
/// rayon splits the work.
pub(crate) fn ordered_sum(it: impl ParallelIterator<Item = f64>) -> f64 {
    it.collect::<Vec<f64>>().iter().sum()
}

/// Pairwise version of [`ordered_sum`].
pub(crate) fn ordered_sum2(it: impl ParallelIterator<Item = (f64, f64)>) -> (f64, f64) {
    it.collect::<Vec<_>>().iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples { requested: x.len(), min: 2 });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidInput("abscissae must not all coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(LineFit { slope, intercept: my - slope * mx })
}

/// Observed order of convergence: slope of `log err` against `log h`.
pub fn refinement_slope(h: &[f64], err: &[f64]) -> Result<f64> {
    if err.iter().chain(h).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("refinement data must be positive".into()));
    }
    let lh: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let le: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    Ok(fit_line(&lh, &le)?.slope)
}

/// Coefficients `c_0..c_deg` of the least-squares polynomial fit.
pub fn fit_polynomial(x: &[f64], y: &[f64], deg: usize) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() <= deg {
        return Err(Error::TooFewSamples { requested: x.len(), min: deg + 1 });
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let a = nalgebra::DMatrix::from_fn(x.len(), deg + 1, |i, j| (x[i] / scale).powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let sol =
        a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::InvalidInput(format!("polynomial fit failed: {e}")))?;
    Ok((0..=deg).map(|j| sol[j] / scale.powi(j as i32)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|v| 3.0 * v * v).collect();
        assert!((refinement_slope(&h, &e).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_is_recovered() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.5 - 0.25 * t + 2.0 * t * t).collect();
        let c = fit_polynomial(&x, &y, 2).unwrap();
        for (a, b) in c.iter().zip([1.5, -0.25, 2.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
