//! Functional inequalities evaluated on concrete tensors, flows and
//! kinetic states. Each check returns an [`InequalityReport`] whose implied
//! constant `lhs / rhs_core` is the empirical stand-in for the unspecified
//! dimensional constant.

mod dispersive;
mod functional;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Lattice;

pub use dispersive::{
    check_boltzmann_inertia, check_estihp, check_inertia, check_precis, check_reel, growth_exponent,
    kinetic_inertia_from_field, precis_constant, InertiaReport, ReelReport, ALPHA_LADDER, REEL_SLACK,
};
pub use functional::{
    check_fi, check_fi_equality_case, check_fi_shape, check_nonj, check_uncert, fi_ball_constant, FiEqualityReport,
    FiShape, NonJReport, UncertReport,
};

/// Default budget for the dimensional constants `c_d`.
pub const DEFAULT_BUDGET: f64 = 10.0;

/// Relative slack on `lhs <= budget * rhs` absorbing rounding in equality cases.
const REL_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    #[serde(rename = "rhs_core")]
    pub rhs_without_constant: f64,
    /// `lhs / rhs_core`; absent when `rhs_core` vanishes.
    pub implied_constant: Option<f64>,
    pub budget: f64,
    pub passed: bool,
    /// Short description of the input the report was computed from.
    #[serde(default)]
    pub provenance: String,
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
}

impl InequalityReport {
    /// Builds a report; `passed` means `lhs <= budget * rhs_core`.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, budget: f64) -> Self {
        let implied_constant = (rhs > 0.0).then(|| lhs / rhs);
        let passed = lhs.is_finite() && rhs.is_finite() && lhs <= budget * rhs * (1.0 + REL_SLACK) + f64::MIN_POSITIVE;
        Self {
            name: name.into(),
            lhs,
            rhs_without_constant: rhs,
            implied_constant,
            budget,
            passed,
            provenance: String::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    /// Adds an extra condition to `passed`, recorded as a 0/1 detail.
    pub fn require(mut self, key: &str, ok: bool) -> Self {
        self.details.insert(key.to_string(), if ok { 1.0 } else { 0.0 });
        self.passed &= ok;
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }

    pub const CSV_HEADER: &'static str = "name,lhs,rhs_core,implied_constant,budget,passed,refinement_slope";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        format!(
            "{},{:e},{:e},{},{},{},{}",
            self.name,
            self.lhs,
            self.rhs_without_constant,
            opt(self.implied_constant),
            self.budget,
            self.passed,
            opt(self.detail("refinement_slope"))
        )
    }
}

pub fn write_csv<W: Write>(reports: &[InequalityReport], mut out: W) -> Result<()> {
    writeln!(out, "{}", InequalityReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Objective values over a ladder of trial parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub parameter: String,
    pub values: Vec<f64>,
    pub objective: Vec<f64>,
    pub argmin: f64,
    /// Extrapolated limit at the ladder end, when the ladder targets a limit.
    pub limit: Option<f64>,
}

impl OptimizationTrace {
    pub fn new(parameter: &str, values: Vec<f64>, objective: Vec<f64>) -> Self {
        let k = objective.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(k, _)| k);
        Self {
            parameter: parameter.into(),
            argmin: values.get(k).copied().unwrap_or(f64::NAN),
            values,
            objective,
            limit: None,
        }
    }
}

/// Trapezoidal rule on possibly non-uniform abscissae.
pub(crate) fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
}

/// Second moments of a piecewise-constant density on a lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairMoments {
    pub mass: f64,
    pub center: Vec<f64>,
    /// `int int g g' |x - x'|^2` by direct summation over pairs of support cells.
    pub double_integral: f64,
    /// `2 M int g |x - x_hat|^2` at the center of mass `x_hat`.
    pub center_of_mass_form: f64,
    /// `int g |x - x_hat|^2`.
    pub centered_second_moment: f64,
}

/// Exact moments for cellwise-constant `g`; within a cell
/// `int |x - c|^2 = vol sum h_k^2 / 12`.
pub fn pair_moments(space: &Lattice, g: &[f64]) -> PairMoments {
    let vol = space.cell_volume();
    let hh: f64 = space.widths().iter().map(|h| h * h / 12.0).sum();
    let support: Vec<(Vec<f64>, f64)> =
        (0..space.len()).filter(|&c| g[c] != 0.0).map(|c| (space.center(c), g[c] * vol)).collect();
    let mass: f64 = support.iter().map(|s| s.1).sum();
    let d = space.ndim();
    let mut center = vec![0.0; d];
    if mass != 0.0 {
        for (x, m) in &support {
            center.iter_mut().zip(x).for_each(|(c, v)| *c += m * v / mass);
        }
    }
    let pairs = crate::stats::ordered_sum(support.par_iter().map(|(x, m)| {
        support.iter().map(|(y, n)| n * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>() * m
    }));
    let centered: f64 = support
        .iter()
        .map(|(x, m)| m * (x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + hh))
        .sum();
    PairMoments {
        mass,
        double_integral: pairs + 2.0 * mass * mass * hh,
        center_of_mass_form: 2.0 * mass * centered,
        centered_second_moment: centered,
        center,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    #[test]
    fn indicator_pair_moments_are_exact() {
        let space = Lattice::new(vec![Axis::new(-2.0, 2.0, 40).unwrap()]).unwrap();
        let g: Vec<f64> = (0..40).map(|c| if space.center(c)[0].abs() < 1.0 { 1.0 } else { 0.0 }).collect();
        let p = pair_moments(&space, &g);
        assert!((p.mass - 2.0).abs() < 1e-14);
        assert!((p.double_integral - 8.0 / 3.0).abs() < 1e-12);
        assert!((p.center_of_mass_form - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_flags() {
        let r = InequalityReport::new("x", 1.0, 0.5, 2.0);
        assert!(r.passed);
        assert_eq!(r.implied_constant, Some(2.0));
        assert!(!InequalityReport::new("x", 1.0, 0.0, 10.0).passed);
        assert!(InequalityReport::new("x", 0.0, 0.0, 10.0).passed);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"rhs_core\":0.5"));
    }

    #[test]
    fn trapezoid_is_exact_on_lines() {
        assert!((trapezoid(&[0.0, 0.5, 2.0], &[1.0, 2.0, 5.0]) - 6.0).abs() < 1e-14);
    }
}
