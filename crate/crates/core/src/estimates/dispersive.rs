//! Space-time integral bounds for gas flows and kinetic states.

use rayon::prelude::*;
use serde::Serialize;

use super::{pair_moments, trapezoid, InequalityReport, OptimizationTrace};
use crate::error::{Error, Result};
use crate::euler::{functionals, gamma_d, Flow, GasModel};
use crate::grid::GridSpec;
use crate::kinetic::ParticleState;
use crate::linalg;
use crate::stats::{fit_line, ordered_sum, ordered_sum2, refinement_slope};
use crate::tensor_field::{det_power, positivity_report, space_time_integral, SymTensorField, TimeWeight};

/// Largest fraction of non-PSD cells accepted by [`check_precis`].
const MAX_NON_PSD: f64 = 0.01;

/// `(1/d) (2 (d + 1) / |S^d|)^(1/d)`.
pub fn precis_constant(d: usize) -> f64 {
    let d_f = d as f64;
    (2.0 * (d_f + 1.0) / linalg::unit_sphere_area(d)).powf(1.0 / d_f) / d_f
}

/// `int int (det S)^(1/d) <= C M^(1/d) (|m(0)| + |m(tau)|)` with the explicit
/// constant; the traces are the first and last time slices.
pub fn check_precis(s: &SymTensorField) -> Result<InequalityReport> {
    let grid = s.grid();
    let d = grid.d();
    let scale = (0..grid.len()).map(|c| s.get(c).abs().max()).fold(0.0, f64::max);
    let pos = positivity_report(s, 1e-10 * scale.max(f64::MIN_POSITIVE));
    if pos.fraction_psd < 1.0 - MAX_NON_PSD {
        return Err(Error::NotPositive { fraction: 1.0 - pos.fraction_psd });
    }
    let lhs = det_power(s, 1.0 / d as f64)?.field.l1_norm();
    let slice = grid.slice_len();
    let n_t = grid.time_axis().n;
    let vol = grid.spatial_cell_volume();
    let slice_mass = |k: usize| (0..slice).map(|c| s.rho(k * slice + c)).sum::<f64>() * vol;
    let m_norm = |k: usize| (0..slice).map(|c| s.momentum(k * slice + c).norm()).sum::<f64>() * vol;
    let mass = (0..n_t).map(slice_mass).sum::<f64>() / n_t as f64;
    let (m0, m1) = (m_norm(0), m_norm(n_t - 1));
    let rhs = mass.max(0.0).powf(1.0 / d as f64) * (m0 + m1);
    let c = precis_constant(d);
    Ok(InequalityReport::new("precis", lhs, rhs, c)
        .with("theorem_constant", c)
        .with("mass", mass)
        .with("momentum_norm_bottom", m0)
        .with("momentum_norm_top", m1)
        .with("fraction_psd", pos.fraction_psd))
}

/// Per-level `|m|_M` and kinetic energy.
fn momentum_norms(flow: &Flow) -> Vec<(f64, f64)> {
    let vol = flow.space.cell_volume();
    let d = flow.d();
    (0..flow.n_levels())
        .map(|k| {
            let (a, b) = ordered_sum2((0..flow.space.len()).into_par_iter().map(|c| {
                let w = flow.primitive(k, c);
                let u2 = w.speed2(d);
                (w.rho * u2.sqrt(), 0.5 * w.rho * u2)
            }));
            (a * vol, b * vol)
        })
        .collect()
}

/// `int_0^tau int rho^(1/d) p <= c_d M^(1/d) sqrt(M E(0))`.
pub fn check_estihp(flow: &Flow, budget: f64) -> Result<InequalityReport> {
    if flow.n_levels() < 3 {
        return Err(Error::TooFewSamples { requested: flow.n_levels(), min: 3 });
    }
    let d = flow.d() as f64;
    let f = functionals(flow);
    let lhs = trapezoid(&f.t, &f.pi);
    let half = f.t.len() / 2;
    let lhs_half = trapezoid(&f.t[..=half], &f.pi[..=half]);
    let (m, e0) = (f.mass[0], f.energy[0]);
    let rhs = m.powf(1.0 / d) * (m * e0).sqrt();
    let cs = momentum_norms(flow)
        .iter()
        .map(|&(norm, ekin)| if ekin > 0.0 { norm * norm / (2.0 * m * ekin) } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(InequalityReport::new("estihp", lhs, rhs, budget)
        .with("tau", f.t[f.t.len() - 1] - f.t[0])
        .with("lhs_half_horizon", lhs_half)
        .with("mass", m)
        .with("energy0", e0)
        .with("cauchy_schwarz_max_ratio", cs)
        .require("monotone_in_tau", lhs_half <= lhs * (1.0 + 1e-12))
        .require("cauchy_schwarz", cs <= 1.0 + 1e-9))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InertiaReport {
    pub report: InequalityReport,
    /// `M E_alpha(0) / alpha^2` on the ladder `alpha = 2^k`.
    pub alpha_trace: OptimizationTrace,
    /// `M I(0)` about the origin, the ladder's limit.
    pub alpha_limit: f64,
}

/// Ladder used for the `alpha -> infinity` limit.
pub const ALPHA_LADDER: [f64; 11] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

/// `int t int rho^(1/d) p <= c_d M^(1/d) (1/4 int int rho0 rho0' |x - x'|^2)^(1/2)`
/// for a mono-atomic flow, with the `alpha` ladder that leads to it.
pub fn check_inertia(flow: &Flow, budget: f64) -> Result<InertiaReport> {
    if !flow.gas.is_mono_atomic() {
        return Err(Error::NotMonoatomic { gamma: flow.gas.gamma, gamma_d: flow.gas.gamma_d() });
    }
    let d = flow.d();
    let f = functionals(flow);
    let tpi: Vec<f64> = f.t.iter().zip(&f.pi).map(|(t, p)| t * p).collect();
    let lhs = trapezoid(&f.t, &tpi);
    let rho0: Vec<f64> = (0..flow.space.len()).map(|c| flow.level_cell(0, c)[0]).collect();
    let pm = pair_moments(&flow.space, &rho0);
    let m = f.mass[0];
    let m_root = m.powf(1.0 / d as f64);
    let rhs = m_root * (0.25 * pm.double_integral).sqrt();
    let identity_gap = (pm.double_integral - pm.center_of_mass_form).abs() / pm.double_integral.max(f64::MIN_POSITIVE);

    // E_alpha(0) / alpha^2 -> I(0) about the origin
    let vol = flow.space.cell_volume();
    let hh: f64 = flow.space.widths().iter().map(|h| h * h / 12.0).sum();
    let e_alpha = |alpha: f64| -> f64 {
        ordered_sum((0..flow.space.len()).into_par_iter().map(|c| {
            let w = flow.primitive(0, c);
            let x = flow.space.center(c);
            let v2: f64 = (0..d).map(|i| (w.u[i] - alpha * x[i]).powi(2)).sum();
            0.5 * w.rho * (v2 + alpha * alpha * hh) + w.rho * w.e
        })) * vol
    };
    let objective: Vec<f64> = ALPHA_LADDER.iter().map(|&a| m * e_alpha(a) / (a * a)).collect();
    let limit = m * f.inertia[0];
    let mut trace = OptimizationTrace::new("alpha", ALPHA_LADDER.to_vec(), objective.clone());
    let k = objective.len();
    trace.limit = Some(2.0 * objective[k - 1] - objective[k - 2]);
    let bounds: Vec<f64> = objective.iter().map(|o| m_root * o.sqrt()).collect();
    let worst_alpha_implied = bounds.iter().map(|b| lhs / b).fold(0.0, f64::max);
    let gaps: Vec<f64> = objective.iter().map(|o| (o - limit).abs()).collect();
    let tail = k - 4;
    let alpha_rate = if gaps[tail..].iter().all(|g| *g > 0.0) {
        refinement_slope(&ALPHA_LADDER[tail..].iter().map(|a| 1.0 / a).collect::<Vec<_>>(), &gaps[tail..])
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };

    let report = InequalityReport::new("inertia", lhs, rhs, budget)
        .with("mass", m)
        .with("double_integral", pm.double_integral)
        .with("center_of_mass_form", pm.center_of_mass_form)
        .with("identity_rel_error", identity_gap)
        .with("inertia_origin", f.inertia[0])
        .with("alpha_worst_implied", worst_alpha_implied)
        .with("alpha_limit_rate", alpha_rate)
        .with("alpha_richardson_gap", (trace.limit.unwrap_or(f64::NAN) - limit).abs() / limit.max(f64::MIN_POSITIVE))
        .require("double_integral_identity", identity_gap <= 1e-6);
    Ok(InertiaReport { report, alpha_trace: trace, alpha_limit: limit })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReelReport {
    pub report: InequalityReport,
    /// Horizon ladder and `G(T) = int_0^T t int rho^(1/d) p`.
    pub horizons: Vec<f64>,
    pub g: Vec<f64>,
    pub fitted_exponent: f64,
    /// `(gamma_d - gamma) / (gamma_d - 1)`.
    pub theoretical_exponent: f64,
    /// LHS over `M^(1/d) sqrt(M I) (T sqrt(E/I))^exponent`; reported, not asserted.
    pub ultime_ratio: f64,
}

/// `(gamma_d - gamma) / (gamma_d - 1)`, the growth exponent of the
/// space-time pressure integral below the mono-atomic value.
pub fn growth_exponent(d: usize, gamma: f64) -> f64 {
    let gd = gamma_d(d);
    (gd - gamma) / (gd - 1.0)
}

/// Slack on the fitted tail exponent.
pub const REEL_SLACK: f64 = 0.1;

/// Growth exponent of `G(T)` for `gamma < gamma_d`, fitted over the horizons
/// `T_max 2^(-j/2)`, `j = 0..=4`.
pub fn check_reel(flow: &Flow, budget: f64) -> Result<ReelReport> {
    let gas = flow.gas;
    let gd = gamma_d(gas.d);
    if !(gas.gamma < gd) {
        return Err(Error::InvalidInput(format!("the growth bound needs gamma < {gd}, got {}", gas.gamma)));
    }
    if !matches!(gas.model, GasModel::Full) {
        return Err(Error::InvalidInput("the growth bound is checked on the full gas model".into()));
    }
    let f = functionals(flow);
    let n = f.t.len();
    if n < 8 {
        return Err(Error::TooFewSamples { requested: n, min: 8 });
    }
    let mut cumulative = vec![0.0; n];
    for k in 1..n {
        cumulative[k] = cumulative[k - 1] + 0.5 * (f.t[k] - f.t[k - 1]) * (f.t[k] * f.pi[k] + f.t[k - 1] * f.pi[k - 1]);
    }
    let t_max = f.t[n - 1];
    let g_at = |t: f64| {
        let k = f.t.partition_point(|&s| s < t).clamp(1, n - 1);
        let a = (t - f.t[k - 1]) / (f.t[k] - f.t[k - 1]);
        cumulative[k - 1] + a * (cumulative[k] - cumulative[k - 1])
    };
    let horizons: Vec<f64> = (0..=4).rev().map(|j| t_max * 2f64.powf(-0.5 * j as f64)).collect();
    let g: Vec<f64> = horizons.iter().map(|&t| g_at(t)).collect();
    let fitted = if g.iter().all(|v| *v > 0.0) {
        let lt: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
        let lg: Vec<f64> = g.iter().map(|v| v.ln()).collect();
        fit_line(&lt, &lg)?.slope
    } else {
        0.0
    };
    let kappa = growth_exponent(gas.d, gas.gamma);
    let m = f.mass[0];
    let e0 = f.energy[0];
    let rho0: Vec<f64> = (0..flow.space.len()).map(|c| flow.level_cell(0, c)[0]).collect();
    let i0 = 0.5 * pair_moments(&flow.space, &rho0).centered_second_moment;
    let m_root = m.powf(1.0 / gas.d as f64);
    let lhs = g[g.len() - 1];
    let rhs = m_root * (m * (e0 + i0)).sqrt() * t_max.powf(kappa);
    let ultime = lhs / (m_root * (m * i0).sqrt() * (t_max * (e0 / i0).sqrt()).powf(kappa));
    let report = InequalityReport::new("reel", lhs, rhs, budget)
        .with("fitted_exponent", fitted)
        .with("theoretical_exponent", kappa)
        .with("ultime_ratio", ultime)
        .with("horizon", t_max)
        .require("tail_exponent", fitted <= kappa + REEL_SLACK);
    Ok(ReelReport { report, horizons, g, fitted_exponent: fitted, theoretical_exponent: kappa, ultime_ratio: ultime })
}

/// `int t int (det S)^(1/d)` over the grid of `s` against
/// `M^(1/d) (1/4 int int rho0 rho0' |x - x'|^2)^(1/2)`.
pub fn kinetic_inertia_from_field(
    s: &SymTensorField,
    mass: f64,
    quarter_pair: f64,
    budget: f64,
) -> Result<InequalityReport> {
    let d = s.d() as f64;
    let dp = det_power(s, 1.0 / d)?;
    let lhs = space_time_integral(&dp.field, TimeWeight::T);
    let rhs = mass.powf(1.0 / d) * quarter_pair.max(0.0).sqrt();
    Ok(InequalityReport::new("boltzmann_inertia", lhs, rhs, budget)
        .with("mass", mass)
        .with("clamped_cells", dp.clamped as f64))
}

/// The kinetic inertia bound along the free-transport evolution of
/// `particles`, with moments binned on `grid` (time axis from 0 to `t_max`).
pub fn check_boltzmann_inertia(particles: &ParticleState, grid: &GridSpec, budget: f64) -> Result<InequalityReport> {
    let p0 = particles.free_transport(0.0);
    let (mass, energy, inertia, entropy) = (p0.mass(), p0.kinetic_energy(), p0.inertia(), p0.entropy());
    if !(mass > 0.0) || ![energy, inertia, entropy].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("initial particles fail the finiteness conditions".into()));
    }
    let s = p0.moment_tensor(grid)?;
    Ok(kinetic_inertia_from_field(&s, mass, p0.pair_inertia(), budget)?
        .with("particles", p0.len() as f64)
        .with("energy0", energy)
        .with_provenance(format!("{} particles, binned on {:?} cells", p0.len(), grid.lattice().shape())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn precis_constant_in_one_dimension() {
        assert!((precis_constant(1) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn zero_tensor_gives_zero() {
        let g = GridSpec::uniform((0.0, 1.0), 4, &[(-1.0, 1.0)], &[6]).unwrap();
        let r = check_precis(&SymTensorField::zeros(g)).unwrap();
        assert_eq!((r.lhs, r.rhs_without_constant), (0.0, 0.0));
        assert!(r.passed);
    }
}
