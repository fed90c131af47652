//! Named reference checks with known answers, runnable from a campaign.
//!
//! Each check builds its own small input, compares against a closed form,
//! an exact solution or a refinement rate, and reports one record.

use std::f64::consts::PI;

use super::runner::{divergence_ratio, CheckRecord};
use crate::error::{Error, Result};
use crate::estimates::{
    check_boltzmann_inertia, check_estihp, check_fi_equality_case, check_fi_shape, check_inertia, check_nonj,
    check_precis, check_reel, check_uncert, fi_ball_constant, growth_exponent, FiShape,
};
use crate::euler::diagnostics::{FunctionalTolerances, ShockDetector};
use crate::euler::exact::{ExactRiemann, ExpansionFlow, Gamma3Flow, Wave};
use crate::euler::{
    energy_defect_residual, functionals, mass_momentum_tensor, projective_invariance_residual, solve, solve_refining,
    transformed_energy, transformed_euler_residual, Flow, FlowSource, Gas, GasModel, GasTensor, InitialData, Scheme,
    SolverConfig, Thermal, Velocity,
};
use crate::grid::{Axis, GridSpec, Lattice};
use crate::kinetic::{
    velocity_measure, Beam, BeamState, GaussianPhaseDensity, KineticDensity, ParticleState, PhaseMixture,
    VelocityMeasure,
};
use crate::linalg::{Mat, Vector};
use crate::projective::ode::{ode_invariance_check, OdeOptions, Potential};
use crate::projective::{
    determinantal_mass_scale, group_action, group_image_grid, lift, push_forward_onto, push_forward_value,
    push_forward_with_source, restrict, GeneralLinearAction, HomogeneousBlocks, ProjectiveMap,
};
use crate::special::{
    cofactor_hessian, determinantal_mass, rigidity_form, transform_potential, transformed_base, CofactorHessian,
    ExpCosh, HomogeneousPotential, NormCone, PeriodicPerturbed, Quadratic, Quartic, RigidityForm, Theta,
    TransformedPotential,
};
use crate::stats::refinement_slope;
use crate::tensor_field::{
    det_power, discrete_divergence, positivity_report, space_time_integral, AnalyticTensor, ScalarField,
    SymTensorField, TensorSource, TimeWeight, VectorField,
};

pub struct SuiteCheck {
    pub name: &'static str,
    pub module: &'static str,
    pub description: &'static str,
    run: fn(f64) -> Result<CheckRecord>,
}

impl SuiteCheck {
    /// Runs the check with the given budget for dimensional constants; an
    /// error becomes a failed record.
    pub fn run(&self, budget: f64) -> CheckRecord {
        (self.run)(budget).unwrap_or_else(|e| CheckRecord::failed(e.to_string()))
    }
}

pub fn registry() -> &'static [SuiteCheck] {
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static SuiteCheck> {
    REGISTRY.iter().find(|c| c.name == name)
}

/// Expands `"all"` to every registered check, keeping order and dropping repeats.
pub fn expand(names: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        let add: Vec<String> =
            if n == "all" { REGISTRY.iter().map(|c| c.name.to_string()).collect() } else { vec![n.clone()] };
        for a in add {
            if !out.contains(&a) {
                out.push(a);
            }
        }
    }
    out
}

macro_rules! checks {
    ($($name:literal, $module:literal, $run:path, $desc:literal;)*) => {
        const REGISTRY: &[SuiteCheck] = &[
            $(SuiteCheck { name: $name, module: $module, description: $desc, run: $run },)*
        ];
    };
}

checks! {
    "divergence-affine", "tensor_field", divergence_affine, "affine tensor has exact discrete divergence";
    "divergence-second-order", "tensor_field", divergence_second_order, "interior divergence error of a smooth tensor shrinks at second order";
    "positivity-gas-tensor", "tensor_field", positivity_gas_tensor, "sampled gas tensor is positive semi-definite";
    "det-power-gas-tensor", "tensor_field", det_power_gas_tensor, "det of the d = 1 gas tensor equals rho p";
    "space-time-integral-refinement", "tensor_field", space_time_integral_refinement, "t-weighted integral of a Gaussian matches its closed form";
    "push-forward-worked-value", "projective", push_forward_worked_value, "alpha = 1, p = (1, 2), S = I gives q = (1/2, 1) and [[2, -4], [-4, 16]]";
    "push-forward-gas-divergence", "projective", push_forward_gas_divergence, "pushed-forward gas tensor stays divergence free under refinement";
    "source-transform-mass-identity", "projective", source_transform_mass_identity, "mass row of the residual keeps its measure norm";
    "source-transform-inequality", "projective", source_transform_inequality, "momentum residual obeys its transformed bound";
    "lift-divergence", "projective", lift_divergence, "lift of a divergence-free tensor passes the cone divergence check and restricts back";
    "pipeline-matches-push-forward", "projective", pipeline_matches_push_forward, "lift, congruence and restriction reproduce the block transform";
    "group-composition", "projective", group_composition, "two actions in sequence agree with the product action";
    "group-scalar-invariance", "projective", group_scalar_invariance, "positive multiples of P act identically";
    "determinantal-mass-scale", "projective", determinantal_mass_scale_check, "transformed cone mass scales by 1 + alpha t0";
    "calogero-moser-invariance", "projective", calogero_moser_invariance, "inverse-square trajectories map to trajectories";
    "quadratic-negative-control", "projective", quadratic_negative_control, "harmonic trajectories do not map to trajectories";
    "cofactor-exp-cosh", "special", cofactor_exp_cosh, "cofactor Hessian of exp(z0) cosh(z1) matches its closed form";
    "cofactor-quartic", "special", cofactor_quartic, "cofactor Hessian of the quartic at (1/2, 2) is diag(4, 1/4)";
    "transformed-potential-spot-value", "special", transformed_potential_spot_value, "transformed quadratic at (1/2, 1) equals 5/4";
    "norm-cone-mass", "special", norm_cone_mass, "determinantal mass of |z| in the plane is pi";
    "scaled-cone-mass", "special", scaled_cone_mass, "determinantal mass of 2|z| is 4 pi";
    "rigidity-matches-cone", "special", rigidity_matches_cone, "rigidity form with constant mu equals the cone cofactor Hessian";
    "rigidity-divergence-slope", "special", rigidity_divergence_slope, "sampled rigidity form is divergence free in the limit";
    "solver-constant-state", "euler", solver_constant_state, "solver keeps a uniform state unchanged";
    "gamma3-characteristics", "euler", gamma3_characteristics, "gamma = 3 solver converges to the characteristic solution";
    "sod-wave-positions", "euler", sod_wave_positions, "Sod shock, contact and fan positions within two cells";
    "mass-momentum-determinant", "euler", mass_momentum_determinant, "det of the mass-momentum tensor equals rho p";
    "mass-momentum-divergence", "euler", mass_momentum_divergence, "divergence of the solver tensor shrinks under refinement";
    "invariance-gamma3", "euler", invariance_gamma3, "transformed gamma = 3 flow solves the equations, second order";
    "invariance-negative-control", "euler", invariance_negative_control, "gamma = 1.4 keeps an energy residual";
    "energy-defect-slope", "euler", energy_defect_slope, "energy residual matches the predicted source at first order";
    "extra-constant-pre-shock", "euler", extra_constant_pre_shock, "the extra functional is constant before the shock";
    "pressure-inertia-bound", "euler", pressure_inertia_bound, "d t^2 int p stays below 2 I(0)";
    "alpha-ladder-energy", "euler", alpha_ladder_energy, "transformed energy over alpha^2 tends to the inertia";
    "two-beam-moments", "kinetic", two_beam_moments, "two-beam tensor has det rho1 rho2 (a - b)^2";
    "two-beam-enumeration", "kinetic", two_beam_enumeration, "simplex enumeration of two beams gives (a - b)^2";
    "uniform-square-simplex", "kinetic", uniform_square_simplex, "Monte Carlo simplex estimate of the unit square is 1/144";
    "free-transport-inertia", "kinetic", free_transport_inertia, "particle inertia is quadratic in time and invariants are exact";
    "kinetic-push-forward-spot", "kinetic", kinetic_push_forward_spot, "velocity push-forward matches the tensor push-forward";
    "hyperplane-degenerate-zero", "kinetic", hyperplane_degenerate_zero, "velocities on a line give determinant zero";
    "precis-gamma3", "estimates", precis_gamma3, "space-time bound on an exact gamma = 3 flow";
    "estihp-refinement-stability", "estimates", estihp_refinement_stability, "pressure bound constant is stable under refinement";
    "estihp-domain-extension", "estimates", estihp_domain_extension, "pressure bound constant ignores added vacuum";
    "inertia-mono-atomic-only", "estimates", inertia_mono_atomic_only, "inertia bound refuses gamma != gamma_d";
    "inertia-alpha-ladder", "estimates", inertia_alpha_ladder, "alpha ladder converges to the inertia";
    "reel-tail-slope", "estimates", reel_tail_slope, "d = 1, gamma = 2 growth tail slope at most 0.6";
    "fi-equality-disc", "estimates", fi_equality_disc, "the disc attains 1/(2 sqrt(pi)) and beats its perturbations";
    "fi-ellipse-deficit", "estimates", fi_ellipse_deficit, "an ellipse has a smaller ratio than the disc";
    "nonj-periodic-cofactor", "estimates", nonj_periodic_cofactor, "equality for n = 2 and positive margin for n = 3";
    "nonj-jensen-orientation", "estimates", nonj_jensen_orientation, "diagonal tensors satisfy the Jensen direction";
    "uncert-indicator", "estimates", uncert_indicator, "indicator of [-1, 1] gives 32, 8/3, 2 and constant 6";
    "uncert-scale-invariance", "estimates", uncert_scale_invariance, "constant is invariant under translation and scaling";
    "boltzmann-inertia-stability", "estimates", boltzmann_inertia_stability, "kinetic bound is stable under particle doubling";
    "growth-exponent-arithmetic", "estimates", growth_exponent_arithmetic, "exponent equals 1 - d/D for gamma = 1 + 2/D";
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Fails with a message when a step that should succeed did not.
fn expect(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(what.to_string()))
    }
}

fn line(lo: f64, hi: f64, n: usize) -> Result<Lattice> {
    Lattice::new(vec![Axis::new(lo, hi, n)?])
}

fn cos_bump(a: f64, linear: f64) -> InitialData {
    InitialData::CosBump {
        amplitude: 1.0,
        radius: 1.0,
        power: 2.0,
        center: vec![],
        velocity: Velocity { uniform: vec![], linear },
        thermal: Thermal::Isentropic { a },
    }
}

fn gamma3_gas() -> Result<Gas> {
    Gas::new(1, 3.0, GasModel::Isentropic { a: 1.0 })
}

fn gamma3_exact(domain: (f64, f64)) -> Result<Gamma3Flow> {
    Gamma3Flow::new(cos_bump(1.0, 0.0), 1.0, domain)
}

/// L1 norm of a residual over cells away from the grid boundary.
fn interior_l1(div: &VectorField) -> f64 {
    interior(div).map(|c| div.cell(c).iter().map(|r| r.abs()).sum::<f64>()).sum::<f64>() * div.grid.cell_volume()
}

fn interior(div: &VectorField) -> impl Iterator<Item = usize> + '_ {
    let lat = div.grid.lattice();
    let shape = lat.shape();
    (0..div.grid.len()).filter(move |&c| lat.multi_index(c).iter().zip(&shape).all(|(&i, &m)| i > 0 && i + 1 < m))
}

// tensor_field

fn divergence_affine(_: f64) -> Result<CheckRecord> {
    // S = [[x, -t], [-t, 0]]: row 0 is divergence free, row 1 is -1
    let g = GridSpec::uniform((0.0, 1.0), 8, &[(-1.0, 1.0)], &[10])?;
    let s = SymTensorField::from_fn(&g, |p| Mat::from_row_slice(2, 2, &[p[1], -p[0], -p[0], 0.0]));
    let div = discrete_divergence(&s)?;
    let err = (0..g.len()).map(|c| div.cell(c)[0].abs().max((div.cell(c)[1] + 1.0).abs())).fold(0.0, f64::max);
    Ok(CheckRecord::new(err < 1e-12).detail("max_error", err))
}

fn divergence_second_order(_: f64) -> Result<CheckRecord> {
    let tensor = |p: &[f64]| {
        let (t, x) = (p[0], p[1]);
        let off = (t + x).sin();
        Mat::from_row_slice(2, 2, &[t.exp() * x.cos(), off, off, t * x * x])
    };
    let exact = |p: &[f64]| {
        let (t, x) = (p[0], p[1]);
        [t.exp() * x.cos() + (t + x).cos(), (t + x).cos() + 2.0 * t * x]
    };
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = GridSpec::uniform((0.0, 1.0), n, &[(-1.0, 1.0)], &[n])?;
        let div = discrete_divergence(&SymTensorField::from_fn(&g, tensor))?;
        let err = interior(&div)
            .map(|c| {
                let e = exact(&g.center(c));
                let r = div.cell(c);
                (r[0] - e[0]).abs().max((r[1] - e[1]).abs())
            })
            .fold(0.0, f64::max);
        hs.push(1.0 / n as f64);
        errs.push(err);
    }
    let slope = refinement_slope(&hs, &errs)?;
    Ok(CheckRecord::new(slope >= 1.9).slope(slope).detail("finest_error", errs[2]))
}

fn gas_tensor_field() -> Result<(Gamma3Flow, SymTensorField)> {
    let flow = gamma3_exact((-4.0, 4.0))?;
    let g = GridSpec::uniform((0.0, 0.2), 20, &[(-1.5, 1.5)], &[60])?;
    let s = SymTensorField::sample(&g, &GasTensor { flow: flow.clone() })?;
    Ok((flow, s))
}

fn positivity_gas_tensor(_: f64) -> Result<CheckRecord> {
    let (_, s) = gas_tensor_field()?;
    let r = positivity_report(&s, 1e-12);
    Ok(CheckRecord::new(r.fraction_psd == 1.0 && r.min_eigenvalue >= -1e-12)
        .detail("min_eigenvalue", r.min_eigenvalue)
        .detail("fraction_psd", r.fraction_psd))
}

fn det_power_gas_tensor(_: f64) -> Result<CheckRecord> {
    let (flow, s) = gas_tensor_field()?;
    let dp = det_power(&s, 1.0)?;
    let g = s.grid();
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for c in 0..g.len() {
        let p = g.center(c);
        let w = flow.state(p[0], &p[1..])?;
        err = err.max((dp.field.values[c] - w.rho * w.p).abs());
        scale = scale.max(w.rho * w.p);
    }
    Ok(CheckRecord::new(err <= 1e-12 * scale.max(1.0)).detail("max_error", err).detail("clamped", dp.clamped as f64))
}

fn space_time_integral_refinement(_: f64) -> Result<CheckRecord> {
    // int_0^1 t dt int_{-3}^{3} exp(-x^2) dx = sqrt(pi) erf(3) / 2
    const ERF3: f64 = 0.999_977_909_503_001_4;
    let exact = 0.5 * PI.sqrt() * ERF3;
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = GridSpec::uniform((0.0, 1.0), n, &[(-3.0, 3.0)], &[n])?;
        let f = ScalarField::from_fn(&g, |p| (-p[1] * p[1]).exp());
        errs.push((space_time_integral(&f, TimeWeight::T) - exact).abs() / exact);
    }
    let ok = errs[2] < 1e-2 && errs[2] < errs[0];
    Ok(CheckRecord::new(ok).detail("exact", exact).detail("rel_error", errs[2]))
}

// projective

fn push_forward_worked_value(_: f64) -> Result<CheckRecord> {
    let map = ProjectiveMap::new(1.0)?;
    let (q, sb) = push_forward_value(&map, &[1.0, 2.0], &Mat::identity(2, 2))?;
    let expected = Mat::from_row_slice(2, 2, &[2.0, -4.0, -4.0, 16.0]);
    let ok = q == vec![0.5, 1.0] && sb == expected;
    Ok(CheckRecord::new(ok).detail("max_error", (sb - expected).amax()))
}

/// Divergence ratio of the push-forward of `source` over `n = 16, 32, 64`.
fn push_forward_slope(source: &dyn TensorSource, alpha: f64, t: (f64, f64), x: (f64, f64)) -> Result<(f64, Vec<f64>)> {
    let map = ProjectiveMap::new(alpha)?;
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = GridSpec::uniform(t, n, &[x], &[n])?;
        let s = push_forward_onto(&source, &map, &map.image_grid(&g)?)?;
        hs.push(1.0 / n as f64);
        errs.push(divergence_ratio(&s)?);
    }
    Ok((refinement_slope(&hs, &errs)?, errs))
}

fn push_forward_gas_divergence(_: f64) -> Result<CheckRecord> {
    let gas = GasTensor { flow: gamma3_exact((-4.0, 4.0))? };
    let (slope, errs) = push_forward_slope(&gas, 1.0, (0.0, 0.2), (-1.5, 1.5))?;
    Ok(CheckRecord::new(slope >= 0.9).slope(slope).detail("finest_divergence_ratio", errs[2]))
}

/// `S = I + phi(t, x) [[1, 1/2], [1/2, 1]]` with a compact bump `phi`, so its
/// divergence is supported well inside the grid.
fn bumped_tensor(n: usize) -> Result<(SymTensorField, VectorField)> {
    let g = GridSpec::uniform((0.0, 1.0), n, &[(-1.0, 1.0)], &[n])?;
    let s = SymTensorField::from_fn(&g, |p| {
        let r2 = ((p[0] - 0.5).powi(2) + p[1].powi(2)) / 0.09;
        let phi = if r2 < 1.0 { (0.5 * PI * r2.sqrt()).cos().powi(4) } else { 0.0 };
        Mat::identity(2, 2) + Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]) * phi
    });
    let div = discrete_divergence(&s)?;
    Ok((s, div))
}

fn source_transform_mass_identity(_: f64) -> Result<CheckRecord> {
    let map = ProjectiveMap::new(0.5)?;
    let mut gaps = Vec::new();
    for n in [32, 64, 128] {
        let (s, div) = bumped_tensor(n)?;
        gaps.push(push_forward_with_source(&s, &div, &map)?.bounds.identity_gap());
    }
    let ok = gaps[2] < 0.05 && gaps[2] < gaps[0];
    Ok(CheckRecord::new(ok).detail("identity_gap", gaps[2]).detail("coarse_gap", gaps[0]))
}

fn source_transform_inequality(_: f64) -> Result<CheckRecord> {
    let mut rec = CheckRecord::new(true);
    for alpha in [0.5, 1.0, 2.0] {
        let (s, div) = bumped_tensor(64)?;
        let b = push_forward_with_source(&s, &div, &ProjectiveMap::new(alpha)?)?.bounds;
        rec = rec
            .detail(&format!("slack_alpha_{alpha}"), b.slack())
            .require(&format!("holds_alpha_{alpha}"), b.inequality_holds(0.05));
        if alpha == 1.0 {
            rec = rec.bound(b.momentum_transformed, b.momentum_bound);
        }
    }
    Ok(rec)
}

fn lift_divergence(_: f64) -> Result<CheckRecord> {
    let cof = CofactorHessian { theta: ExpCosh };
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let mut reproduced = 0.0f64;
    for n in [16, 32, 64] {
        let g = GridSpec::uniform((0.2, 1.0), n, &[(-1.0, 1.0)], &[n])?;
        let blocks = HomogeneousBlocks::sample(&lift(&cof), &g)?;
        let direct = SymTensorField::sample(&g, &cof)?;
        hs.push(1.0 / n as f64);
        // for a pure lift the divergence is the only term of the check, so normalize by |S|
        let norm: f64 = direct.packed().iter().map(|v| v.abs()).sum::<f64>() * g.cell_volume();
        errs.push(blocks.divergence_check().residual / norm);
        let back = restrict(&blocks, None)?;
        reproduced = reproduced.max(max_diff(back.packed(), direct.packed()) / max_abs(direct.packed()));
    }
    let slope = refinement_slope(&hs, &errs)?;
    Ok(CheckRecord::new(slope >= 1.5 && reproduced < 1e-13)
        .slope(slope)
        .detail("finest_relative_residual", errs[2])
        .detail("restriction_error", reproduced))
}

/// A smooth positive definite tensor on `(t, x)`.
fn smooth_psd() -> AnalyticTensor<impl Fn(&[f64]) -> Mat + Sync> {
    AnalyticTensor::new(2, |p: &[f64]| {
        let (t, x) = (p[0], p[1]);
        let off = 0.5 * x.cos();
        Mat::from_row_slice(2, 2, &[2.0 + (t + x).sin(), off, off, 1.5 + 0.5 * (2.0 * t).sin()])
    })
}

fn tilted_action() -> Result<GeneralLinearAction> {
    GeneralLinearAction::new(Mat::from_row_slice(3, 3, &[1.1, 0.2, -0.1, 0.15, 0.9, 0.1, -0.05, 0.2, 1.2]))
}

fn pipeline_matches_push_forward(_: f64) -> Result<CheckRecord> {
    let cof = CofactorHessian { theta: ExpCosh };
    let g = GridSpec::uniform((0.0, 1.0), 12, &[(-1.0, 1.0)], &[12])?;
    let mut gap = 0.0f64;
    for alpha in [0.5, 1.0, 2.0] {
        let map = ProjectiveMap::new(alpha)?;
        let image = map.image_grid(&g)?;
        let via_group = group_action(&cof, &GeneralLinearAction::from_map(&map, 1), &image)?;
        let via_blocks = push_forward_onto(&cof, &map, &image)?;
        gap = gap.max(max_diff(via_group.packed(), via_blocks.packed()) / max_abs(via_blocks.packed()));
    }
    Ok(CheckRecord::new(gap <= 1e-12).detail("max_relative_gap", gap))
}

fn group_composition(_: f64) -> Result<CheckRecord> {
    let source = smooth_psd();
    let a = tilted_action()?;
    let b = GeneralLinearAction::new(Mat::from_row_slice(3, 3, &[1.0, -0.1, 0.05, 0.0, 1.1, -0.2, 0.1, 0.1, 0.95]))?;
    let ab = a.compose(&b)?;
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = GridSpec::uniform((0.0, 1.0), n, &[(-1.0, 1.0)], &[n])?;
        let sampled = SymTensorField::sample(&g, &source)?;
        let g1 = group_image_grid(&b, &g)?;
        let step = group_action(&sampled, &b, &g1)?;
        let g2 = group_image_grid(&a, &g1)?;
        let chained = group_action(&step, &a, &g2)?;
        let direct = group_action(&source, &ab, &g2)?;
        errs.push(max_diff(chained.packed(), direct.packed()) / max_abs(direct.packed()));
    }
    let ok = errs[2] < 1e-2 && errs[2] < errs[1] && errs[1] < errs[0];
    Ok(CheckRecord::new(ok).detail("coarse_error", errs[0]).detail("finest_error", errs[2]))
}

fn group_scalar_invariance(_: f64) -> Result<CheckRecord> {
    let source = smooth_psd();
    let a = tilted_action()?;
    let g = GridSpec::uniform((0.0, 1.0), 12, &[(-1.0, 1.0)], &[12])?;
    let img = group_image_grid(&a, &g)?;
    let mut gap = 0.0f64;
    // positive multiples only: a negative one maps the cone lambda > 0 to lambda < 0
    for c in [5.0, 0.25, 1e3] {
        let f1 = group_action(&source, &a, &img)?;
        let fc = group_action(&source, &a.scaled(c)?, &img)?;
        gap = gap.max(max_diff(f1.packed(), fc.packed()) / max_abs(f1.packed()));
    }
    Ok(CheckRecord::new(gap <= 1e-12).detail("max_relative_gap", gap))
}

fn determinantal_mass_scale_check(_: f64) -> Result<CheckRecord> {
    let map = ProjectiveMap::new(1.0)?;
    let arithmetic = determinantal_mass_scale(PI, 1.0, &map)? == 2.0 * PI;
    let cone = |base: Vec<f64>| NormCone { c: 1.0, base };
    let base = vec![1.0, 0.0];
    let reference =
        determinantal_mass(&HomogeneousPotential::new(cone(base.clone()), base.clone(), 0.1, 1e-10)?, 20_000)?.value;
    let image = transformed_base(&map, &base)?;
    let target = GridSpec::uniform((image[0] - 0.05, image[0] + 0.05), 4, &[(image[1] - 0.05, image[1] + 0.05)], &[4])?;
    let tp = transform_potential(cone(base), &map, &target)?;
    let got = determinantal_mass(&HomogeneousPotential::new(tp, image, 0.02, 1e-8)?, 20_000)?.value;
    let expected = determinantal_mass_scale(reference, 1.0, &map)?;
    let rel = (got - expected).abs() / expected;
    Ok(CheckRecord::new(arithmetic && rel < 1e-3)
        .detail("transformed_mass", got)
        .detail("expected", expected)
        .detail("rel_error", rel))
}

fn calogero_moser_invariance(_: f64) -> Result<CheckRecord> {
    let map = ProjectiveMap::new(1.0)?;
    let r = ode_invariance_check(
        &Potential::CalogeroMoser { a: 1.0 },
        &[1.0, 0.0],
        &[0.0, 1.0],
        &map,
        2.0,
        40,
        &OdeOptions::default(),
    )?;
    Ok(CheckRecord::new(r.max_deviation <= 1e-6).detail("max_deviation", r.max_deviation))
}

fn quadratic_negative_control(_: f64) -> Result<CheckRecord> {
    let map = ProjectiveMap::new(1.0)?;
    let r = ode_invariance_check(
        &Potential::Quadratic { k: 1.0 },
        &[1.0, 0.0],
        &[0.0, 1.0],
        &map,
        2.0,
        40,
        &OdeOptions::default(),
    )?;
    Ok(CheckRecord::new(r.max_deviation > 0.1).detail("max_deviation", r.max_deviation))
}

// special

fn cofactor_exp_cosh(_: f64) -> Result<CheckRecord> {
    let g = GridSpec::uniform((-1.0, 1.0), 10, &[(-1.0, 1.0)], &[10])?;
    let st = cofactor_hessian(&ExpCosh, &g)?;
    let mut err = 0.0f64;
    for c in 0..g.len() {
        let z = g.center(c);
        let e = z[0].exp();
        let (ch, sh) = (z[1].cosh(), z[1].sinh());
        let exact = Mat::from_row_slice(2, 2, &[e * ch, -e * sh, -e * sh, e * ch]);
        err = err.max((st.field.get(c) - &exact).amax() / exact.amax());
    }
    Ok(CheckRecord::new(err < 1e-12 && st.certificate.is_convex()).detail("max_relative_error", err))
}

fn cofactor_quartic(_: f64) -> Result<CheckRecord> {
    let s = CofactorHessian { theta: Quartic { n: 2 } }.eval(&[0.5, 2.0])?;
    let err = (s - Mat::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.25])).amax();
    Ok(CheckRecord::new(err == 0.0).detail("max_error", err))
}

fn transformed_potential_spot_value(_: f64) -> Result<CheckRecord> {
    let tp = TransformedPotential { inner: Quadratic { n: 2, c: 1.0 }, map: ProjectiveMap::new(1.0)? };
    let v = tp.value(&[0.5, 1.0]);
    let outside = tp.value(&[1.5, 0.0]);
    Ok(CheckRecord::new((v - 1.25).abs() < 1e-15 && outside.is_nan()).detail("value", v))
}

fn cone_mass(c: f64) -> Result<CheckRecord> {
    let pot = HomogeneousPotential::new(NormCone { c, base: vec![0.0, 0.0] }, vec![0.0, 0.0], 1.0, 1e-12)?;
    let dm = determinantal_mass(&pot, 20_000)?;
    let exact = PI * c * c;
    let rel = (dm.value - exact).abs() / exact;
    Ok(CheckRecord::new(dm.simple && rel < 1e-3)
        .detail("mass", dm.value)
        .detail("exact", exact)
        .detail("hull_area", dm.hull_area)
        .detail("shoelace_area", dm.shoelace_area))
}

fn norm_cone_mass(_: f64) -> Result<CheckRecord> {
    cone_mass(1.0)
}

fn scaled_cone_mass(_: f64) -> Result<CheckRecord> {
    cone_mass(2.0)
}

fn rigidity_matches_cone(_: f64) -> Result<CheckRecord> {
    let (c, p) = (1.7, vec![0.3, -0.2]);
    let cone = CofactorHessian { theta: NormCone { c, base: p.clone() } };
    let rigid = RigidityForm { mu: |_: &[f64]| c, base: p };
    let mut err = 0.0f64;
    for z in [[1.0, 0.5], [-0.4, 2.0], [0.31, -1.2], [2.5, 2.5]] {
        let a = cone.eval(&z)?;
        err = err.max((&a - rigid.eval(&z)?).amax() / a.amax());
    }
    Ok(CheckRecord::new(err <= 1e-10).detail("max_relative_error", err))
}

fn rigidity_divergence_slope(_: f64) -> Result<CheckRecord> {
    let mu = |w: &[f64]| 1.0 + 0.5 * w[0] * w[1];
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = GridSpec::uniform((0.0, 1.0), n, &[(-1.0, 1.0)], &[n])?;
        hs.push(1.0 / n as f64);
        errs.push(divergence_ratio(&rigidity_form(mu, &[-1.0, 0.0], &g)?)?);
    }
    let slope = refinement_slope(&hs, &errs)?;
    Ok(CheckRecord::new(slope >= 0.9).slope(slope).detail("finest_divergence_ratio", errs[2]))
}

// euler

fn solver_constant_state(_: f64) -> Result<CheckRecord> {
    let gas = Gas::new(2, 2.0, GasModel::Full)?;
    let space = Lattice::new(vec![Axis::new(-1.0, 1.0, 16)?; 2])?;
    let init = InitialData::Uniform { rho: 1.3, u: vec![0.4, -0.2], p: 0.7 }.sample(&gas, &space)?;
    let cfg = SolverConfig { t_end: 0.3, n_t: 30, guard_cells: 0, ..SolverConfig::default() };
    let flow = solve(&init, &cfg)?;
    let nc = init.cons.len();
    let last = &flow.data[flow.data.len() - nc..];
    let err = max_diff(last, &init.cons);
    Ok(CheckRecord::new(err < 1e-13).detail("max_error", err))
}

fn gamma3_characteristics(_: f64) -> Result<CheckRecord> {
    let gas = gamma3_gas()?;
    let exact = gamma3_exact((-4.0, 4.0))?;
    let t = 0.25;
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [200, 400, 800] {
        let space = line(-4.0, 4.0, n)?;
        let init = cos_bump(1.0, 0.0).sample(&gas, &space)?;
        let flow = solve(&init, &SolverConfig { t_end: t, n_t: n / 2, store_every: n / 2, ..SolverConfig::default() })?;
        let mut err = 0.0;
        for c in 0..n {
            err += (flow.primitive(1, c).rho - exact.state(t, &space.center(c))?.rho).abs();
        }
        hs.push(space.axis(0).width());
        errs.push(err * space.cell_volume());
    }
    let slope = refinement_slope(&hs, &errs)?;
    Ok(CheckRecord::new(t < exact.shock_time() && slope > 0.8).slope(slope).detail("finest_l1_error", errs[2]))
}

/// First location right of `from` where `rho` crosses `level`.
fn crossing(space: &Lattice, rho: &[f64], level: f64, from: f64) -> f64 {
    let ax = space.axis(0);
    for i in 0..rho.len() - 1 {
        let x = ax.center(i);
        if x >= from && (rho[i] - level) * (rho[i + 1] - level) <= 0.0 && rho[i] != rho[i + 1] {
            return x + (level - rho[i]) / (rho[i + 1] - rho[i]) * ax.width();
        }
    }
    f64::NAN
}

fn sod_wave_positions(_: f64) -> Result<CheckRecord> {
    let gas = Gas::new(1, 1.4, GasModel::Full)?;
    let n = 800;
    let space = line(-1.0, 2.0, n)?;
    let h = space.axis(0).width();
    let (left, right) = ([1.0, 0.0, 1.0], [0.125, 0.0, 0.1]);
    let exact = ExactRiemann::new(gas, left, right, 0.5)?;
    let init = InitialData::Riemann { left, right, x0: 0.5 }.sample(&gas, &space)?;
    let t = 0.2;
    let cfg = SolverConfig {
        t_end: t,
        n_t: 400,
        scheme: Scheme::Muscl,
        store_every: 400,
        guard_cells: 0,
        ..SolverConfig::default()
    };
    let flow = solve(&init, &cfg)?;
    let last = flow.n_levels() - 1;
    let rho: Vec<f64> = (0..n).map(|c| flow.primitive(last, c).rho).collect();
    let (lw, contact, rw) = exact.waves();
    let (Wave::Rarefaction { head, tail }, Wave::Shock { speed }) = (lw, rw) else {
        return Ok(CheckRecord::failed("Sod problem should have a left fan and a right shock"));
    };
    let rho_l = exact.sample(contact - 1e-9)[0];
    let rho_r = exact.sample(contact + 1e-9)[0];
    let shock = crossing(&space, &rho, 0.5 * (rho_r + right[0]), 0.5 + contact * t + 0.05) - (0.5 + speed * t);
    let contact_err = crossing(&space, &rho, 0.5 * (rho_l + rho_r), 0.5 + tail * t + 0.02) - (0.5 + contact * t);
    let fan = crossing(&space, &rho, exact.sample(0.5 * (head + tail))[0], -1.0) - (0.5 + 0.5 * (head + tail) * t);
    let worst = shock.abs().max(contact_err.abs()).max(fan.abs());
    Ok(CheckRecord::new(worst <= 2.0 * h)
        .detail("shock_offset_cells", shock / h)
        .detail("contact_offset_cells", contact_err / h)
        .detail("fan_offset_cells", fan / h))
}

fn gamma3_solver_flow(n: usize, t_end: f64, n_t: usize) -> Result<Flow> {
    let init = cos_bump(1.0, 0.0).sample(&gamma3_gas()?, &line(-4.0, 4.0, n)?)?;
    solve(&init, &SolverConfig { t_end, n_t, ..SolverConfig::default() })
}

fn mass_momentum_determinant(_: f64) -> Result<CheckRecord> {
    let n = 200;
    let flow = gamma3_solver_flow(n, 0.2, 50)?;
    let s = mass_momentum_tensor(&flow)?;
    let mut err = 0.0f64;
    for c in 0..s.grid().len() {
        let w = flow.primitive(c / n, c % n);
        err = err.max((s.get(c).determinant() - w.rho * w.p).abs() / (1.0 + w.rho * w.p));
    }
    Ok(CheckRecord::new(err <= 1e-10).detail("max_relative_error", err))
}

fn mass_momentum_divergence(_: f64) -> Result<CheckRecord> {
    let mut divs = Vec::new();
    for n in [200, 400] {
        let s = mass_momentum_tensor(&gamma3_solver_flow(n, 0.2, n / 4)?)?;
        divs.push(interior_l1(&discrete_divergence(&s)?));
    }
    Ok(CheckRecord::new(divs[1] < divs[0]).detail("coarse_l1", divs[0]).detail("fine_l1", divs[1]))
}

fn invariance_gamma3(_: f64) -> Result<CheckRecord> {
    let flow = gamma3_exact((-3.0, 3.0))?;
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let mut shocks = 0;
    for n in [40, 80, 160] {
        let grid = GridSpec::uniform((0.0, 0.15), n, &[(-1.5, 1.5)], &[2 * n])?;
        let r = projective_invariance_residual(&flow, 1.0, &grid)?;
        shocks += r.shock_cells;
        hs.push(r.h);
        errs.push(r.mass + r.momentum + r.energy);
    }
    let slope = refinement_slope(&hs, &errs)?;
    Ok(CheckRecord::new(slope > 1.5 && shocks == 0).slope(slope).detail("finest_residual", errs[2]))
}

fn invariance_negative_control(_: f64) -> Result<CheckRecord> {
    let flow = ExpansionFlow::new(1, 1.4, 0.5, 1.0, 0.2, 1.0, 0.5)?;
    let grid = GridSpec::uniform((0.0, 0.8), 40, &[(-1.5, 1.5)], &[40])?;
    let refused = matches!(projective_invariance_residual(&flow, 1.0, &grid), Err(Error::NotMonoatomic { .. }));
    let r = transformed_euler_residual(&flow, 1.0, &grid, &ShockDetector::default())?;
    let ratio = r.energy / r.source;
    Ok(CheckRecord::new(refused && ratio > 0.5)
        .detail("energy_residual", r.energy)
        .detail("source", r.source)
        .detail("ratio", ratio))
}

fn energy_defect_slope(_: f64) -> Result<CheckRecord> {
    let flow = ExpansionFlow::new(1, 1.4, 0.5, 1.0, 0.2, 1.0, 0.5)?;
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [20, 40, 80] {
        let grid = GridSpec::uniform((0.0, 0.8), n, &[(-1.5, 1.5)], &[n])?;
        let r = transformed_euler_residual(&flow, 0.5, &grid, &ShockDetector::default())?;
        hs.push(r.h);
        errs.push(energy_defect_residual(&flow, 0.5, &grid)?.mismatch_l1);
    }
    let slope = refinement_slope(&hs, &errs)?;
    Ok(CheckRecord::new(slope >= 0.9).slope(slope).detail("finest_mismatch", errs[2]))
}

fn extra_constant_pre_shock(_: f64) -> Result<CheckRecord> {
    let exact = gamma3_exact((-4.0, 4.0))?;
    let times: Vec<f64> = (0..=6).map(|k| 0.05 * k as f64).collect();
    let flow = Flow::from_source(&exact, line(-3.0, 3.0, 6000)?, times)?;
    let f = functionals(&flow);
    let drift = f.extra.iter().map(|x| (x - f.extra[0]).abs()).fold(0.0, f64::max) / f.extra[0];
    Ok(CheckRecord::new(drift < 1e-6).detail("relative_drift", drift).detail("extra0", f.extra[0]))
}

fn pressure_inertia_bound(_: f64) -> Result<CheckRecord> {
    let gas = Gas::new(1, 3.0, GasModel::Full)?;
    let state = cos_bump(1.0, 0.5).sample(&gas, &line(-8.0, 8.0, 800)?)?;
    let flow =
        solve_refining(&state, &SolverConfig { t_end: 1.0, n_t: 200, store_every: 10, ..SolverConfig::default() }, 4)?;
    let c = functionals(&flow).checks(&FunctionalTolerances::default());
    let Some(ratio) = c.pressure_bound_ratio else {
        return Ok(CheckRecord::failed("no pressure bound for a mono-atomic gas"));
    };
    Ok(CheckRecord::new(ratio <= 1.0 + 1e-3 && c.mass_drift <= c.mass_tolerance).detail("ratio", ratio))
}

fn alpha_ladder_energy(_: f64) -> Result<CheckRecord> {
    let gas = gamma3_gas()?;
    let space = line(-2.0, 2.0, 200)?;
    let init = InitialData::CosBump {
        amplitude: 1.0,
        radius: 1.0,
        power: 2.0,
        center: vec![0.2],
        velocity: Velocity { uniform: vec![0.5], linear: 0.3 },
        thermal: Thermal::Isentropic { a: 1.0 },
    };
    let state = init.sample(&gas, &space)?;
    let flow = Flow {
        gas,
        space: space.clone(),
        times: vec![0.0, 1e-3],
        data: [state.cons.clone(), state.cons].concat(),
        vacuum: 0.0,
        steps: 0,
        history: vec![],
    };
    let i0 = functionals(&flow).inertia[0];
    let mut prev = f64::INFINITY;
    let mut ok = true;
    let mut last_gap = 0.0;
    for alpha in [1.0, 10.0, 100.0, 1000.0] {
        let e = transformed_energy(&flow, alpha, 0.0, &space)?;
        let gap = (e.physical / (alpha * alpha) - i0).abs();
        ok &= gap * alpha < 1.0 && gap < prev && (e.physical - e.transformed).abs() < 1e-3 * e.physical;
        prev = gap;
        last_gap = gap;
    }
    Ok(CheckRecord::new(ok).detail("inertia", i0).detail("gap_at_1000", last_gap))
}

// kinetic

fn two_beams() -> Result<BeamState> {
    BeamState::new(vec![
        Beam { mass: 1.0, center: vec![0.0], width: 0.4, velocity: vec![0.0] },
        Beam { mass: 1.0, center: vec![0.5], width: 0.4, velocity: vec![1.0] },
    ])
}

fn two_beam_moments(_: f64) -> Result<CheckRecord> {
    let beams = two_beams()?;
    let p = [0.5, 0.4];
    let w = beams.velocity_measure(p[0], &p[1..])?;
    // velocities 0 and 1
    let expected = w.weights()[0] * w.weights()[1];
    let det = beams.eval(&p)?.determinant();
    Ok(CheckRecord::new((det - expected).abs() < 1e-14 && expected > 0.0)
        .detail("det", det)
        .detail("expected", expected))
}

fn two_beam_enumeration(_: f64) -> Result<CheckRecord> {
    let (a, b) = (0.3, -1.2);
    let beams = VelocityMeasure::with_components(1, vec![a, b], vec![1.0, 1.0], vec![0, 1])?;
    let got = beams.det_by_enumeration()?;
    let unit = VelocityMeasure::new(1, vec![0.0, 1.0], vec![1.0, 1.0])?.det_by_enumeration()?;
    let ok = (got - (a - b) * (a - b)).abs() < 1e-14 && unit == 1.0;
    Ok(CheckRecord::new(ok).detail("det", got).detail("unit_det", unit))
}

struct UniformSquare;

impl KineticDensity for UniformSquare {
    fn d(&self) -> usize {
        2
    }
    fn value(&self, _t: f64, _x: &[f64], xi: &[f64]) -> f64 {
        if xi.iter().all(|v| (0.0..=1.0).contains(v)) {
            1.0
        } else {
            0.0
        }
    }
}

fn uniform_square_simplex(_: f64) -> Result<CheckRecord> {
    let vm = velocity_measure(&UniformSquare, 0.0, &[0.0, 0.0], &Lattice::new(vec![Axis::new(0.0, 1.0, 120)?; 2])?)?;
    let est = vm.det_via_simplex(20_000, 4)?;
    let z = est.z_score(1.0 / 144.0);
    // midpoint rule on a 6 x 6 grid: per-axis variance (1 - 1/36)/12
    let coarse = velocity_measure(&UniformSquare, 0.0, &[0.0, 0.0], &Lattice::new(vec![Axis::new(0.0, 1.0, 6)?; 2])?)?;
    let enum_err = (coarse.det_by_enumeration()? - ((1.0 - 1.0 / 36.0) / 12.0f64).powi(2)).abs();
    Ok(CheckRecord::new(z <= 3.0 && enum_err < 1e-14)
        .detail("estimate", est.value)
        .detail("std_error", est.std_error)
        .detail("z_score", z)
        .detail("enumeration_error", enum_err))
}

fn packet1() -> GaussianPhaseDensity {
    GaussianPhaseDensity { mass: 1.0, center: vec![0.1], sigma_x: 0.6, u0: vec![0.4], kappa: 0.5, sigma_xi: 0.3 }
}

fn free_transport_inertia(_: f64) -> Result<CheckRecord> {
    let phase = Lattice::new(vec![Axis::new(-3.0, 3.0, 60)?, Axis::new(-1.5, 2.5, 40)?])?;
    let p = ParticleState::from_density(&packet1(), 0.0, &phase)?;
    let reg = p.inertia_regression(&[0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0])?;
    let q = p.free_transport(3.0);
    let exact = q.mass() == p.mass() && q.kinetic_energy() == p.kinetic_energy() && q.entropy() == p.entropy();
    Ok(CheckRecord::new(reg.max_rel_error <= 1e-8 && exact).detail("max_rel_error", reg.max_rel_error))
}

fn kinetic_push_forward_spot(_: f64) -> Result<CheckRecord> {
    let beams = two_beams()?;
    let map = ProjectiveMap::new(1.0)?;
    let p = [0.5, 0.4];
    let (_, expected) = push_forward_value(&map, &p, &beams.eval(&p)?)?;
    let (_, vm) = beams.velocity_measure(p[0], &p[1..])?.push_forward(&map, p[0], &p[1..])?;
    let err = (vm.moment_matrix() - &expected).amax() / expected.amax();
    Ok(CheckRecord::new(err < 1e-8).detail("max_relative_error", err))
}

fn hyperplane_degenerate_zero(_: f64) -> Result<CheckRecord> {
    let vm = VelocityMeasure::new(2, vec![-1.0, 0.5, 0.0, 0.5, 2.0, 0.5, 0.7, 0.5], vec![1.0, 0.5, 2.0, 1.0])?;
    let flagged = vm.hyperplane_degeneracy(1e-12).is_some_and(|d| d.is_degenerate);
    let mc = vm.det_via_simplex(5000, 1)?.value;
    let exact = vm.det_by_enumeration()?;
    Ok(CheckRecord::new(flagged && mc == 0.0 && exact == 0.0).detail("estimate", mc).detail("enumeration", exact))
}

// estimates

fn precis_gamma3(_: f64) -> Result<CheckRecord> {
    let exact = gamma3_exact((-4.0, 4.0))?;
    let times: Vec<f64> = (0..=12).map(|k| 0.025 * k as f64).collect();
    let flow = Flow::from_source(&exact, line(-3.0, 3.0, 600)?, times)?;
    Ok(CheckRecord::from_report(&check_precis(&mass_momentum_tensor(&flow)?)?))
}

fn bump_flow(n: usize, half_width: f64, refine: usize) -> Result<Flow> {
    let state = cos_bump(1.0, 0.0).sample(&gamma3_gas()?, &line(-half_width, half_width, n * refine)?)?;
    let cfg = SolverConfig {
        t_end: 2.0,
        n_t: 40 * refine,
        store_every: refine,
        scheme: Scheme::Muscl,
        ..SolverConfig::default()
    };
    solve_refining(&state, &cfg, 6)
}

fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn estihp_refinement_stability(budget: f64) -> Result<CheckRecord> {
    let coarse = check_estihp(&bump_flow(400, 10.0, 1)?, budget)?;
    let fine = check_estihp(&bump_flow(400, 10.0, 2)?, budget)?;
    let (a, b) = (coarse.implied_constant.unwrap_or(f64::NAN), fine.implied_constant.unwrap_or(f64::NAN));
    let change = relative_change(a, b);
    Ok(CheckRecord::from_report(&fine)
        .detail("coarse_constant", a)
        .detail("max_change", change)
        .require("stable", change < 0.1))
}

fn estihp_domain_extension(budget: f64) -> Result<CheckRecord> {
    let small = check_estihp(&bump_flow(400, 10.0, 1)?, budget)?;
    let large = check_estihp(&bump_flow(800, 20.0, 1)?, budget)?;
    let (a, b) = (small.implied_constant.unwrap_or(f64::NAN), large.implied_constant.unwrap_or(f64::NAN));
    let change = relative_change(a, b);
    Ok(CheckRecord::from_report(&large)
        .detail("small_domain_constant", a)
        .detail("change", change)
        .require("unchanged", change < 1e-3))
}

fn inertia_mono_atomic_only(budget: f64) -> Result<CheckRecord> {
    let gas = Gas::new(1, 1.4, GasModel::Full)?;
    let state = cos_bump(1.0, 0.0).sample(&gas, &line(-8.0, 8.0, 200)?)?;
    let cfg = SolverConfig { t_end: 1.0, n_t: 40, scheme: Scheme::Muscl, ..SolverConfig::default() };
    let flow = solve_refining(&state, &cfg, 6)?;
    let refused = matches!(check_inertia(&flow, budget), Err(Error::NotMonoatomic { .. }));
    let estihp = check_estihp(&flow, budget)?;
    let precis = check_precis(&mass_momentum_tensor(&flow)?)?;
    Ok(CheckRecord::new(true)
        .require("refused", refused)
        .require("estihp_passed", estihp.passed)
        .require("precis_passed", precis.passed))
}

fn inertia_alpha_ladder(budget: f64) -> Result<CheckRecord> {
    let r = check_inertia(&bump_flow(400, 10.0, 1)?, budget)?;
    let rate = r.report.detail("alpha_limit_rate").unwrap_or(f64::NAN);
    let worst = r.report.detail("alpha_worst_implied").unwrap_or(f64::NAN);
    Ok(CheckRecord::from_report(&r.report).require("rate", rate >= 0.95).require("worst_within_budget", worst < budget))
}

fn reel_tail_slope(budget: f64) -> Result<CheckRecord> {
    let gas = Gas::new(1, 2.0, GasModel::Full)?;
    let state = cos_bump(1.0, 0.0).sample(&gas, &line(-40.0, 40.0, 1600)?)?;
    let cfg = SolverConfig { t_end: 10.0, n_t: 400, store_every: 4, scheme: Scheme::Muscl, ..SolverConfig::default() };
    let r = check_reel(&solve_refining(&state, &cfg, 6)?, budget)?;
    Ok(CheckRecord::from_report(&r.report)
        .detail("fitted_exponent", r.fitted_exponent)
        .detail("theoretical_exponent", r.theoretical_exponent)
        .require("tail", r.fitted_exponent <= 0.6)
        .require("exponent", (r.theoretical_exponent - 0.5).abs() < 1e-15))
}

fn fi_equality_disc(_: f64) -> Result<CheckRecord> {
    let r = check_fi_equality_case(2, 1.3)?;
    let c = r.ball.implied_constant.unwrap_or(f64::NAN);
    let exact = 0.5 / PI.sqrt();
    Ok(CheckRecord::from_report(&r.ball)
        .detail("exact", exact)
        .require("constant", (c - exact).abs() < 1e-12 && (fi_ball_constant(2) - exact).abs() < 1e-12)
        .require("ball_is_max", r.ball_is_max))
}

fn fi_ellipse_deficit(_: f64) -> Result<CheckRecord> {
    let e = check_fi_shape(2, &FiShape::Ellipsoid { semi_axes: vec![2.0, 0.5] })?;
    let c = e.implied_constant.unwrap_or(f64::NAN);
    Ok(CheckRecord::from_report(&e)
        .detail("ball_constant", fi_ball_constant(2))
        .require("deficit", c < fi_ball_constant(2)))
}

fn periodic_grid(n: usize, cells: usize) -> Result<GridSpec> {
    let a = Axis::periodic(0.0, 1.0, cells)?;
    GridSpec::new(a.clone(), vec![a; n - 1])
}

fn nonj_periodic_cofactor(_: f64) -> Result<CheckRecord> {
    let s2 = cofactor_hessian(&PeriodicPerturbed { n: 2, eps: 0.01, period: 1.0 }, &periodic_grid(2, 64)?)?.field;
    let r2 = check_nonj(&s2, 1e-8)?;
    let s3 = cofactor_hessian(&PeriodicPerturbed { n: 3, eps: 0.008, period: 1.0 }, &periodic_grid(3, 24)?)?.field;
    let r3 = check_nonj(&s3, 1e-8)?;
    let (m2, m3) = (r2.report.detail("margin").unwrap_or(f64::NAN), r3.report.detail("margin").unwrap_or(f64::NAN));
    Ok(CheckRecord::from_report(&r3.report)
        .detail("margin_n2", m2)
        .detail("margin_n3", m3)
        .require("n2_passed", r2.report.passed)
        .require("n2_equality", m2.abs() < 1e-10)
        .require("n3_positive", m3 > 0.0))
}

fn nonj_jensen_orientation(_: f64) -> Result<CheckRecord> {
    let g = periodic_grid(3, 24)?;
    let mut rec = CheckRecord::new(true);
    for eps in [0.05, 0.2, 0.4] {
        let s = SymTensorField::from_fn(&g, |z| {
            let diag = (0..3).map(|i| {
                1.0 + eps
                    * (0..3).filter(|&j| j != i).map(|j| (2.0 * PI * (z[j] + 0.1 * (i + j) as f64)).sin()).sum::<f64>()
            });
            Mat::from_diagonal(&Vector::from_iterator(3, diag))
        });
        let r = check_nonj(&s, 1e-12)?;
        rec = rec
            .detail(&format!("margin_eps_{eps}"), r.report.detail("margin").unwrap_or(f64::NAN))
            .require(&format!("jensen_eps_{eps}"), r.report.passed && r.jensen_lhs <= r.jensen_rhs * (1.0 + 1e-12));
    }
    let bad = SymTensorField::from_fn(&g, |z| Mat::identity(3, 3) * (1.5 + (2.0 * PI * z[0]).sin()));
    let refused = matches!(check_nonj(&bad, 1e-6), Err(Error::DivergenceCheck { .. }));
    Ok(rec.require("refuses_non_divergence_free", refused))
}

fn uncert_indicator(budget: f64) -> Result<CheckRecord> {
    let space = line(-3.0, 3.0, 300)?;
    let g: Vec<f64> = (0..300).map(|c| if space.center(c)[0].abs() < 1.0 { 1.0 } else { 0.0 }).collect();
    let u = check_uncert(&space, &g, budget)?;
    let d = |k: &str| u.report.detail(k).unwrap_or(f64::NAN);
    let ok = (u.report.lhs - 32.0).abs() < 1e-8
        && (d("pair_integral") - 8.0 / 3.0).abs() < 1e-8
        && (d("power_integral") - 2.0).abs() < 1e-8
        && (u.report.implied_constant.unwrap_or(f64::NAN) - 6.0).abs() < 1e-8;
    Ok(CheckRecord::from_report(&u.report).require("closed_form", ok).require("two_term", u.two_term_holds))
}

fn uncert_scale_invariance(budget: f64) -> Result<CheckRecord> {
    let g: Vec<f64> = (0..30).map(|k| 1.0 + (0.7 * k as f64).sin() * (k as f64 / 30.0)).collect();
    let base = Axis::new(-1.0, 1.0, g.len())?;
    let c0 = check_uncert(&Lattice::new(vec![base.clone()])?, &g, budget)?;
    let k0 = c0.report.implied_constant.unwrap_or(f64::NAN);
    let moved =
        check_uncert(&Lattice::new(vec![base.shifted(3.7)])?, &g, budget)?.report.implied_constant.unwrap_or(f64::NAN);
    let gs: Vec<f64> = g.iter().map(|v| 4.0 * v).collect();
    let scaled =
        check_uncert(&Lattice::new(vec![base.scaled(0.3)])?, &gs, budget)?.report.implied_constant.unwrap_or(f64::NAN);
    let gap = relative_change(k0, moved).max(relative_change(k0, scaled));
    Ok(CheckRecord::from_report(&c0.report).detail("max_relative_gap", gap).require("invariant", gap <= 1e-8))
}

fn warm_beams() -> PhaseMixture {
    PhaseMixture {
        parts: vec![
            GaussianPhaseDensity {
                mass: 1.0,
                center: vec![-0.5],
                sigma_x: 0.3,
                u0: vec![0.5],
                kappa: 0.0,
                sigma_xi: 0.15,
            },
            GaussianPhaseDensity {
                mass: 1.0,
                center: vec![0.5],
                sigma_x: 0.3,
                u0: vec![-0.5],
                kappa: 0.0,
                sigma_xi: 0.15,
            },
        ],
    }
}

fn boltzmann_inertia_stability(budget: f64) -> Result<CheckRecord> {
    let grid = GridSpec::uniform((0.0, 4.0), 40, &[(-4.0, 4.0)], &[80])?;
    let run = |nx: usize| -> Result<_> {
        let phase = Lattice::new(vec![Axis::new(-2.5, 2.5, nx)?, Axis::new(-1.5, 1.5, 60)?])?;
        check_boltzmann_inertia(&ParticleState::from_density(&warm_beams(), 0.0, &phase)?, &grid, budget)
    };
    let (a, b) = (run(150)?, run(300)?);
    let change = relative_change(a.implied_constant.unwrap_or(f64::NAN), b.implied_constant.unwrap_or(f64::NAN));
    Ok(CheckRecord::from_report(&b)
        .detail("max_change", change)
        .require("coarse_passed", a.passed)
        .require("stable", change < 0.05))
}

fn growth_exponent_arithmetic(_: f64) -> Result<CheckRecord> {
    let mut worst = (growth_exponent(3, 7.0 / 5.0) - 0.4).abs();
    for d in 1..=3usize {
        for big_d in d..=12 {
            let k = growth_exponent(d, 1.0 + 2.0 / big_d as f64);
            worst = worst.max((k - (1.0 - d as f64 / big_d as f64)).abs());
        }
    }
    expect(worst.is_finite(), "exponent is not finite")?;
    Ok(CheckRecord::new(worst <= 4.0 * f64::EPSILON).detail("max_error", worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::DEFAULT_BUDGET;

    #[test]
    fn every_check_passes() {
        use rayon::prelude::*;
        let failed: Vec<String> = REGISTRY
            .par_iter()
            .map(|c| (c.name, c.run(DEFAULT_BUDGET)))
            .filter(|(_, r)| !r.passed)
            .map(|(name, r)| format!("{name}: {} {:?}", r.message, r.details))
            .collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn names_are_unique_and_expand() {
        let mut names: Vec<&str> = REGISTRY.iter().map(|c| c.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
        let all = expand(&["cofactor-quartic".into(), "all".into()]);
        assert_eq!(all.len(), REGISTRY.len());
        assert_eq!(all[0], "cofactor-quartic");
        assert!(find("no-such-check").is_none());
    }
}
