mod common;

use std::f64::consts::PI;

use projective_dpt::estimates::{
    check_boltzmann_inertia, check_estihp, check_fi, check_fi_equality_case, check_fi_shape, check_inertia, check_nonj,
    check_precis, check_uncert, fi_ball_constant, pair_moments, write_csv, FiShape, InequalityReport, DEFAULT_BUDGET,
};
use projective_dpt::euler::{mass_momentum_tensor, Flow, Gas, GasModel};
use projective_dpt::kinetic::{GaussianPhaseDensity, ParticleState, PhaseMixture};
use projective_dpt::special::{cofactor_hessian, PeriodicPerturbed};
use projective_dpt::tensor_field::SymTensorField;
use projective_dpt::{Axis, Error, GridSpec, Lattice, Mat, Vector};
use proptest::prelude::*;

fn rel_change(a: Option<f64>, b: Option<f64>) -> f64 {
    let (a, b) = (a.unwrap(), b.unwrap());
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn dispersive_bounds_on_the_solver_corpus() {
    for case in common::corpus() {
        let flows: Vec<Flow> = [1, 2].iter().map(|&r| case.run(r)).collect();
        let mut reports: Vec<Vec<InequalityReport>> = Vec::new();
        for flow in &flows {
            let precis = check_precis(&mass_momentum_tensor(flow).unwrap()).unwrap();
            let estihp = check_estihp(flow, DEFAULT_BUDGET).unwrap();
            let inertia = check_inertia(flow, DEFAULT_BUDGET).unwrap();
            assert!(inertia.report.detail("alpha_limit_rate").unwrap() >= 0.95, "{}: {:?}", case.name, inertia.report);
            assert!(inertia.report.detail("alpha_worst_implied").unwrap() < DEFAULT_BUDGET);
            for r in [&precis, &estihp, &inertia.report] {
                assert!(r.passed, "{}: {r:?}", case.name);
                assert!(r.implied_constant.unwrap() < DEFAULT_BUDGET);
            }
            reports.push(vec![precis, estihp, inertia.report]);
        }
        for (coarse, fine) in reports[0].iter().zip(&reports[1]) {
            let change = rel_change(coarse.implied_constant, fine.implied_constant);
            assert!(change < 0.1, "{} {}: {change}", case.name, coarse.name);
        }
    }
}

#[test]
fn inertia_bound_needs_a_mono_atomic_gas() {
    let case = common::Case {
        name: "d1-diatomic",
        gas: Gas::new(1, 1.4, GasModel::Full).unwrap(),
        init: common::cos_bump(1.0, 0.0),
        domain: (-8.0, 8.0),
        n: 200,
        t_end: 1.0,
    };
    let flow = case.run(1);
    assert!(matches!(check_inertia(&flow, DEFAULT_BUDGET), Err(Error::NotMonoatomic { .. })));
    // the other two bounds do not depend on gamma
    assert!(check_estihp(&flow, DEFAULT_BUDGET).unwrap().passed);
    assert!(check_precis(&mass_momentum_tensor(&flow).unwrap()).unwrap().passed);
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

#[test]
fn kinetic_inertia_is_stable_under_particle_doubling() {
    let grid = GridSpec::uniform((0.0, 4.0), 40, &[(-4.0, 4.0)], &[80]).unwrap();
    let run = |nx: usize| {
        let phase = Lattice::new(vec![Axis::new(-2.5, 2.5, nx).unwrap(), Axis::new(-1.5, 1.5, 60).unwrap()]).unwrap();
        check_boltzmann_inertia(
            &ParticleState::from_density(&warm_beams(), 0.0, &phase).unwrap(),
            &grid,
            DEFAULT_BUDGET,
        )
        .unwrap()
    };
    let (a, b) = (run(150), run(300));
    assert!(a.passed && b.passed);
    assert!(rel_change(a.implied_constant, b.implied_constant) < 0.05, "{a:?} {b:?}");
}

#[test]
fn fi_ball_is_the_equality_case() {
    let r = check_fi_equality_case(2, 1.3).unwrap();
    assert!((r.ball.implied_constant.unwrap() - 0.5 / PI.sqrt()).abs() < 1e-12);
    assert!(r.ball_is_max);
    assert!(r.perturbed.iter().all(|(_, p)| p.passed));
    let r = check_fi_equality_case(3, 0.7).unwrap();
    assert!((r.ball.implied_constant.unwrap() - fi_ball_constant(3)).abs() < 1e-12);
    assert!(r.ball_is_max);
    // the ball constant is scale free
    let small = check_fi_shape(3, &FiShape::Ball { radius: 1e-3 }).unwrap();
    assert!((small.implied_constant.unwrap() - fi_ball_constant(3)).abs() < 1e-12);
}

#[test]
fn fi_holds_for_a_sampled_disc() {
    let g = GridSpec::uniform((-2.0, 2.0), 80, &[(-2.0, 2.0)], &[80]).unwrap();
    let s = SymTensorField::from_fn(&g, |z| {
        if z[0] * z[0] + z[1] * z[1] < 1.0 {
            Mat::identity(2, 2)
        } else {
            Mat::zeros(2, 2)
        }
    });
    let r = check_fi(&s).unwrap();
    assert!(r.passed, "{r:?}");
}

fn periodic_grid(n: usize, cells: usize) -> GridSpec {
    let a = Axis::periodic(0.0, 1.0, cells).unwrap();
    GridSpec::new(a.clone(), vec![a; n - 1]).unwrap()
}

#[test]
fn nonj_on_cofactor_hessians() {
    // det and cof are null Lagrangians: mean det = det mean, so n = 2 is an equality
    let g = periodic_grid(2, 64);
    let s = cofactor_hessian(&PeriodicPerturbed { n: 2, eps: 0.01, period: 1.0 }, &g).unwrap().field;
    let r = check_nonj(&s, 1e-8).unwrap();
    assert!(r.report.passed);
    assert!(r.report.detail("margin").unwrap().abs() < 1e-10);
    assert!(r.jensen_lhs <= r.jensen_rhs * (1.0 + 1e-12));

    let g = periodic_grid(3, 24);
    let s = cofactor_hessian(&PeriodicPerturbed { n: 3, eps: 0.008, period: 1.0 }, &g).unwrap().field;
    let r = check_nonj(&s, 1e-8).unwrap();
    assert!(r.report.passed);
    assert!(r.report.detail("margin").unwrap() > 0.0);
}

/// `diag(a_1, ..., a_n)` with `a_i` independent of `z_i`.
fn diagonal_tensor(g: &GridSpec, eps: f64) -> SymTensorField {
    let n = g.n();
    SymTensorField::from_fn(g, |z| {
        let diag = (0..n).map(|i| {
            let others: f64 =
                (0..n).filter(|&j| j != i).map(|j| (2.0 * PI * (z[j] + 0.1 * (i + j) as f64)).sin()).sum();
            1.0 + eps * others
        });
        Mat::from_diagonal(&Vector::from_iterator(n, diag))
    })
}

#[test]
fn nonj_on_diagonal_tensors() {
    let g = periodic_grid(3, 24);
    for eps in [0.05, 0.2, 0.4] {
        let r = check_nonj(&diagonal_tensor(&g, eps), 1e-12).unwrap();
        assert!(r.report.passed, "{r:?}");
        assert!(r.report.detail("margin").unwrap() > 0.0);
    }
    // a tensor that is not divergence free is refused
    let bad = SymTensorField::from_fn(&g, |z| Mat::identity(3, 3) * (1.5 + (2.0 * PI * z[0]).sin()));
    assert!(matches!(check_nonj(&bad, 1e-6), Err(Error::DivergenceCheck { .. })));
    let open = GridSpec::uniform((0.0, 1.0), 8, &[(0.0, 1.0)], &[8]).unwrap();
    assert!(check_nonj(&SymTensorField::zeros(open), 1e-6).is_err());
}

fn line(lo: f64, hi: f64, n: usize) -> Lattice {
    common::line(lo, hi, n)
}

#[test]
fn uncert_closed_forms() {
    // indicator of [-1, 1]: 32 against (8/3) * 2
    let space = line(-3.0, 3.0, 300);
    let g: Vec<f64> = (0..300).map(|c| if space.center(c)[0].abs() < 1.0 { 1.0 } else { 0.0 }).collect();
    let r = check_uncert(&space, &g, DEFAULT_BUDGET).unwrap();
    assert!((r.report.lhs - 32.0).abs() < 1e-8);
    assert!((r.report.detail("pair_integral").unwrap() - 8.0 / 3.0).abs() < 1e-8);
    assert!((r.report.detail("power_integral").unwrap() - 2.0).abs() < 1e-8);
    assert!((r.report.implied_constant.unwrap() - 6.0).abs() < 1e-8);
    assert!(r.two_term_holds);

    // (1 - x^2)_+ : (4/3)^5 against (32/45) (32/35), ratio 1575/243
    let n = 8000;
    let space = line(-1.0, 1.0, n);
    let g: Vec<f64> = (0..n).map(|c| 1.0 - space.center(c)[0].powi(2)).collect();
    let r = check_uncert(&space, &g, DEFAULT_BUDGET).unwrap();
    assert!((r.report.implied_constant.unwrap() - 1575.0 / 243.0).abs() < 1e-5);
    assert!(r.report.passed && r.two_term_holds);
}

#[test]
fn uncert_in_two_dimensions() {
    let n = 60;
    let space = Lattice::new(vec![Axis::new(-1.5, 1.5, n).unwrap(); 2]).unwrap();
    let g: Vec<f64> = (0..space.len())
        .map(|c| {
            let x = space.center(c);
            (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)
        })
        .collect();
    let r = check_uncert(&space, &g, DEFAULT_BUDGET).unwrap();
    assert!(r.report.passed && r.two_term_holds, "{r:?}");
    let pm = pair_moments(&space, &g);
    assert!((pm.double_integral - pm.center_of_mass_form).abs() < 1e-10 * pm.double_integral);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn uncert_is_translation_and_scale_invariant(
        g in prop::collection::vec(0.0f64..2.0, 12..40),
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
        amplitude in 0.1f64..10.0,
    ) {
        prop_assume!(g.iter().any(|v| *v > 0.1));
        let n = g.len();
        let base = Axis::new(-1.0, 1.0, n).unwrap();
        let r0 = check_uncert(&Lattice::new(vec![base.clone()]).unwrap(), &g, DEFAULT_BUDGET).unwrap();
        prop_assert!(r0.two_term_holds);
        prop_assert!(r0.report.passed);

        let moved = Lattice::new(vec![base.shifted(shift)]).unwrap();
        let r1 = check_uncert(&moved, &g, DEFAULT_BUDGET).unwrap();
        let c0 = r0.report.implied_constant.unwrap();
        prop_assert!((r1.report.implied_constant.unwrap() - c0).abs() <= 1e-10 * c0);

        let scaled = Lattice::new(vec![base.scaled(scale)]).unwrap();
        let gs: Vec<f64> = g.iter().map(|v| amplitude * v).collect();
        let r2 = check_uncert(&scaled, &gs, DEFAULT_BUDGET).unwrap();
        prop_assert!((r2.report.implied_constant.unwrap() - c0).abs() <= 1e-8 * c0);
    }
}

#[test]
fn reports_serialize_to_csv() {
    let r = check_fi_shape(2, &FiShape::Ball { radius: 1.0 }).unwrap().with("refinement_slope", 1.5);
    let mut out = Vec::new();
    write_csv(&[r], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), InequalityReport::CSV_HEADER);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "fi");
    assert_eq!(row[5], "true");
    assert_eq!(row[6].parse::<f64>().unwrap(), 1.5);
}
