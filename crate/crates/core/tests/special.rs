use projective_dpt::linalg::{self, Mat};
use projective_dpt::projective::{push_forward_value, ProjectiveMap};
use projective_dpt::special::{
    convexity_certificate, determinantal_mass, euler_identity_residual, hessian, transform_potential, transformed_base,
    CofactorHessian, ExpCosh, FnTheta, HomogeneousPotential, NormCone, Quartic, Theta,
};
use projective_dpt::tensor_field::TensorSource;
use projective_dpt::GridSpec;
use proptest::prelude::*;

fn close(a: &Mat, b: &Mat, rel: f64) -> bool {
    (a - b).amax() <= rel * a.amax().max(b.amax()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// `cof D^2` of the transformed potential is the push-forward of `cof D^2`.
    #[test]
    fn cofactor_commutes_with_the_map(alpha in -1.0f64..2.0, t in 0.0f64..0.9, x in -1.5f64..1.5) {
        let map = ProjectiveMap::new(alpha).unwrap();
        let p = [t, x];
        let q = map.forward(&p).unwrap();
        let grid = GridSpec::uniform((q[0], q[0] + 1e-3), 2, &[(q[1], q[1] + 1e-3)], &[2]).unwrap();
        for theta in [Box::new(ExpCosh) as Box<dyn Theta + Send>, Box::new(Quartic { n: 2 })] {
            let s = CofactorHessian { theta: &theta }.eval(&p).unwrap();
            let (_, pushed) = push_forward_value(&map, &p, &s).unwrap();
            let tp = transform_potential(&theta, &map, &grid).unwrap();
            let direct = CofactorHessian { theta: &tp }.eval(&q).unwrap();
            prop_assert!(close(&pushed, &direct, 1e-10), "{pushed} vs {direct}");
        }
    }

    /// Analytic chain-rule Hessian agrees with finite differences of the value.
    #[test]
    fn transformed_hessian_matches_differences(alpha in -0.5f64..1.5, s in 0.1f64..0.6, y in -1.0f64..1.0) {
        let map = ProjectiveMap::new(alpha).unwrap();
        let grid = GridSpec::uniform((0.0, 0.6), 2, &[(-1.0, 1.0)], &[2]).unwrap();
        let tp = transform_potential(ExpCosh, &map, &grid).unwrap();
        let fd = FnTheta::new(2, |z: &[f64]| tp.value(z));
        let (a, b) = (hessian(&tp, &[s, y]), hessian(&fd, &[s, y]));
        prop_assert!(close(&a, &b, 1e-6), "{a} vs {b}");
    }

    /// Degree-one homogeneity about the base survives the map, at the image base.
    #[test]
    fn homogeneity_moves_with_the_base(alpha in -0.5f64..1.5, t0 in 0.0f64..1.0, x0 in -1.0f64..1.0) {
        let map = ProjectiveMap::new(alpha).unwrap();
        let base = vec![t0, x0];
        let nb = transformed_base(&map, &base).unwrap();
        let grid = GridSpec::uniform((nb[0] - 0.05, nb[0] + 0.05), 2, &[(nb[1] - 0.05, nb[1] + 0.05)], &[2]).unwrap();
        prop_assume!(map.inverse().check_grid(&grid).is_ok());
        let tp = transform_potential(NormCone { c: 1.0, base: base.clone() }, &map, &grid).unwrap();
        prop_assert!(euler_identity_residual(&tp, &nb, 0.03) < 1e-9);
    }
}

#[test]
fn cone_mass_scales_with_the_factor() {
    let base = vec![0.5, 0.2];
    let cone = HomogeneousPotential::new(NormCone { c: 1.0, base: base.clone() }, base.clone(), 0.25, 1e-12).unwrap();
    let dm = determinantal_mass(&cone, 4096).unwrap();
    assert!(dm.simple);
    assert!((dm.value - std::f64::consts::PI).abs() < 1e-5, "{}", dm.value);

    for alpha in [-0.8, 0.5, 2.0] {
        let map = ProjectiveMap::new(alpha).unwrap();
        let nb = transformed_base(&map, &base).unwrap();
        let grid = GridSpec::uniform((nb[0] - 0.1, nb[0] + 0.1), 2, &[(nb[1] - 0.1, nb[1] + 0.1)], &[2]).unwrap();
        let tp = transform_potential(NormCone { c: 1.0, base: base.clone() }, &map, &grid).unwrap();
        let radius = 0.05 / map.factor(base[0]);
        let pot = HomogeneousPotential::new(tp, nb, radius, 1e-9).unwrap();
        let m = determinantal_mass(&pot, 4096).unwrap();
        let expected = map.factor(base[0]) * dm.value;
        assert!((m.value - expected).abs() < 1e-6 * expected, "alpha {alpha}: {} vs {expected}", m.value);
    }
}

#[test]
fn convexity_is_certified_and_refuted() {
    let grid = GridSpec::uniform((-1.0, 1.0), 8, &[(-1.0, 1.0)], &[8]).unwrap();
    assert!(convexity_certificate(&ExpCosh, &grid).is_convex());
    let map = ProjectiveMap::new(0.5).unwrap();
    let tp =
        transform_potential(ExpCosh, &map, &GridSpec::uniform((0.0, 1.0), 8, &[(-1.0, 1.0)], &[8]).unwrap()).unwrap();
    assert!(convexity_certificate(&tp, &GridSpec::uniform((0.0, 1.0), 8, &[(-1.0, 1.0)], &[8]).unwrap()).is_convex());

    let saddle = FnTheta::new(2, |z: &[f64]| z[0] * z[0] - z[1] * z[1]);
    let cert = convexity_certificate(&saddle, &grid);
    assert_eq!(cert.violations, cert.samples);
    assert!(linalg::min_eigenvalue(&hessian(&saddle, &[0.0, 0.0])) < -1.0);
}
