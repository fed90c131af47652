use projective_dpt::linalg::{self, Mat};
use projective_dpt::projective::{
    congruence_value, determinantal_mass_scale, push_forward, push_forward_value, transform_residual_value,
    GeneralLinearAction, ProjectiveMap,
};
use projective_dpt::tensor_field::{discrete_divergence, AnalyticTensor, SymTensorField};
use projective_dpt::GridSpec;
use proptest::prelude::*;

/// Symmetric positive definite matrix `B B^T + eps I` from packed entries.
fn spd(n: usize, entries: &[f64]) -> Mat {
    let b = Mat::from_fn(n, n, |i, j| entries[(i * n + j) % entries.len()]);
    &b * b.transpose() + Mat::identity(n, n) * 0.1
}

fn max_abs(m: &Mat) -> f64 {
    m.amax().max(1.0)
}

/// A space-time point with `1 + alpha t > 0.2`.
fn admissible() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (-2.0f64..2.0, 1usize..=3).prop_flat_map(|(alpha, n)| {
        let t = if alpha >= 0.0 { 0.0..3.0 } else { 0.0..(0.8 / -alpha).min(3.0) };
        (Just(alpha), (t, prop::collection::vec(-2.0f64..2.0, n - 1))).prop_map(|(a, (t, x))| {
            let mut p = vec![t];
            p.extend(x);
            (a, p)
        })
    })
}

proptest! {
    #[test]
    fn blockwise_formula_equals_congruence((alpha, p) in admissible(), e in prop::collection::vec(-1.0f64..1.0, 9)) {
        let map = ProjectiveMap::new(alpha).unwrap();
        let s = spd(p.len(), &e);
        let (q1, a) = push_forward_value(&map, &p, &s).unwrap();
        let (q2, b) = congruence_value(&map, &p, &s).unwrap();
        prop_assert_eq!(q1, q2);
        prop_assert!((&a - &b).amax() <= 1e-12 * max_abs(&a), "{a} vs {b}");
    }

    #[test]
    fn positivity_is_preserved((alpha, p) in admissible(), e in prop::collection::vec(-1.0f64..1.0, 9)) {
        let map = ProjectiveMap::new(alpha).unwrap();
        let (_, sb) = push_forward_value(&map, &p, &spd(p.len(), &e)).unwrap();
        prop_assert!(linalg::min_eigenvalue(&sb) > 0.0);
    }

    #[test]
    fn maps_compose_additively(a in -1.0f64..1.0, b in -1.0f64..1.0, t in 0.0f64..0.3, x in -2.0f64..2.0) {
        let (ma, mb) = (ProjectiveMap::new(a).unwrap(), ProjectiveMap::new(b).unwrap());
        let mab = ProjectiveMap::new(a + b).unwrap();
        let p = [t, x];
        let via = mb.forward(&ma.forward(&p).unwrap()).unwrap();
        let direct = mab.forward(&p).unwrap();
        prop_assert!((via[0] - direct[0]).abs() < 1e-12 && (via[1] - direct[1]).abs() < 1e-12);
        let back = ma.backward(&ma.forward(&p).unwrap()).unwrap();
        prop_assert!((back[0] - t).abs() < 1e-12 && (back[1] - x).abs() < 1e-12);

        // the tensor transform is a group action as well
        let s = spd(2, &[0.3, -0.7, 0.2, 0.9]);
        let (q, s1) = push_forward_value(&ma, &p, &s).unwrap();
        let (_, s2) = push_forward_value(&mb, &q, &s1).unwrap();
        let (_, s3) = push_forward_value(&mab, &p, &s).unwrap();
        prop_assert!((&s2 - &s3).amax() <= 1e-11 * max_abs(&s3));
    }

    #[test]
    fn matrix_realizes_the_point_map((alpha, p) in admissible()) {
        let map = ProjectiveMap::new(alpha).unwrap();
        let g = GeneralLinearAction::from_map(&map, p.len() - 1);
        prop_assert_eq!(g.det(), 1.0);
        let y = g.map_point(&p).unwrap();
        let direct = map.forward(&p).unwrap();
        for (u, v) in y.iter().zip(&direct) {
            prop_assert!((u - v).abs() < 1e-12);
        }
        let back = g.preimage_point(&y).unwrap();
        for (u, v) in back.iter().zip(&p) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_mass_row_scales_by_jacobian((alpha, p) in admissible(), r in prop::collection::vec(-1.0f64..1.0, 4)) {
        let map = ProjectiveMap::new(alpha).unwrap();
        let r = &r[..p.len()];
        let out = transform_residual_value(&map, &p, r).unwrap();
        let l = map.factor(p[0]);
        prop_assert!((out[0] - l.powi(p.len() as i32 + 1) * r[0]).abs() < 1e-12 * out[0].abs().max(1.0));
    }
}

#[test]
fn degenerate_times_are_rejected() {
    let map = ProjectiveMap::new(-1.0).unwrap();
    assert!(push_forward_value(&map, &[1.0, 0.0], &Mat::identity(2, 2)).is_err());
    assert!(push_forward_value(&map, &[2.0, 0.0], &Mat::identity(2, 2)).is_err());
    assert!(ProjectiveMap::new(f64::NAN).is_err());
    assert!(determinantal_mass_scale(1.0, 1.5, &map).is_err());
    assert_eq!(determinantal_mass_scale(2.0, 0.5, &map).unwrap(), 1.0);
}

#[test]
fn sampled_transform_keeps_divergence_small() {
    // pressureless free streaming rho = 1/(1+t), u = x/(1+t), plus the identity
    let src = AnalyticTensor::new(2, |p: &[f64]| {
        let l = 1.0 + p[0];
        let m = p[1] / (l * l);
        Mat::from_row_slice(2, 2, &[1.0 / l + 1.0, m, m, p[1] * p[1] / (l * l * l) + 1.0])
    });
    let mut prev = f64::INFINITY;
    for n in [32, 64, 128] {
        let grid = GridSpec::uniform((0.0, 1.0), n, &[(-1.0, 1.0)], &[n]).unwrap();
        let s = SymTensorField::sample(&grid, &src).unwrap();
        let sb = push_forward(&s, &ProjectiveMap::new(0.7).unwrap()).unwrap();
        let div = discrete_divergence(&sb).unwrap().measure_norm().value();
        assert!(div < prev / 2.0, "n = {n}: {div} vs {prev}");
        prev = div;
    }
    assert!(prev < 1e-2, "{prev}");
}
