//! Multilinear interpolation of cell-centered data.

use crate::error::{Error, Result};
use crate::grid::Lattice;

/// Relative slack allowed when a query point sits on the domain boundary.
const EDGE_SLACK: f64 = 1e-9;

/// Interpolates `ncomp` interleaved components stored per cell of `lattice`
/// at the point `p`, writing into `out`.
///
/// Between the outermost cell centers and the domain edge the boundary
/// segment is extended linearly. Periodic axes wrap.
pub fn interpolate(lattice: &Lattice, data: &[f64], ncomp: usize, p: &[f64], out: &mut [f64]) -> Result<()> {
    let ndim = lattice.ndim();
    debug_assert_eq!(p.len(), ndim);
    debug_assert_eq!(out.len(), ncomp);

    // per axis: two neighbouring indices and weights
    let mut lo_idx = [0usize; 8];
    let mut hi_idx = [0usize; 8];
    let mut frac = [0.0f64; 8];
    assert!(ndim <= 8, "interpolation supports at most 8 axes");

    for k in 0..ndim {
        let a = lattice.axis(k);
        let h = a.width();
        let mut x = p[k];
        if a.periodic {
            x = a.lo + (x - a.lo).rem_euclid(a.length());
            let u = (x - a.lo) / h - 0.5;
            let i0 = u.floor();
            frac[k] = u - i0;
            let i0 = i0 as isize;
            lo_idx[k] = i0.rem_euclid(a.n as isize) as usize;
            hi_idx[k] = (i0 + 1).rem_euclid(a.n as isize) as usize;
        } else {
            let slack = EDGE_SLACK * a.length();
            if !(x >= a.lo - slack && x <= a.hi + slack) {
                return Err(Error::OutOfDomain { point: p.to_vec() });
            }
            x = x.clamp(a.lo, a.hi);
            let u = (x - a.lo) / h - 0.5;
            let i0 = (u.floor() as isize).clamp(0, a.n as isize - 2) as usize;
            lo_idx[k] = i0;
            hi_idx[k] = i0 + 1;
            frac[k] = u - i0 as f64;
        }
    }

    out.iter_mut().for_each(|v| *v = 0.0);
    for corner in 0..(1usize << ndim) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for k in 0..ndim {
            let n = lattice.axis(k).n;
            let (i, wk) = if corner >> k & 1 == 1 { (hi_idx[k], frac[k]) } else { (lo_idx[k], 1.0 - frac[k]) };
            w *= wk;
            flat = flat * n + i;
        }
        if w == 0.0 {
            continue;
        }
        let cell = &data[flat * ncomp..(flat + 1) * ncomp];
        for (o, &c) in out.iter_mut().zip(cell) {
            *o += w * c;
        }
    }
    Ok(())
}

/// Partial derivative along `axis` of component `comp` at cell `flat`:
/// central differences inside, first-order one-sided at non-periodic edges.
pub fn axis_derivative(lattice: &Lattice, data: &[f64], ncomp: usize, comp: usize, axis: usize, flat: usize) -> f64 {
    let a = lattice.axis(axis);
    let h = a.width();
    let stride = lattice.stride(axis);
    let i = (flat / stride) % a.n;
    let at = |f: usize| data[f * ncomp + comp];
    if a.periodic {
        let next = if i + 1 == a.n { flat + stride - a.n * stride } else { flat + stride };
        let prev = if i == 0 { flat + (a.n - 1) * stride } else { flat - stride };
        (at(next) - at(prev)) / (2.0 * h)
    } else if i == 0 {
        (at(flat + stride) - at(flat)) / h
    } else if i + 1 == a.n {
        (at(flat) - at(flat - stride)) / h
    } else {
        (at(flat + stride) - at(flat - stride)) / (2.0 * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn lattice2() -> Lattice {
        Lattice::new(vec![Axis::new(0.0, 1.0, 5).unwrap(), Axis::new(-1.0, 2.0, 7).unwrap()]).unwrap()
    }

    #[test]
    fn affine_data_is_reproduced_everywhere() {
        let l = lattice2();
        let f = |p: &[f64]| 3.0 * p[0] - 2.0 * p[1] + 0.5;
        let data: Vec<f64> = (0..l.len()).map(|c| f(&l.center(c))).collect();
        for p in [[0.0, -1.0], [1.0, 2.0], [0.37, 0.11], [0.05, 1.99]] {
            let mut out = [0.0];
            interpolate(&l, &data, 1, &p, &mut out).unwrap();
            assert!((out[0] - f(&p)).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        let l = lattice2();
        let data = vec![0.0; l.len()];
        let mut out = [0.0];
        assert!(interpolate(&l, &data, 1, &[1.2, 0.0], &mut out).is_err());
    }

    #[test]
    fn periodic_axis_wraps() {
        let l = Lattice::new(vec![Axis::periodic(0.0, 1.0, 8).unwrap()]).unwrap();
        let data: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let mut a = [0.0];
        let mut b = [0.0];
        interpolate(&l, &data, 1, &[0.02], &mut a).unwrap();
        interpolate(&l, &data, 1, &[1.02], &mut b).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12);
    }

    #[test]
    fn derivatives_exact_on_affine() {
        let l = lattice2();
        let data: Vec<f64> = (0..l.len())
            .map(|c| {
                let p = l.center(c);
                4.0 * p[0] + p[1]
            })
            .collect();
        for c in 0..l.len() {
            assert!((axis_derivative(&l, &data, 1, 0, 0, c) - 4.0).abs() < 1e-10);
            assert!((axis_derivative(&l, &data, 1, 0, 1, c) - 1.0).abs() < 1e-10);
        }
    }
}
