//! Small dense linear algebra on symmetric matrices.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Number of stored entries of an `n x n` symmetric matrix.
#[inline]
pub const fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(i, j)` with `i <= j` in the packed upper triangle.
#[inline]
pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

pub fn pack_into(m: &Mat, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            out[k] = 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
}

pub fn unpack(n: usize, packed: &[f64]) -> Mat {
    let mut m = Mat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = packed[k];
            m[(j, i)] = packed[k];
            k += 1;
        }
    }
    m
}

/// Cofactor matrix, `cof(A)_{ij} = (-1)^{i+j} det(minor_{ij})`.
///
/// Satisfies `cof(A) * A^T = det(A) I` and `cof(AB) = cof(A) cof(B)`.
pub fn cofactor(a: &Mat) -> Mat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cofactor of a non-square matrix");
    match n {
        0 => Mat::zeros(0, 0),
        1 => Mat::from_element(1, 1, 1.0),
        2 => Mat::from_row_slice(2, 2, &[a[(1, 1)], -a[(1, 0)], -a[(0, 1)], a[(0, 0)]]),
        _ => Mat::from_fn(n, n, |i, j| {
            let minor = a.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        }),
    }
}

/// Smallest eigenvalue of a symmetric matrix and its unit eigenvector.
pub fn min_eigenpair(a: &Mat) -> (f64, Vector) {
    let eig = a.clone().symmetric_eigen();
    let (k, &lambda) = eig.eigenvalues.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("empty matrix");
    (lambda, eig.eigenvectors.column(k).into_owned())
}

pub fn min_eigenvalue(a: &Mat) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)];
    }
    a.clone().symmetric_eigen().eigenvalues.min()
}

pub fn eigenvalues(a: &Mat) -> Vector {
    a.clone().symmetric_eigen().eigenvalues
}

/// Relative asymmetry `max|A - A^T| / max(1, max|A|)`.
pub fn asymmetry(a: &Mat) -> f64 {
    let scale = a.amax().max(1.0);
    (a - a.transpose()).amax() / scale
}

pub fn outer(u: &[f64], v: &[f64]) -> Mat {
    Mat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
}

/// `(1, v)` as a column vector.
pub fn augmented(v: &[f64]) -> Vector {
    let mut w = Vector::zeros(v.len() + 1);
    w[0] = 1.0;
    for (k, &x) in v.iter().enumerate() {
        w[k + 1] = x;
    }
    w
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|S^{k}|`, the area of the unit sphere in `R^{k+1}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    let m = (k + 1) as f64;
    2.0 * std::f64::consts::PI.powf(m / 2.0) / gamma_fn(m / 2.0)
}

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    let m = k as f64;
    std::f64::consts::PI.powf(m / 2.0) / gamma_fn(m / 2.0 + 1.0)
}

/// Gamma function at positive half-integers and integers (the only arguments needed here).
fn gamma_fn(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    assert!((2.0 * x - twice).abs() < 1e-12 && x > 0.0, "gamma_fn needs a positive half-integer");
    let mut acc;
    let mut y;
    if twice as i64 % 2 == 0 {
        acc = 1.0;
        y = 1.0;
    } else {
        acc = std::f64::consts::PI.sqrt();
        y = 0.5;
    }
    while y < x - 1e-12 {
        acc *= y;
        y += 1.0;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn packing_roundtrip() {
        let m = Mat::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let mut p = vec![0.0; packed_len(3)];
        pack_into(&m, &mut p);
        assert_eq!(p, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unpack(3, &p), m);
        assert_eq!(packed_index(3, 2, 1), 4);
    }

    #[test]
    fn sphere_and_ball_measures() {
        use std::f64::consts::PI;
        assert_relative_eq!(unit_sphere_area(1), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(2), 4.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(unit_ball_volume(2), PI, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-13);
        assert_relative_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-14);
    }

    fn mat(n: usize) -> impl Strategy<Value = Mat> {
        proptest::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| Mat::from_row_slice(n, n, &v))
    }

    proptest! {
        #[test]
        fn cofactor_is_multiplicative_2x2(a in mat(2), b in mat(2)) {
            let lhs = cofactor(&(&a * &b));
            let rhs = cofactor(&a) * cofactor(&b);
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn cofactor_is_multiplicative_3x3(a in mat(3), b in mat(3)) {
            let lhs = cofactor(&(&a * &b));
            let rhs = cofactor(&a) * cofactor(&b);
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn cofactor_times_transpose_is_det(a in mat(3)) {
            let prod = cofactor(&a) * a.transpose();
            let expected = Mat::identity(3, 3) * a.determinant();
            prop_assert!((prod - expected).amax() < 1e-10);
        }
    }
}
