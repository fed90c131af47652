//! Action of `GL_{n+1}` (and its projective quotient) on `n x n`
//! divergence-free tensors, via homogeneous extension to a cone in
//! `R^{n+1}`, congruence, and restriction to the slice `lambda = 1`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec};
use crate::interp::axis_derivative;
use crate::linalg::{self, packed_len, Mat, Vector};
use crate::tensor_field::{SymTensorField, TensorSource};

use super::ProjectiveMap;

/// A symmetric `(n+1) x (n+1)` tensor on the cone `lambda > 0` of `R^{n+1}`.
pub trait ConeTensor: Sync {
    /// Dimension `n` of the slice; matrices are `(n+1) x (n+1)`.
    fn n(&self) -> usize;
    fn eval(&self, w: &[f64]) -> Result<Mat>;
}

/// `Xi(lambda, z) = lambda^{-n-1} diag(0, S(z / lambda))`.
pub struct Lift<S> {
    pub source: S,
}

pub fn lift<S: TensorSource>(source: S) -> Lift<S> {
    Lift { source }
}

impl<S: TensorSource> ConeTensor for Lift<S> {
    fn n(&self) -> usize {
        self.source.dim()
    }

    fn eval(&self, w: &[f64]) -> Result<Mat> {
        let lambda = w[0];
        if !(lambda > 0.0) {
            return Err(Error::OutsideCone { lambda });
        }
        let n = self.n();
        let x: Vec<f64> = w[1..].iter().map(|z| z / lambda).collect();
        let s = self.source.eval(&x)?;
        let mut out = Mat::zeros(n + 1, n + 1);
        out.view_mut((1, 1), (n, n)).copy_from(&(s * lambda.powi(-(n as i32) - 1)));
        Ok(out)
    }
}

/// An invertible `(n+1) x (n+1)` matrix together with its congruence
/// normalization `(det P)^{-1} |det P|^{-2/(n+1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralLinearAction {
    p: Mat,
    p_inv: Mat,
    det: f64,
}

impl GeneralLinearAction {
    pub fn new(p: Mat) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() < 2 {
            return Err(Error::InvalidInput("action matrix must be square of size n+1 >= 2".into()));
        }
        let det = p.determinant();
        let scale = p.amax().powi(p.nrows() as i32);
        if !(det.abs() > 1e-14 * scale) || !det.is_finite() {
            return Err(Error::SingularMatrix { det });
        }
        let p_inv = p.clone().try_inverse().ok_or(Error::SingularMatrix { det })?;
        Ok(Self { p, p_inv, det })
    }

    /// The matrix realizing the projective map of `map` in spatial dimension `d`.
    pub fn from_map(map: &ProjectiveMap, d: usize) -> Self {
        Self::new(map.matrix(d)).expect("unit determinant")
    }

    pub fn matrix(&self) -> &Mat {
        &self.p
    }

    pub fn inverse_matrix(&self) -> &Mat {
        &self.p_inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Slice dimension `n`.
    pub fn n(&self) -> usize {
        self.p.nrows() - 1
    }

    /// `(det P)^{-1} |det P|^{-2/(n+1)}`. Negative when `det P < 0`.
    pub fn normalization(&self) -> f64 {
        self.det.recip() * self.det.abs().powf(-2.0 / (self.n() + 1) as f64)
    }

    /// True for `det P < 0`. The normalization is then negative, so the
    /// action maps positive tensors to negative ones.
    pub fn reverses_orientation(&self) -> bool {
        self.det < 0.0
    }

    /// `self * other`: acting by the result equals acting by `other`, then `self`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::new(&self.p * &other.p)
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(&self.p * a)
    }

    /// Induced point map on the slice: `x -> y` with `P (1, x) ~ (1, y)`.
    pub fn map_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        dehomogenize(&(&self.p * linalg::augmented(x)))
    }

    /// Inverse of [`map_point`](Self::map_point).
    pub fn preimage_point(&self, y: &[f64]) -> Result<Vec<f64>> {
        dehomogenize(&(&self.p_inv * linalg::augmented(y)))
    }
}

fn dehomogenize(w: &Vector) -> Result<Vec<f64>> {
    let lambda = w[0];
    if !(lambda > 0.0) {
        return Err(Error::OutsideCone { lambda });
    }
    Ok(w.iter().skip(1).map(|z| z / lambda).collect())
}

/// `Sigma(w) = c P Xi(P^{-1} w) P^T`.
pub struct Congruence<C> {
    pub inner: C,
    pub action: GeneralLinearAction,
}

impl<C: ConeTensor> ConeTensor for Congruence<C> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn eval(&self, w: &[f64]) -> Result<Mat> {
        let v = &self.action.p_inv * Vector::from_column_slice(w);
        let xi = self.inner.eval(v.as_slice())?;
        Ok(&self.action.p * xi * self.action.p.transpose() * self.action.normalization())
    }
}

/// `R Sigma(1, x) R^T` with `R = [-x | I_n]`, i.e.
/// `H - x Z^T - Z x^T + h x x^T`.
pub fn restrict_value(sigma: &Mat, x: &[f64]) -> Mat {
    let n = x.len();
    let mut r = Mat::zeros(n, n + 1);
    for i in 0..n {
        r[(i, 0)] = -x[i];
        r[(i, i + 1)] = 1.0;
    }
    &r * sigma * r.transpose()
}

/// The action of a matrix on a tensor source, evaluated lazily.
pub struct GroupAction<S> {
    cone: Congruence<Lift<S>>,
}

impl<S: TensorSource> GroupAction<S> {
    pub fn new(source: S, action: GeneralLinearAction) -> Result<Self> {
        if action.n() != source.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim() + 1, found: action.n() + 1 });
        }
        Ok(Self { cone: Congruence { inner: lift(source), action } })
    }
}

impl<S: TensorSource> TensorSource for GroupAction<S> {
    fn dim(&self) -> usize {
        self.cone.n()
    }

    fn eval(&self, x: &[f64]) -> Result<Mat> {
        let sigma = self.cone.eval(linalg::augmented(x).as_slice())?;
        Ok(restrict_value(&sigma, x))
    }
}

/// The blocks `h`, `Z`, `H` of a homogeneous cone tensor on the slice
/// `lambda = 1`, sampled at the cells of `grid`.
#[derive(Clone, Debug)]
pub struct HomogeneousBlocks {
    grid: GridSpec,
    /// Packed `(n+1) x (n+1)` matrix `Sigma(1, x)` per cell.
    data: Vec<f64>,
}

impl HomogeneousBlocks {
    pub fn sample<C: ConeTensor>(cone: &C, grid: &GridSpec) -> Result<Self> {
        let n = grid.n();
        if cone.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: cone.n() });
        }
        let p = packed_len(n + 1);
        let mut data = vec![0.0; grid.len() * p];
        data.par_chunks_mut(p).enumerate().try_for_each(|(c, out)| {
            let w = linalg::augmented(&grid.center(c));
            linalg::pack_into(&cone.eval(w.as_slice())?, out);
            Ok::<(), Error>(())
        })?;
        Ok(Self { grid: grid.clone(), data })
    }

    /// Builds blocks from explicit per-cell values.
    pub fn from_parts(grid: &GridSpec, h: &[f64], z: &[Vec<f64>], hh: &[Mat]) -> Result<Self> {
        let n = grid.n();
        let len = grid.len();
        if h.len() != len || z.len() != len || hh.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: h.len().min(z.len()).min(hh.len()) });
        }
        let p = packed_len(n + 1);
        let mut data = vec![0.0; len * p];
        for c in 0..len {
            let mut m = Mat::zeros(n + 1, n + 1);
            m[(0, 0)] = h[c];
            for i in 0..n {
                m[(0, i + 1)] = z[c][i];
                m[(i + 1, 0)] = z[c][i];
            }
            m.view_mut((1, 1), (n, n)).copy_from(&hh[c]);
            linalg::pack_into(&m, &mut data[c * p..(c + 1) * p]);
        }
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The assembled `[[h, Z^T], [Z, H]]` at cell `c`.
    pub fn assembled(&self, c: usize) -> Mat {
        let p = packed_len(self.grid.n() + 1);
        linalg::unpack(self.grid.n() + 1, &self.data[c * p..(c + 1) * p])
    }

    /// Residuals of the slice form of `Div Sigma = 0`:
    /// `div Z = x.grad h + (n+1) h` and `Div H = (x.grad) Z + (n+1) Z`.
    pub fn divergence_check(&self) -> DivergenceCheck {
        let g = &self.grid;
        let n = g.n();
        let np = n as f64 + 1.0;
        let p = packed_len(n + 1);
        let lat = g.lattice();
        let comp = |i: usize, j: usize| linalg::packed_index(n + 1, i, j);
        let (residual, scale) = crate::stats::ordered_sum2((0..g.len()).into_par_iter().map(|c| {
            let x = g.center(c);
            let d = |i: usize, j: usize, axis: usize| axis_derivative(lat, &self.data, p, comp(i, j), axis, c);
            let val = |i: usize, j: usize| self.data[c * p + comp(i, j)];
            let mut res = 0.0;
            let mut sc = 0.0;
            // rows i = 0 (h-equation) and i = 1..=n (H-equation)
            for i in 0..=n {
                let div: f64 = (0..n).map(|k| d(i, k + 1, k)).sum();
                let transport: f64 = (0..n).map(|k| x[k] * d(i, 0, k)).sum();
                let zero_order = np * val(i, 0);
                res += (div - transport - zero_order).abs();
                sc += div.abs() + transport.abs() + zero_order.abs();
            }
            (res, sc)
        }));
        let vol = g.cell_volume();
        DivergenceCheck { residual: residual * vol, scale: scale * vol }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DivergenceCheck {
    /// L1 norm of the residuals.
    pub residual: f64,
    /// L1 norm of the individual terms, for normalization.
    pub scale: f64,
}

impl DivergenceCheck {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            0.0
        }
    }
}

/// Restriction `H~ = H - x Z^T - Z x^T + h x x^T` of sampled blocks.
///
/// With `tolerance = Some(tol)` the blocks must first pass their own
/// divergence check at relative level `tol`.
pub fn restrict(blocks: &HomogeneousBlocks, tolerance: Option<f64>) -> Result<SymTensorField> {
    if let Some(tol) = tolerance {
        let check = blocks.divergence_check();
        if check.relative() > tol {
            return Err(Error::DivergenceCheck { residual: check.relative(), tolerance: tol });
        }
    }
    let g = blocks.grid();
    let n = g.n();
    let p = packed_len(n);
    let mut data = vec![0.0; g.len() * p];
    data.par_chunks_mut(p).enumerate().for_each(|(c, out)| {
        linalg::pack_into(&restrict_value(&blocks.assembled(c), &g.center(c)), out);
    });
    SymTensorField::from_packed(g.clone(), data)
}

/// Lift, congruence by `action`, and restriction, sampled on `out`.
pub fn group_action<S: TensorSource>(
    source: &S,
    action: &GeneralLinearAction,
    out: &GridSpec,
) -> Result<SymTensorField> {
    let ga = GroupAction::new(source, action.clone())?;
    SymTensorField::sample(out, &ga)
}

/// A box grid (same cell counts as `grid`) inside the image of the box of
/// `grid` under the induced point map, centered on the image of its center.
pub fn image_grid(action: &GeneralLinearAction, grid: &GridSpec) -> Result<GridSpec> {
    let axes = grid.lattice().axes();
    let n = axes.len();
    let corners = |lo: &[f64], hi: &[f64]| -> Vec<Vec<f64>> {
        (0..1usize << n).map(|m| (0..n).map(|k| if m >> k & 1 == 1 { hi[k] } else { lo[k] }).collect()).collect()
    };
    let lo: Vec<f64> = axes.iter().map(|a| a.lo).collect();
    let hi: Vec<f64> = axes.iter().map(|a| a.hi).collect();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let yc = action.map_point(&center)?;
    let mut blo = yc.clone();
    let mut bhi = yc.clone();
    for c in corners(&lo, &hi) {
        let y = action.map_point(&c)?;
        for k in 0..n {
            blo[k] = blo[k].min(y[k]);
            bhi[k] = bhi[k].max(y[k]);
        }
    }
    let boxed = |f: f64| -> (Vec<f64>, Vec<f64>) {
        ((0..n).map(|k| yc[k] + f * (blo[k] - yc[k])).collect(), (0..n).map(|k| yc[k] + f * (bhi[k] - yc[k])).collect())
    };
    let fits = |f: f64| -> bool {
        let (a, b) = boxed(f);
        corners(&a, &b).iter().all(|y| {
            action
                .preimage_point(y)
                .map(|x| x.iter().zip(axes).all(|(v, ax)| *v >= ax.lo && *v <= ax.hi))
                .unwrap_or(false)
        })
    };
    let (mut good, mut bad) = (0.0, 1.0);
    if fits(1.0) {
        good = 1.0;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (good + bad);
            if fits(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
    }
    let (a, b) = boxed(good * (1.0 - 1e-9));
    let out = (0..n).map(|k| Axis::new(a[k], b[k], axes[k].n)).collect::<Result<Vec<_>>>()?;
    GridSpec::new(out[0].clone(), out[1..].to_vec())
}
