//! The projective change of variables `s = t/(1+t alpha)`, `y = x/(1+t alpha)`
//! and its action on divergence-free symmetric tensors.

pub mod group;
pub mod ode;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec};
use crate::interp::interpolate;
use crate::linalg::{self, Mat};
use crate::tensor_field::{SymTensorField, TensorSource, VectorField};

pub use group::{
    group_action, image_grid as group_image_grid, lift, restrict, restrict_value, ConeTensor, Congruence,
    DivergenceCheck, GeneralLinearAction, GroupAction, HomogeneousBlocks, Lift,
};

/// The map `(t, x) -> (s, y) = (t, x) / (1 + t alpha)`.
///
/// Its inverse is the same map with `-alpha`:
/// `(t, x) = (s, y) / (1 - alpha s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ProjectiveMap {
    alpha: f64,
}

impl ProjectiveMap {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be finite, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn identity() -> Self {
        Self { alpha: 0.0 }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inverse(&self) -> Self {
        Self { alpha: -self.alpha }
    }

    /// `L = 1 + t alpha`.
    #[inline]
    pub fn factor(&self, t: f64) -> f64 {
        1.0 + t * self.alpha
    }

    fn checked_factor(&self, t: f64) -> Result<f64> {
        let l = self.factor(t);
        if l > 0.0 {
            Ok(l)
        } else {
            Err(Error::DegenerateMap { t, factor: l })
        }
    }

    /// Image `(s, y)` of the space-time point `(t, x)`.
    pub fn forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        let l = self.checked_factor(p[0])?;
        Ok(p.iter().map(|v| v / l).collect())
    }

    /// Preimage `(t, x)` of `(s, y)`.
    pub fn backward(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.inverse().forward(q)
    }

    /// Fails unless `1 + t alpha > 0` on the closed time interval of `grid`.
    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        let a = grid.time_axis();
        self.checked_factor(a.lo)?;
        self.checked_factor(a.hi)?;
        Ok(())
    }

    /// The largest box of the form `[s0, s1] x prod [lo_k, hi_k]` whose
    /// preimage lies in the domain of `grid`, with the same cell counts.
    pub fn image_grid(&self, grid: &GridSpec) -> Result<GridSpec> {
        self.check_grid(grid)?;
        let ta = grid.time_axis();
        let (l0, l1) = (self.factor(ta.lo), self.factor(ta.hi));
        let t = Axis::new(ta.lo / l0, ta.hi / l1, ta.n)?;
        let x = grid
            .space_axes()
            .iter()
            .map(|a| {
                let lo = (a.lo / l0).max(a.lo / l1);
                let hi = (a.hi / l0).min(a.hi / l1);
                Axis::new(lo, hi, a.n)
            })
            .collect::<Result<Vec<_>>>()?;
        GridSpec::new(t, x)
    }

    /// The matrix in `GL_{d+2}` whose lift/congruence/restrict action
    /// reproduces this map, acting on `(lambda, t, x)`.
    pub fn matrix(&self, d: usize) -> Mat {
        let mut p = Mat::identity(d + 2, d + 2);
        p[(0, 1)] = self.alpha;
        p
    }
}

/// `[[1, 0], [-alpha x, L I_d]]`, the congruence factor at `(t, x)`.
pub fn congruence_factor(map: &ProjectiveMap, p: &[f64]) -> Result<Mat> {
    let l = map.checked_factor(p[0])?;
    let n = p.len();
    let mut q = Mat::zeros(n, n);
    q[(0, 0)] = 1.0;
    for k in 1..n {
        q[(k, 0)] = -map.alpha * p[k];
        q[(k, k)] = l;
    }
    Ok(q)
}

/// Blockwise transform of the value `s` of a tensor at `(t, x)`.
/// Returns the image point and the transformed value.
pub fn push_forward_value(map: &ProjectiveMap, p: &[f64], s: &Mat) -> Result<(Vec<f64>, Mat)> {
    let n = p.len();
    let d = n - 1;
    let a = map.alpha;
    let l = map.checked_factor(p[0])?;
    let ld = l.powi(d as i32);
    let x = &p[1..];
    let rho = s[(0, 0)];
    let mut out = Mat::zeros(n, n);
    out[(0, 0)] = ld * rho;
    for i in 0..d {
        let mb = l * ld * s[(i + 1, 0)] - a * ld * rho * x[i];
        out[(i + 1, 0)] = mb;
        out[(0, i + 1)] = mb;
        for j in 0..d {
            let (mi, mj) = (s[(i + 1, 0)], s[(j + 1, 0)]);
            out[(i + 1, j + 1)] =
                l * l * ld * s[(i + 1, j + 1)] - a * l * ld * (mi * x[j] + x[i] * mj) + a * a * ld * rho * x[i] * x[j];
        }
    }
    Ok((map.forward(p)?, out))
}

/// Same transform through the congruence `L^d Q S Q^T`.
pub fn congruence_value(map: &ProjectiveMap, p: &[f64], s: &Mat) -> Result<(Vec<f64>, Mat)> {
    let q = congruence_factor(map, p)?;
    let ld = map.factor(p[0]).powi(p.len() as i32 - 1);
    Ok((map.forward(p)?, &q * s * q.transpose() * ld))
}

/// A tensor source composed with the map, evaluated in `(s, y)` coordinates.
pub struct PushForward<S> {
    pub source: S,
    pub map: ProjectiveMap,
}

impl<S: TensorSource> TensorSource for PushForward<S> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn eval(&self, q: &[f64]) -> Result<Mat> {
        let p = self.map.backward(q)?;
        let s = self.source.eval(&p)?;
        Ok(push_forward_value(&self.map, &p, &s)?.1)
    }
}

/// Samples the transformed tensor on the image grid of `s`, evaluating `s`
/// at exact preimages by multilinear interpolation.
pub fn push_forward(s: &SymTensorField, map: &ProjectiveMap) -> Result<SymTensorField> {
    let grid = map.image_grid(s.grid())?;
    push_forward_onto(s, map, &grid)
}

/// Samples the transform of any tensor source on a chosen `(s, y)` grid.
pub fn push_forward_onto<S: TensorSource>(source: &S, map: &ProjectiveMap, grid: &GridSpec) -> Result<SymTensorField> {
    map.inverse().check_grid(grid)?;
    SymTensorField::sample(grid, &PushForward { source, map: *map })
}

/// Transform of a divergence residual `r = Div_{t,x} S` at `(t, x)`:
/// `r0 -> L^{d+2} r0` and `r_m -> L^{d+2} (L r_m - alpha x r0)`.
///
/// With this rule `Div_{s,y} S_bar` is the transformed residual, and the
/// `ds dy = L^{-(d+2)} dt dx` Jacobian makes the first row preserve mass.
pub fn transform_residual_value(map: &ProjectiveMap, p: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = p.len();
    let l = map.checked_factor(p[0])?;
    let w = l.powi(n as i32 + 1);
    let mut out = vec![0.0; n];
    out[0] = w * r[0];
    for k in 1..n {
        out[k] = w * (l * r[k] - map.alpha * p[k] * r[0]);
    }
    Ok(out)
}

/// Measure norms on both sides of the divergence-control statement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassNormBounds {
    /// `|| d_s rho_bar + div_y m_bar ||`
    pub rho_transformed: f64,
    /// `|| d_t rho + div_x m ||`
    pub rho_original: f64,
    /// `|| d_s m_bar + Div_y T_bar ||`
    pub momentum_transformed: f64,
    /// `|| (1 + alpha t)(d_t m + Div_x T) || + alpha || |x| (d_t rho + div_x m) ||`
    pub momentum_bound: f64,
}

impl MassNormBounds {
    /// Relative gap in the mass-row identity.
    pub fn identity_gap(&self) -> f64 {
        let scale = self.rho_original.max(f64::MIN_POSITIVE);
        if self.rho_original == 0.0 && self.rho_transformed == 0.0 {
            0.0
        } else {
            (self.rho_transformed - self.rho_original).abs() / scale
        }
    }

    pub fn slack(&self) -> f64 {
        self.momentum_bound - self.momentum_transformed
    }

    pub fn inequality_holds(&self, rel_tol: f64) -> bool {
        self.momentum_transformed <= self.momentum_bound * (1.0 + rel_tol) + f64::MIN_POSITIVE
    }
}

#[derive(Clone, Debug)]
pub struct SourceTransform {
    pub tensor: SymTensorField,
    pub residual: VectorField,
    pub bounds: MassNormBounds,
}

/// Transforms a tensor together with its divergence residual (given on the
/// same grid). Both residuals are integrated as discrete measures; the
/// residual must be supported inside the image grid for the norms to be
/// comparable.
pub fn push_forward_with_source(
    s: &SymTensorField,
    residual: &VectorField,
    map: &ProjectiveMap,
) -> Result<SourceTransform> {
    let grid = s.grid();
    let n = grid.n();
    if residual.grid != *grid || residual.ncomp != n {
        return Err(Error::InvalidGrid("residual must live on the tensor grid with d+1 components".into()));
    }
    let tensor = push_forward(s, map)?;
    let image = tensor.grid().clone();

    let mut values = vec![0.0; image.len() * n];
    let mut r = vec![0.0; n];
    for c in 0..image.len() {
        let q = image.center(c);
        let p = map.backward(&q)?;
        interpolate(grid.lattice(), &residual.values, n, &p, &mut r)?;
        values[c * n..(c + 1) * n].copy_from_slice(&transform_residual_value(map, &p, &r)?);
    }
    let transformed = VectorField { grid: image, ncomp: n, values };

    let vol = grid.cell_volume();
    let (mut mom_bound, mut rho_orig) = (0.0, 0.0);
    for c in 0..grid.len() {
        let p = grid.center(c);
        let r = residual.cell(c);
        rho_orig += r[0].abs();
        mom_bound +=
            map.factor(p[0]).abs() * linalg::norm(&r[1..]) + map.alpha.abs() * linalg::norm(&p[1..]) * r[0].abs();
    }
    let bounds = MassNormBounds {
        rho_transformed: transformed.measure_norm_of(0..1).value(),
        rho_original: rho_orig * vol,
        momentum_transformed: transformed.measure_norm_of(1..n).value(),
        momentum_bound: mom_bound * vol,
    };
    Ok(SourceTransform { tensor, residual: transformed, bounds })
}

/// `(1 + alpha t0) dm`, the scaling of a determinantal mass at base time `t0`.
pub fn determinantal_mass_scale(dm: f64, t0: f64, map: &ProjectiveMap) -> Result<f64> {
    Ok(map.checked_factor(t0)? * dm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn worked_value_at_unit_alpha() {
        let map = ProjectiveMap::new(1.0).unwrap();
        let (q, sb) = push_forward_value(&map, &[1.0, 2.0], &Mat::identity(2, 2)).unwrap();
        assert_eq!(q, vec![0.5, 1.0]);
        assert_eq!(sb, Mat::from_row_slice(2, 2, &[2.0, -4.0, -4.0, 16.0]));
        let (_, sc) = congruence_value(&map, &[1.0, 2.0], &Mat::identity(2, 2)).unwrap();
        assert!((sb - sc).amax() < 1e-14);
    }

    #[test]
    fn inverse_undoes_forward() {
        let map = ProjectiveMap::new(0.7).unwrap();
        let p = [0.3, -1.2, 2.5];
        let back = map.backward(&map.forward(&p).unwrap()).unwrap();
        for (a, b) in back.iter().zip(p) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn degenerate_maps_are_rejected() {
        let map = ProjectiveMap::new(-2.0).unwrap();
        let g = GridSpec::uniform((0.0, 1.0), 4, &[(0.0, 1.0)], &[4]).unwrap();
        assert!(matches!(map.check_grid(&g), Err(Error::DegenerateMap { .. })));
        assert!(determinantal_mass_scale(1.0, 1.0, &map).is_err());
    }

    #[test]
    fn image_grid_maps_back_inside() {
        let map = ProjectiveMap::new(2.0).unwrap();
        let g = GridSpec::uniform((0.0, 1.0), 4, &[(-1.0, 3.0)], &[6]).unwrap();
        let img = map.image_grid(&g).unwrap();
        for c in 0..img.len() {
            let p = map.backward(&img.center(c)).unwrap();
            assert!(g.lattice().contains(&p), "{p:?}");
        }
    }

    #[test]
    fn mass_scale_arithmetic() {
        let map = ProjectiveMap::new(1.0).unwrap();
        assert_eq!(determinantal_mass_scale(std::f64::consts::PI, 1.0, &map).unwrap(), 2.0 * std::f64::consts::PI);
        assert_eq!(determinantal_mass_scale(3.0, 0.0, &map).unwrap(), 3.0);
    }
}
