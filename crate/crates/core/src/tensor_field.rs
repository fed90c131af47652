//! Symmetric space-time tensor fields sampled on a [`GridSpec`].
//!
//! A field stores, per cell, the packed upper triangle of an `n x n`
//! symmetric matrix (`n = d + 1`), written blockwise as
//! `S = [[rho, m^T], [m, T]]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::interp::{axis_derivative, interpolate};
use crate::linalg::{self, packed_len, Mat, Vector};

/// Anything that can be evaluated as a symmetric `n x n` tensor at a
/// space-time point `(t, x_1, ..., x_d)`.
pub trait TensorSource: Sync {
    /// Matrix size `n` (space-time dimension).
    fn dim(&self) -> usize;
    fn eval(&self, point: &[f64]) -> Result<Mat>;
}

impl<T: TensorSource + ?Sized> TensorSource for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, point: &[f64]) -> Result<Mat> {
        (**self).eval(point)
    }
}

impl<T: TensorSource + ?Sized> TensorSource for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, point: &[f64]) -> Result<Mat> {
        (**self).eval(point)
    }
}

/// A tensor given in closed form.
pub struct AnalyticTensor<F> {
    n: usize,
    f: F,
}

impl<F> AnalyticTensor<F>
where
    F: Fn(&[f64]) -> Mat + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> TensorSource for AnalyticTensor<F>
where
    F: Fn(&[f64]) -> Mat + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, point: &[f64]) -> Result<Mat> {
        Ok((self.f)(point))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl SymTensorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let len = grid.len() * packed_len(grid.n());
        Self { grid, data: vec![0.0; len] }
    }

    /// Builds a field from packed upper-triangular entries, cell by cell.
    pub fn from_packed(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * packed_len(grid.n());
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: data.len() });
        }
        Ok(Self { grid, data })
    }

    /// Samples a tensor source at every cell center.
    pub fn sample<S: TensorSource + ?Sized>(grid: &GridSpec, source: &S) -> Result<Self> {
        let n = grid.n();
        if source.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: source.dim() });
        }
        let p = packed_len(n);
        let mut data = vec![0.0; grid.len() * p];
        data.par_chunks_mut(p).enumerate().try_for_each(|(c, out)| {
            let m = source.eval(&grid.center(c))?;
            linalg::pack_into(&m, out);
            Ok::<(), Error>(())
        })?;
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn from_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> Mat + Sync,
    {
        Self::sample(grid, &AnalyticTensor::new(grid.n(), f)).expect("closure sources cannot fail")
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Matrix size `n = d + 1`.
    #[inline]
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.grid.d()
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn into_packed(self) -> Vec<f64> {
        self.data
    }

    pub fn cell_packed(&self, cell: usize) -> &[f64] {
        let p = packed_len(self.n());
        &self.data[cell * p..(cell + 1) * p]
    }

    pub fn get(&self, cell: usize) -> Mat {
        linalg::unpack(self.n(), self.cell_packed(cell))
    }

    pub fn set(&mut self, cell: usize, m: &Mat) {
        let p = packed_len(self.n());
        linalg::pack_into(m, &mut self.data[cell * p..(cell + 1) * p]);
    }

    pub fn rho(&self, cell: usize) -> f64 {
        self.cell_packed(cell)[0]
    }

    pub fn momentum(&self, cell: usize) -> Vector {
        Vector::from_column_slice(&self.cell_packed(cell)[1..self.n()])
    }

    /// The `d x d` lower-right block `T`.
    pub fn stress_block(&self, cell: usize) -> Mat {
        let s = self.get(cell);
        let d = self.d();
        s.view((1, 1), (d, d)).into_owned()
    }

    /// `sigma = T - m m^T / rho` where `rho > 0`; zero elsewhere.
    pub fn schur_stress(&self) -> SchurStress {
        let d = self.d();
        let sigma = (0..self.grid.len())
            .map(|c| {
                let rho = self.rho(c);
                if rho > 0.0 {
                    let m = self.momentum(c);
                    self.stress_block(c) - &m * m.transpose() / rho
                } else {
                    Mat::zeros(d, d)
                }
            })
            .collect();
        SchurStress { sigma }
    }

    /// Entrywise linear combination `a*self + b*other` on the same grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grid: self.grid.clone(), data })
    }

    /// Applies `f` to every cell matrix.
    pub fn map_cells<F>(&self, f: F) -> Self
    where
        F: Fn(&[f64], Mat) -> Mat + Sync,
    {
        let n = self.n();
        let p = packed_len(n);
        let mut data = vec![0.0; self.data.len()];
        data.par_chunks_mut(p).enumerate().for_each(|(c, out)| {
            let m = f(&self.grid.center(c), self.get(c));
            linalg::pack_into(&m, out);
        });
        Self { grid: self.grid.clone(), data }
    }
}

/// Multilinear interpolation between cell centers.
impl TensorSource for SymTensorField {
    fn dim(&self) -> usize {
        self.n()
    }
    fn eval(&self, point: &[f64]) -> Result<Mat> {
        let mut buf = vec![0.0; packed_len(self.n())];
        interpolate(self.grid.lattice(), &self.data, buf.len(), point, &mut buf)?;
        Ok(linalg::unpack(self.n(), &buf))
    }
}

/// The Schur complement of `rho` in `S`, cell by cell.
#[derive(Clone, Debug)]
pub struct SchurStress {
    pub sigma: Vec<Mat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|c| f(&grid.center(c))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let mut out = [0.0];
        interpolate(self.grid.lattice(), &self.values, 1, point, &mut out)?;
        Ok(out[0])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub ncomp: usize,
    pub values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &GridSpec, ncomp: usize) -> Self {
        Self { grid: grid.clone(), ncomp, values: vec![0.0; grid.len() * ncomp] }
    }

    pub fn from_fn<F>(grid: &GridSpec, ncomp: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let mut values = vec![0.0; grid.len() * ncomp];
        values.par_chunks_mut(ncomp).enumerate().for_each(|(c, out)| {
            out.copy_from_slice(&f(&grid.center(c)));
        });
        Self { grid: grid.clone(), ncomp, values }
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.values[c * self.ncomp..(c + 1) * self.ncomp]
    }

    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.chunks(self.ncomp).map(|v| v[k]).collect() }
    }

    /// Total-variation mass `sum |v| * cell volume` (Euclidean norm per cell).
    pub fn measure_norm(&self) -> MeasureNorm {
        let vol = self.grid.cell_volume();
        MeasureNorm(self.values.chunks(self.ncomp).map(linalg::norm).sum::<f64>() * vol)
    }

    /// Measure norm of the components `range` only.
    pub fn measure_norm_of(&self, range: std::ops::Range<usize>) -> MeasureNorm {
        let vol = self.grid.cell_volume();
        MeasureNorm(self.values.chunks(self.ncomp).map(|v| linalg::norm(&v[range.clone()])).sum::<f64>() * vol)
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ncomp];
        interpolate(self.grid.lattice(), &self.values, self.ncomp, point, &mut out)?;
        Ok(out)
    }
}

/// Total mass of a (vector) measure.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MeasureNorm(f64);

impl MeasureNorm {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidInput(format!("measure norm must be nonnegative, got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Row-wise divergence `(Div S)_i = sum_j d_j S_ij` over the space-time axes.
///
/// Second-order central differences in the interior and first-order
/// one-sided differences at non-periodic boundaries, so affine entries
/// give an exact result.
pub fn discrete_divergence(s: &SymTensorField) -> Result<VectorField> {
    let grid = s.grid();
    let n = grid.n();
    for (k, a) in grid.lattice().axes().iter().enumerate() {
        if a.n < 2 {
            return Err(Error::GridTooSmall { axis: k, cells: a.n });
        }
    }
    let p = packed_len(n);
    let lattice = grid.lattice();
    let mut values = vec![0.0; grid.len() * n];
    values.par_chunks_mut(n).enumerate().for_each(|(c, out)| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|j| axis_derivative(lattice, s.packed(), p, linalg::packed_index(n, i, j), j, c)).sum();
        }
    });
    Ok(VectorField { grid: grid.clone(), ncomp: n, values })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub fraction_psd: f64,
}

/// Minimal eigenvalue over all cells and the fraction of cells whose
/// minimal eigenvalue is at least `-tol`.
pub fn positivity_report(s: &SymTensorField, tol: f64) -> PositivityReport {
    let eigs: Vec<f64> = (0..s.grid().len()).into_par_iter().map(|c| linalg::min_eigenvalue(&s.get(c))).collect();
    let ok = eigs.iter().filter(|&&e| e >= -tol).count();
    PositivityReport {
        min_eigenvalue: eigs.iter().copied().fold(f64::INFINITY, f64::min),
        fraction_psd: ok as f64 / eigs.len() as f64,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetPower {
    pub field: ScalarField,
    /// Cells whose determinant was negative and clamped to zero.
    pub clamped: usize,
}

/// `max(det S, 0)^exponent` per cell, for `exponent` in `{1/(d+1), 1/d, 1}`.
pub fn det_power(s: &SymTensorField, exponent: f64) -> Result<DetPower> {
    let d = s.d() as f64;
    let allowed = [1.0 / (d + 1.0), 1.0 / d, 1.0];
    if !allowed.iter().any(|a| (a - exponent).abs() < 1e-12) {
        return Err(Error::InvalidInput(format!(
            "det_power exponent {exponent} is not one of 1/(d+1), 1/d, 1 for d = {d}"
        )));
    }
    let dets: Vec<f64> = (0..s.grid().len()).into_par_iter().map(|c| s.get(c).determinant()).collect();
    let clamped = dets.iter().filter(|&&x| x < 0.0).count();
    let values = dets.into_iter().map(|x| x.max(0.0).powf(exponent)).collect();
    Ok(DetPower { field: ScalarField { grid: s.grid().clone(), values }, clamped })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeWeight {
    One,
    T,
}

/// Midpoint-rule quadrature of `weight(t) * field` over the grid.
pub fn space_time_integral(field: &ScalarField, weight: TimeWeight) -> f64 {
    let grid = &field.grid;
    let slice = grid.slice_len();
    let vol = grid.cell_volume();
    field
        .values
        .chunks(slice)
        .enumerate()
        .map(|(k, row)| {
            let w = match weight {
                TimeWeight::One => 1.0,
                TimeWeight::T => grid.time_axis().center(k),
            };
            w * row.iter().sum::<f64>()
        })
        .sum::<f64>()
        * vol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid1() -> GridSpec {
        GridSpec::uniform((0.0, 1.0), 8, &[(-1.0, 1.0)], &[10]).unwrap()
    }

    #[test]
    fn constant_field_has_zero_divergence() {
        let g = GridSpec::uniform((0.0, 1.0), 5, &[(0.0, 1.0), (0.0, 2.0)], &[4, 6]).unwrap();
        let s = SymTensorField::from_fn(&g, |_| Mat::identity(3, 3));
        let div = discrete_divergence(&s).unwrap();
        assert!(div.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn affine_tensor_divergence_is_exact() {
        // S = [[x, -t], [-t, 0]]: row 0 is divergence-free, row 1 has residual -1.
        let s = SymTensorField::from_fn(&grid1(), |p| Mat::from_row_slice(2, 2, &[p[1], -p[0], -p[0], 0.0]));
        let div = discrete_divergence(&s).unwrap();
        for c in 0..s.grid().len() {
            assert!(div.cell(c)[0].abs() < 1e-12);
            assert!((div.cell(c)[1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn positivity_of_identity_and_indefinite() {
        let g = GridSpec::uniform((0.0, 1.0), 3, &[(0.0, 1.0), (0.0, 1.0)], &[3, 3]).unwrap();
        let id = SymTensorField::from_fn(&g, |_| Mat::identity(3, 3));
        let r = positivity_report(&id, 1e-12);
        assert_relative_eq!(r.min_eigenvalue, 1.0, epsilon = 1e-12);
        assert_eq!(r.fraction_psd, 1.0);
        let ind = SymTensorField::from_fn(&g, |_| Mat::from_diagonal(&Vector::from_vec(vec![1.0, -1.0, 1.0])));
        assert_eq!(positivity_report(&ind, 1e-12).fraction_psd, 0.0);
    }

    #[test]
    fn det_power_of_identity_and_clamping() {
        let id = SymTensorField::from_fn(&grid1(), |_| Mat::identity(2, 2));
        for e in [0.5, 1.0] {
            let dp = det_power(&id, e).unwrap();
            assert!(dp.field.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        }
        let neg = SymTensorField::from_fn(&grid1(), |_| Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-14]));
        let dp = det_power(&neg, 1.0).unwrap();
        assert_eq!(dp.clamped, grid1().len());
        assert!(dp.field.values.iter().all(|&v| v == 0.0));
        assert!(det_power(&id, 0.3).is_err());
    }

    #[test]
    fn space_time_integrals_of_constants() {
        let g = GridSpec::uniform((0.0, 1.0), 16, &[(0.0, 1.0)], &[16]).unwrap();
        let one = ScalarField::from_fn(&g, |_| 1.0);
        assert_relative_eq!(space_time_integral(&one, TimeWeight::One), 1.0, epsilon = 1e-14);
        assert_relative_eq!(space_time_integral(&one, TimeWeight::T), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn schur_stress_of_gas_tensor_is_pressure() {
        let s = SymTensorField::from_fn(&grid1(), |p| {
            let (rho, u, pr) = (1.0 + p[1] * p[1], p[0], 2.0);
            Mat::from_row_slice(2, 2, &[rho, rho * u, rho * u, rho * u * u + pr])
        });
        for sigma in s.schur_stress().sigma {
            assert_relative_eq!(sigma[(0, 0)], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_samples_at_centers() {
        let s = SymTensorField::from_fn(&grid1(), |p| Mat::from_row_slice(2, 2, &[p[0].exp(), p[1], p[1], 1.0]));
        for c in [0, 17, 45] {
            let m = s.eval(&s.grid().center(c)).unwrap();
            assert!((m - s.get(c)).amax() < 1e-12);
        }
    }
}
