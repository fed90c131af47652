//! Cell-centered box lattices.
//!
//! Storage is row-major with the first axis varying slowest. For a
//! space-time [`GridSpec`] the first axis is time, so cells are ordered
//! over `(t, x_1, ..., x_d)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One axis of a cell-centered lattice: `n` cells of equal width on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let axis = Self { lo, hi, n, periodic: false };
        axis.validate(0)?;
        Ok(axis)
    }

    pub fn periodic(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let axis = Self { lo, hi, n, periodic: true };
        axis.validate(0)?;
        Ok(axis)
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.n < 2 {
            return Err(Error::GridTooSmall { axis: index, cells: self.n });
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo >= self.hi {
            return Err(Error::InvalidGrid(format!(
                "axis {index}: interval [{}, {}] is empty or not finite",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.center(i))
    }

    /// Same interval with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self { n: self.n * factor, ..self.clone() }
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self { lo: self.lo + offset, hi: self.hi + offset, ..self.clone() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { lo: self.lo * factor, hi: self.hi * factor, ..self.clone() }
    }

    /// Index of the cell containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.lo || x > self.hi {
            return None;
        }
        let i = ((x - self.lo) / self.width()).floor() as usize;
        Some(i.min(self.n - 1))
    }
}

/// An N-dimensional cell-centered box lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    axes: Vec<Axis>,
}

impl Lattice {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("lattice needs at least one axis".into()));
        }
        for (k, axis) in axes.iter().enumerate() {
            axis.validate(k)?;
        }
        Ok(Self { axes })
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn widths(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::width).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    /// Stride of axis `k` in the flat row-major index.
    pub fn stride(&self, k: usize) -> usize {
        self.axes[k + 1..].iter().map(|a| a.n).product()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.ndim());
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.n + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for k in (0..self.ndim()).rev() {
            let n = self.axes[k].n;
            idx[k] = flat % n;
            flat /= n;
        }
        idx
    }

    /// Index along axis `k` of the flat cell `flat`.
    #[inline]
    pub fn axis_index(&self, flat: usize, k: usize) -> usize {
        (flat / self.stride(k)) % self.axes[k].n
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.ndim()];
        self.center_into(flat, &mut p);
        p
    }

    pub fn center_into(&self, mut flat: usize, out: &mut [f64]) {
        for k in (0..self.ndim()).rev() {
            let n = self.axes[k].n;
            out[k] = self.axes[k].center(flat % n);
            flat /= n;
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.axes).all(|(&x, a)| a.periodic || (x >= a.lo && x <= a.hi))
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { axes: self.axes.iter().map(|a| a.refined(factor)).collect() }
    }

    pub fn with_axes(axes: Vec<Axis>) -> Result<Self> {
        Self::new(axes)
    }
}

/// A space-time grid: axis 0 is time, axes `1..=d` are space.
///
/// Any `d >= 1` is representable; the experiment layer restricts runs to
/// `d` in `{1, 2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Lattice", into = "Lattice")]
pub struct GridSpec {
    lattice: Lattice,
}

impl TryFrom<Lattice> for GridSpec {
    type Error = Error;
    fn try_from(lattice: Lattice) -> Result<Self> {
        Self::from_lattice(lattice)
    }
}

impl From<GridSpec> for Lattice {
    fn from(g: GridSpec) -> Lattice {
        g.lattice
    }
}

impl GridSpec {
    pub fn new(t: Axis, x: Vec<Axis>) -> Result<Self> {
        let mut axes = Vec::with_capacity(x.len() + 1);
        axes.push(t);
        axes.extend(x);
        Self::from_lattice(Lattice::new(axes)?)
    }

    pub fn from_lattice(lattice: Lattice) -> Result<Self> {
        if lattice.ndim() < 2 {
            return Err(Error::InvalidGrid("space-time grid needs d >= 1".into()));
        }
        Ok(Self { lattice })
    }

    /// Uniform non-periodic grid over `[t0, t1] x prod [lo_k, hi_k]`.
    pub fn uniform(t: (f64, f64), n_t: usize, x: &[(f64, f64)], n_x: &[usize]) -> Result<Self> {
        if x.len() != n_x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: n_x.len() });
        }
        let space = x.iter().zip(n_x).map(|(&(lo, hi), &n)| Axis::new(lo, hi, n)).collect::<Result<Vec<_>>>()?;
        Self::new(Axis::new(t.0, t.1, n_t)?, space)
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Spatial dimension.
    #[inline]
    pub fn d(&self) -> usize {
        self.lattice.ndim() - 1
    }

    /// Space-time dimension `n = d + 1`.
    #[inline]
    pub fn n(&self) -> usize {
        self.lattice.ndim()
    }

    #[inline]
    pub fn time_axis(&self) -> &Axis {
        self.lattice.axis(0)
    }

    pub fn space_axes(&self) -> &[Axis] {
        &self.lattice.axes()[1..]
    }

    /// The spatial slice lattice (axes `1..=d`).
    pub fn space(&self) -> Lattice {
        Lattice { axes: self.space_axes().to_vec() }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Number of cells in one time slice.
    pub fn slice_len(&self) -> usize {
        self.lattice.stride(0)
    }

    pub fn cell_volume(&self) -> f64 {
        self.lattice.cell_volume()
    }

    pub fn spatial_cell_volume(&self) -> f64 {
        self.space_axes().iter().map(Axis::width).product()
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.lattice.center(flat)
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { lattice: self.lattice.refined(factor) }
    }

    pub fn with_time_axis(&self, t: Axis) -> Result<Self> {
        Self::new(t, self.space_axes().to_vec())
    }

    pub fn with_space_axes(&self, x: Vec<Axis>) -> Result<Self> {
        Self::new(self.time_axis().clone(), x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_and_empty_axes() {
        assert!(matches!(Axis::new(0.0, 1.0, 1), Err(Error::GridTooSmall { .. })));
        assert!(Axis::new(1.0, 1.0, 4).is_err());
        assert!(Axis::new(0.0, f64::NAN, 4).is_err());
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = GridSpec::uniform((0.0, 1.0), 3, &[(0.0, 2.0), (-1.0, 1.0)], &[4, 5]).unwrap();
        assert_eq!(g.len(), 60);
        for flat in 0..g.len() {
            let idx = g.lattice().multi_index(flat);
            assert_eq!(g.lattice().flat_index(&idx), flat);
            for k in 0..3 {
                assert_eq!(g.lattice().axis_index(flat, k), idx[k]);
            }
        }
        // time varies slowest
        assert_eq!(g.lattice().multi_index(20), vec![1, 0, 0]);
        assert_eq!(g.slice_len(), 20);
    }

    #[test]
    fn centers_and_volumes() {
        let g = GridSpec::uniform((0.0, 1.0), 2, &[(0.0, 1.0)], &[4]).unwrap();
        assert_eq!(g.center(0), vec![0.25, 0.125]);
        assert!((g.cell_volume() - 0.125).abs() < 1e-15);
        assert!((g.spatial_cell_volume() - 0.25).abs() < 1e-15);
    }
}
