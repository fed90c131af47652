//! Divergence-free tensors built from convex potentials:
//! `S = cof(D^2 theta)`, the projective transform of potentials, degree-one
//! homogeneous potentials and their determinantal masses, and the rigidity
//! form `mu(z/|z|) z z^T / |z|^{d+2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{self, Mat};
use crate::projective::ProjectiveMap;
use crate::tensor_field::{SymTensorField, TensorSource};

/// A scalar potential `theta(t, x)` on space-time `R^n`.
///
/// Analytic derivatives are optional; missing ones are replaced by
/// fourth-order central differences with step `1e-4 * scale()`.
pub trait Theta: Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    fn gradient(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }
    fn hessian(&self, _z: &[f64]) -> Option<Mat> {
        None
    }
    /// Length scale used for finite-difference steps.
    fn scale(&self) -> f64 {
        1.0
    }
}

impl<T: Theta + ?Sized> Theta for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, z: &[f64]) -> f64 {
        (**self).value(z)
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(z)
    }
    fn hessian(&self, z: &[f64]) -> Option<Mat> {
        (**self).hessian(z)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
}

impl<T: Theta + ?Sized> Theta for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, z: &[f64]) -> f64 {
        (**self).value(z)
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(z)
    }
    fn hessian(&self, z: &[f64]) -> Option<Mat> {
        (**self).hessian(z)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
}

const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const D2: [(f64, f64); 5] =
    [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];

pub fn gradient<T: Theta + ?Sized>(theta: &T, z: &[f64]) -> Vec<f64> {
    if let Some(g) = theta.gradient(z) {
        return g;
    }
    let h = 1e-4 * theta.scale();
    let mut p = z.to_vec();
    (0..z.len())
        .map(|i| {
            let acc = D1.iter().fold(0.0, |acc, &(o, c)| {
                p[i] = z[i] + o * h;
                acc + c * theta.value(&p)
            });
            p[i] = z[i];
            acc / h
        })
        .collect()
}

pub fn hessian<T: Theta + ?Sized>(theta: &T, z: &[f64]) -> Mat {
    if let Some(hs) = theta.hessian(z) {
        return hs;
    }
    let n = z.len();
    let h = 1e-4 * theta.scale();
    let mut p = z.to_vec();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        let mut acc = 0.0;
        for &(o, c) in &D2 {
            p[i] = z[i] + o * h;
            acc += c * theta.value(&p);
        }
        p[i] = z[i];
        out[(i, i)] = acc / (h * h);
        for j in 0..i {
            let mut acc = 0.0;
            for &(oi, ci) in &D1 {
                for &(oj, cj) in &D1 {
                    p[i] = z[i] + oi * h;
                    p[j] = z[j] + oj * h;
                    acc += ci * cj * theta.value(&p);
                }
            }
            p[i] = z[i];
            p[j] = z[j];
            out[(i, j)] = acc / (h * h);
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

/// A potential given only by its values.
pub struct FnTheta<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnTheta<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Theta for FnTheta<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, z: &[f64]) -> f64 {
        (self.f)(z)
    }
}

/// `c |z|^2 / 2`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub n: usize,
    pub c: f64,
}

impl Theta for Quadratic {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, z: &[f64]) -> f64 {
        0.5 * self.c * z.iter().map(|v| v * v).sum::<f64>()
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(z.iter().map(|v| self.c * v).collect())
    }
    fn hessian(&self, _z: &[f64]) -> Option<Mat> {
        Some(Mat::identity(self.n, self.n) * self.c)
    }
}

/// `e^t cosh x` in one space dimension.
#[derive(Clone, Debug)]
pub struct ExpCosh;

impl Theta for ExpCosh {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, z: &[f64]) -> f64 {
        z[0].exp() * z[1].cosh()
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let e = z[0].exp();
        Some(vec![e * z[1].cosh(), e * z[1].sinh()])
    }
    fn hessian(&self, z: &[f64]) -> Option<Mat> {
        let e = z[0].exp();
        let (c, s) = (z[1].cosh(), z[1].sinh());
        Some(Mat::from_row_slice(2, 2, &[e * c, e * s, e * s, e * c]))
    }
}

/// `sum_k z_k^4 / 12`.
#[derive(Clone, Debug)]
pub struct Quartic {
    pub n: usize,
}

impl Theta for Quartic {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, z: &[f64]) -> f64 {
        z.iter().map(|v| v.powi(4)).sum::<f64>() / 12.0
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(z.iter().map(|v| v.powi(3) / 3.0).collect())
    }
    fn hessian(&self, z: &[f64]) -> Option<Mat> {
        Some(Mat::from_diagonal(&linalg::Vector::from_iterator(z.len(), z.iter().map(|v| v * v))))
    }
}

/// `c |z - p|`, homogeneous of degree one about `p`.
#[derive(Clone, Debug)]
pub struct NormCone {
    pub c: f64,
    pub base: Vec<f64>,
}

impl Theta for NormCone {
    fn dim(&self) -> usize {
        self.base.len()
    }
    fn value(&self, z: &[f64]) -> f64 {
        self.c * dist(z, &self.base)
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let r = dist(z, &self.base);
        Some(z.iter().zip(&self.base).map(|(a, b)| self.c * (a - b) / r).collect())
    }
    fn hessian(&self, z: &[f64]) -> Option<Mat> {
        let n = z.len();
        let r = dist(z, &self.base);
        let w: Vec<f64> = z.iter().zip(&self.base).map(|(a, b)| (a - b) / r).collect();
        Some((Mat::identity(n, n) - linalg::outer(&w, &w)) * (self.c / r))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// `sum coef * prod z_k^{p_k}`, with analytic derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub n: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(n: usize, terms: Vec<Monomial>) -> Result<Self> {
        if terms.iter().any(|m| m.powers.len() != n) {
            return Err(Error::InvalidInput(format!("every monomial needs {n} exponents")));
        }
        Ok(Self { n, terms })
    }

    fn eval_term(m: &Monomial, z: &[f64], deriv: &[usize]) -> f64 {
        let mut p = m.powers.clone();
        let mut c = m.coef;
        for &k in deriv {
            if p[k] == 0 {
                return 0.0;
            }
            c *= p[k] as f64;
            p[k] -= 1;
        }
        c * z.iter().zip(&p).map(|(x, &e)| x.powi(e as i32)).product::<f64>()
    }
}

impl Theta for Polynomial {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|m| Self::eval_term(m, z, &[])).sum()
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some((0..self.n).map(|i| self.terms.iter().map(|m| Self::eval_term(m, z, &[i])).sum()).collect())
    }
    fn hessian(&self, z: &[f64]) -> Option<Mat> {
        Some(Mat::from_fn(self.n, self.n, |i, j| self.terms.iter().map(|m| Self::eval_term(m, z, &[i, j])).sum()))
    }
}

/// `|z|^2 / 2 + eps prod_k cos(2 pi z_k / period)`; its Hessian is periodic
/// and positive for `eps (2 pi / period)^2 n < 1`.
#[derive(Clone, Debug)]
pub struct PeriodicPerturbed {
    pub n: usize,
    pub eps: f64,
    pub period: f64,
}

impl PeriodicPerturbed {
    fn k(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }
}

impl Theta for PeriodicPerturbed {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, z: &[f64]) -> f64 {
        let k = self.k();
        0.5 * z.iter().map(|v| v * v).sum::<f64>() + self.eps * z.iter().map(|v| (k * v).cos()).product::<f64>()
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let k = self.k();
        Some(
            (0..self.n)
                .map(|i| {
                    let prod: f64 =
                        (0..self.n).map(|j| if j == i { -k * (k * z[j]).sin() } else { (k * z[j]).cos() }).product();
                    z[i] + self.eps * prod
                })
                .collect(),
        )
    }
    fn hessian(&self, z: &[f64]) -> Option<Mat> {
        let k = self.k();
        let (c, s): (Vec<f64>, Vec<f64>) = z.iter().map(|v| ((k * v).cos(), (k * v).sin())).unzip();
        Some(Mat::from_fn(self.n, self.n, |i, j| {
            let prod: f64 = (0..self.n)
                .map(|m| match (m == i, m == j) {
                    (true, true) => -k * k * c[m],
                    (true, false) | (false, true) => -k * s[m],
                    (false, false) => c[m],
                })
                .product();
            (if i == j { 1.0 } else { 0.0 }) + self.eps * prod
        }))
    }
}

/// Built-in potentials, selectable by name from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Quadratic {
        #[serde(default = "one")]
        c: f64,
    },
    ExpCosh,
    Quartic,
    NormCone {
        #[serde(default = "one")]
        c: f64,
        #[serde(default)]
        base: Option<Vec<f64>>,
    },
    Polynomial {
        terms: Vec<Monomial>,
    },
    PeriodicPerturbed {
        eps: f64,
        #[serde(default = "one")]
        period: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    pub const NAMES: [&'static str; 6] =
        ["quadratic", "exp-cosh", "quartic", "norm-cone", "polynomial", "periodic-perturbed"];

    /// Instantiates the potential on space-time `R^{d+1}`.
    pub fn build(&self, d: usize) -> Result<Box<dyn Theta + Send>> {
        let n = d + 1;
        Ok(match self {
            Self::Quadratic { c } => Box::new(Quadratic { n, c: *c }),
            Self::ExpCosh => {
                if d != 1 {
                    return Err(Error::InvalidInput("exp-cosh is defined for d = 1".into()));
                }
                Box::new(ExpCosh)
            }
            Self::Quartic => Box::new(Quartic { n }),
            Self::NormCone { c, base } => {
                let base = base.clone().unwrap_or_else(|| vec![0.0; n]);
                if base.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: base.len() });
                }
                Box::new(NormCone { c: *c, base })
            }
            Self::Polynomial { terms } => Box::new(Polynomial::new(n, terms.clone())?),
            Self::PeriodicPerturbed { eps, period } => Box::new(PeriodicPerturbed { n, eps: *eps, period: *period }),
        })
    }
}

/// `cof(D^2 theta)` as a tensor source.
pub struct CofactorHessian<T> {
    pub theta: T,
}

impl<T: Theta> TensorSource for CofactorHessian<T> {
    fn dim(&self) -> usize {
        self.theta.dim()
    }
    fn eval(&self, z: &[f64]) -> Result<Mat> {
        Ok(linalg::cofactor(&hessian(&self.theta, z)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityCertificate {
    /// Smallest Hessian eigenvalue over the samples.
    pub min_eigenvalue: f64,
    /// Samples whose smallest eigenvalue is below the tolerance.
    pub violations: usize,
    pub samples: usize,
}

/// Tolerance separating genuine non-convexity from rounding.
pub const CONVEXITY_TOL: f64 = -1e-8;

impl ConvexityCertificate {
    pub fn is_convex(&self) -> bool {
        self.violations == 0
    }
}

pub fn convexity_certificate<T: Theta + ?Sized>(theta: &T, grid: &GridSpec) -> ConvexityCertificate {
    let eigs: Vec<f64> =
        (0..grid.len()).into_par_iter().map(|c| linalg::min_eigenvalue(&hessian(theta, &grid.center(c)))).collect();
    ConvexityCertificate {
        min_eigenvalue: eigs.iter().copied().fold(f64::INFINITY, f64::min),
        violations: eigs.iter().filter(|&&e| e < CONVEXITY_TOL).count(),
        samples: eigs.len(),
    }
}

#[derive(Clone, Debug)]
pub struct SpecialTensor {
    pub field: SymTensorField,
    /// Non-convexity is reported here, not raised.
    pub certificate: ConvexityCertificate,
}

/// Samples `cof(D^2 theta)` on `grid` together with a convexity certificate.
pub fn cofactor_hessian<T: Theta>(theta: &T, grid: &GridSpec) -> Result<SpecialTensor> {
    if theta.dim() != grid.n() {
        return Err(Error::DimensionMismatch { expected: grid.n(), found: theta.dim() });
    }
    let field = SymTensorField::sample(grid, &CofactorHessian { theta })?;
    Ok(SpecialTensor { field, certificate: convexity_certificate(theta, grid) })
}

/// `theta_bar(s, y) = (1 - alpha s) theta(s / (1 - alpha s), y / (1 - alpha s))`.
///
/// Derivatives come from the chain rule at the preimage `(t, x)`:
/// `d_s theta_bar = -alpha theta + L d_t theta + alpha x.grad_x theta`,
/// `grad_y theta_bar = grad_x theta` and `D^2 theta_bar = L Q^T D^2 theta Q`
/// with `L = 1 + alpha t` and `Q = [[L, 0], [alpha x, I]]`.
/// Outside the domain `1 - alpha s > 0` the value is NaN.
pub struct TransformedPotential<T> {
    pub inner: T,
    pub map: ProjectiveMap,
}

impl<T: Theta> TransformedPotential<T> {
    fn preimage(&self, q: &[f64]) -> Option<(Vec<f64>, f64)> {
        let p = self.map.backward(q).ok()?;
        let l = self.map.factor(p[0]);
        Some((p, l))
    }
}

impl<T: Theta> Theta for TransformedPotential<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, q: &[f64]) -> f64 {
        match self.preimage(q) {
            Some((p, l)) => self.inner.value(&p) / l,
            None => f64::NAN,
        }
    }

    fn gradient(&self, q: &[f64]) -> Option<Vec<f64>> {
        let (p, l) = self.preimage(q)?;
        let a = self.map.alpha();
        let g = gradient(&self.inner, &p);
        let mut out = g.clone();
        out[0] =
            -a * self.inner.value(&p) + l * g[0] + a * p[1..].iter().zip(&g[1..]).map(|(x, gx)| x * gx).sum::<f64>();
        Some(out)
    }

    fn hessian(&self, q: &[f64]) -> Option<Mat> {
        let (p, l) = self.preimage(q)?;
        let n = p.len();
        let a = self.map.alpha();
        let mut qm = Mat::identity(n, n);
        qm[(0, 0)] = l;
        for k in 1..n {
            qm[(k, 0)] = a * p[k];
        }
        let hs = hessian(&self.inner, &p);
        Some(qm.transpose() * hs * &qm * l)
    }

    fn scale(&self) -> f64 {
        self.inner.scale()
    }
}

/// Transformed potential, checked to be defined on the whole `target` grid.
pub fn transform_potential<T: Theta>(
    theta: T,
    map: &ProjectiveMap,
    target: &GridSpec,
) -> Result<TransformedPotential<T>> {
    map.inverse().check_grid(target)?;
    Ok(TransformedPotential { inner: theta, map: *map })
}

/// Image of a base point under the map.
pub fn transformed_base(map: &ProjectiveMap, base: &[f64]) -> Result<Vec<f64>> {
    map.forward(base)
}

/// Directions used to probe homogeneity: `+-e_k` and the diagonals `(+-1, ..., +-1)/sqrt(n)`.
fn probe_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for k in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[k] = s;
            dirs.push(e);
        }
    }
    let r = (n as f64).sqrt().recip();
    for m in 0..1usize << n {
        dirs.push((0..n).map(|k| if m >> k & 1 == 1 { r } else { -r }).collect());
    }
    dirs
}

/// Max over probe points `p + radius * omega` of
/// `|(z - p).grad theta - theta| / max(1, |theta|)`.
pub fn euler_identity_residual<T: Theta + ?Sized>(theta: &T, base: &[f64], radius: f64) -> f64 {
    probe_directions(base.len())
        .iter()
        .map(|w| {
            let z: Vec<f64> = base.iter().zip(w).map(|(b, o)| b + radius * o).collect();
            let g = gradient(theta, &z);
            let v = theta.value(&z);
            let euler: f64 = w.iter().zip(&g).map(|(o, gk)| radius * o * gk).sum();
            (euler - v).abs() / v.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// A potential positively homogeneous of degree one about `base`.
pub struct HomogeneousPotential<T> {
    pub theta: T,
    pub base: Vec<f64>,
    /// Radius at which gradients are probed.
    pub radius: f64,
}

impl<T: Theta> HomogeneousPotential<T> {
    /// Checks the Euler identity at `radius` around `base` to relative level `tol`.
    pub fn new(theta: T, base: Vec<f64>, radius: f64, tol: f64) -> Result<Self> {
        if base.len() != theta.dim() {
            return Err(Error::DimensionMismatch { expected: theta.dim(), found: base.len() });
        }
        let res = euler_identity_residual(&theta, &base, radius);
        if !(res <= tol) {
            return Err(Error::InvalidInput(format!(
                "potential is not 1-homogeneous about the base point (residual {res:e})"
            )));
        }
        Ok(Self { theta, base, radius })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterminantalMass {
    /// Shoelace area if the gradient image is a simple curve, hull area otherwise.
    pub value: f64,
    pub shoelace_area: f64,
    pub hull_area: f64,
    pub simple: bool,
    pub samples: usize,
}

/// Area enclosed by the gradient image of a 1-homogeneous potential in one
/// space dimension, from `n_samples` directions around the base point.
pub fn determinantal_mass<T: Theta>(pot: &HomogeneousPotential<T>, n_samples: usize) -> Result<DeterminantalMass> {
    if pot.theta.dim() != 2 {
        return Err(Error::InvalidInput("determinantal mass is implemented for d = 1".into()));
    }
    if n_samples < 8 {
        return Err(Error::InvalidInput("need at least 8 directions".into()));
    }
    let pts: Vec<[f64; 2]> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
            let z = [pot.base[0] + pot.radius * phi.cos(), pot.base[1] + pot.radius * phi.sin()];
            let g = gradient(&pot.theta, &z);
            [g[0], g[1]]
        })
        .collect();
    if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::OutOfDomain { point: pot.base.clone() });
    }
    let shoelace_area = shoelace(&pts).abs();
    let hull_area = shoelace(&convex_hull(&pts)).abs();
    let simple = is_simple_polygon(&pts);
    Ok(DeterminantalMass {
        value: if simple { shoelace_area } else { hull_area },
        shoelace_area,
        hull_area,
        simple,
        samples: n_samples,
    })
}

fn shoelace(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; counter-clockwise hull.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

/// Proper-crossing test between all non-adjacent edges.
fn is_simple_polygon(p: &[[f64; 2]]) -> bool {
    let n = p.len();
    let bbox = |i: usize| {
        let (a, b) = (p[i], p[(i + 1) % n]);
        [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
    };
    let boxes: Vec<[f64; 4]> = (0..n).map(bbox).collect();
    !(0..n).into_par_iter().any(|i| {
        ((i + 2)..n).any(|j| {
            if i == 0 && j == n - 1 {
                return false;
            }
            let (bi, bj) = (boxes[i], boxes[j]);
            if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                return false;
            }
            segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n])
        })
    })
}

/// `S(z) = mu((z - p)/|z - p|) (z - p)(z - p)^T / |z - p|^{d+2}`.
pub struct RigidityForm<F> {
    pub mu: F,
    pub base: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> TensorSource for RigidityForm<F> {
    fn dim(&self) -> usize {
        self.base.len()
    }

    fn eval(&self, z: &[f64]) -> Result<Mat> {
        let w: Vec<f64> = z.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        let r = linalg::norm(&w);
        if !(r > 1e-12) {
            return Err(Error::SingularPoint);
        }
        let omega: Vec<f64> = w.iter().map(|v| v / r).collect();
        let mu = (self.mu)(&omega);
        if mu < 0.0 {
            return Err(Error::InvalidInput(format!("mu must be nonnegative, got {mu}")));
        }
        let d = self.base.len() as i32 - 1;
        Ok(linalg::outer(&w, &w) * (mu / r.powi(d + 2)))
    }
}

pub fn rigidity_form<F: Fn(&[f64]) -> f64 + Sync>(mu: F, base: &[f64], grid: &GridSpec) -> Result<SymTensorField> {
    SymTensorField::sample(grid, &RigidityForm { mu, base: base.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finite_difference_derivatives_match_analytic() {
        let th = ExpCosh;
        let fd = FnTheta::new(2, |z: &[f64]| z[0].exp() * z[1].cosh());
        let z = [0.3, -0.7];
        let (ga, gf) = (gradient(&th, &z), gradient(&fd, &z));
        for k in 0..2 {
            assert_relative_eq!(ga[k], gf[k], epsilon = 1e-10);
        }
        assert!((hessian(&th, &z) - hessian(&fd, &z)).amax() < 1e-7);
    }

    #[test]
    fn quadratic_gives_identity() {
        let g = GridSpec::uniform((0.0, 1.0), 3, &[(0.0, 1.0)], &[3]).unwrap();
        let st = cofactor_hessian(&Quadratic { n: 2, c: 1.0 }, &g).unwrap();
        assert!(st.certificate.is_convex());
        for c in 0..g.len() {
            assert_eq!(st.field.get(c), Mat::identity(2, 2));
        }
    }

    #[test]
    fn quartic_cofactor_is_diagonal_swap() {
        let s = CofactorHessian { theta: Quartic { n: 2 } }.eval(&[0.5, 2.0]).unwrap();
        assert_eq!(s, Mat::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.25]));
    }

    #[test]
    fn polynomial_matches_quartic() {
        let p = Polynomial::new(
            2,
            vec![Monomial { coef: 1.0 / 12.0, powers: vec![4, 0] }, Monomial { coef: 1.0 / 12.0, powers: vec![0, 4] }],
        )
        .unwrap();
        let z = [0.4, -1.3];
        assert!((p.hessian(&z).unwrap() - Quartic { n: 2 }.hessian(&z).unwrap()).amax() < 1e-14);
    }

    #[test]
    fn periodic_perturbed_hessian_matches_fd() {
        let p = PeriodicPerturbed { n: 3, eps: 0.01, period: 1.0 };
        let fd = FnTheta::new(3, |z: &[f64]| p.value(z));
        let z = [0.1, 0.27, -0.4];
        assert!((p.hessian(&z).unwrap() - hessian(&fd, &z)).amax() < 1e-6);
    }

    #[test]
    fn transformed_spot_value() {
        let map = ProjectiveMap::new(1.0).unwrap();
        let tp = TransformedPotential { inner: Quadratic { n: 2, c: 1.0 }, map };
        assert_relative_eq!(tp.value(&[0.5, 1.0]), 1.25, epsilon = 1e-15);
        assert!(tp.value(&[1.5, 0.0]).is_nan());
    }

    #[test]
    fn transformed_derivatives_match_fd() {
        let map = ProjectiveMap::new(0.6).unwrap();
        let tp = TransformedPotential { inner: ExpCosh, map };
        let fd = FnTheta::new(2, |q: &[f64]| tp.value(q));
        let q = [0.4, 0.3];
        let (ga, gf) = (tp.gradient(&q).unwrap(), gradient(&fd, &q));
        for k in 0..2 {
            assert_relative_eq!(ga[k], gf[k], epsilon = 1e-9);
        }
        assert!((tp.hessian(&q).unwrap() - hessian(&fd, &q)).amax() < 1e-6);
    }

    #[test]
    fn unit_cone_has_mass_pi() {
        let pot =
            HomogeneousPotential::new(NormCone { c: 1.0, base: vec![0.0, 0.0] }, vec![0.0, 0.0], 1.0, 1e-12).unwrap();
        let dm = determinantal_mass(&pot, 10_000).unwrap();
        assert!(dm.simple);
        assert!((dm.value - std::f64::consts::PI).abs() < 1e-4);
        assert!((dm.hull_area - dm.shoelace_area).abs() < 1e-12);
    }

    #[test]
    fn self_intersection_is_detected() {
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple_polygon(&bowtie));
        assert!(is_simple_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]));
        assert_relative_eq!(shoelace(&convex_hull(&bowtie)).abs(), 1.0);
    }

    #[test]
    fn rigidity_form_rejects_base_point() {
        let rf = RigidityForm { mu: |_: &[f64]| 1.0, base: vec![0.0, 0.0] };
        assert!(matches!(rf.eval(&[0.0, 0.0]), Err(Error::SingularPoint)));
        let s = rf.eval(&[3.0, 4.0]).unwrap();
        assert_relative_eq!(s[(0, 1)], 12.0 / 125.0, epsilon = 1e-15);
    }

    #[test]
    fn non_homogeneous_potential_is_rejected() {
        assert!(HomogeneousPotential::new(Quadratic { n: 2, c: 1.0 }, vec![0.0, 0.0], 1.0, 1e-8).is_err());
    }
}
