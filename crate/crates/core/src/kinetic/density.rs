//! Kinetic densities evaluated pointwise, their velocity moments and the
//! phase-space grid representation.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::VelocityMeasure;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Lattice};
use crate::interp::{axis_derivative, interpolate};
use crate::io::{FieldDump, FieldKind};
use crate::linalg::{self, packed_len, Mat};
use crate::projective::ProjectiveMap;
use crate::stats::ordered_sum;
use crate::tensor_field::{ScalarField, SymTensorField, TensorSource, VectorField};

/// A nonnegative density `f(t, x, xi)` on `R x R^d x R^d`.
pub trait KineticDensity: Sync {
    fn d(&self) -> usize;
    fn value(&self, t: f64, x: &[f64], xi: &[f64]) -> f64;
}

impl<K: KineticDensity + ?Sized> KineticDensity for &K {
    fn d(&self) -> usize {
        (**self).d()
    }
    fn value(&self, t: f64, x: &[f64], xi: &[f64]) -> f64 {
        (**self).value(t, x, xi)
    }
}

fn normal_pdf(r2: f64, var: f64, d: usize) -> f64 {
    (-0.5 * r2 / var).exp() / (2.0 * PI * var).powf(0.5 * d as f64)
}

/// Free-transport evolution of a Gaussian phase-space packet.
///
/// At `t = 0` positions are normal around `center` with variance
/// `sigma_x^2` and, given `x`, velocities are normal around
/// `u0 + kappa (x - center)` with variance `sigma_xi^2`; later times follow
/// `f(t, x, xi) = f(0, x - t xi, xi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPhaseDensity {
    pub mass: f64,
    pub center: Vec<f64>,
    pub sigma_x: f64,
    pub u0: Vec<f64>,
    #[serde(default)]
    pub kappa: f64,
    pub sigma_xi: f64,
}

impl GaussianPhaseDensity {
    pub fn validate(&self) -> Result<()> {
        if self.center.is_empty() || self.center.len() != self.u0.len() {
            return Err(Error::InvalidInput("center and u0 must have the same nonzero length".into()));
        }
        if !(self.mass >= 0.0 && self.sigma_x > 0.0 && self.sigma_xi > 0.0) {
            return Err(Error::InvalidInput("gaussian phase density needs mass >= 0 and positive widths".into()));
        }
        Ok(())
    }
}

impl KineticDensity for GaussianPhaseDensity {
    fn d(&self) -> usize {
        self.center.len()
    }

    fn value(&self, t: f64, x: &[f64], xi: &[f64]) -> f64 {
        let d = self.d();
        let (mut rx, mut rv) = (0.0, 0.0);
        for k in 0..d {
            let x0 = x[k] - t * xi[k] - self.center[k];
            rx += x0 * x0;
            let v = xi[k] - self.u0[k] - self.kappa * x0;
            rv += v * v;
        }
        self.mass * normal_pdf(rx, self.sigma_x * self.sigma_x, d) * normal_pdf(rv, self.sigma_xi * self.sigma_xi, d)
    }
}

/// A finite sum of Gaussian packets (for instance two counter-streaming beams
/// with a velocity spread).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMixture {
    pub parts: Vec<GaussianPhaseDensity>,
}

impl KineticDensity for PhaseMixture {
    fn d(&self) -> usize {
        self.parts.first().map_or(1, |p| p.d())
    }
    fn value(&self, t: f64, x: &[f64], xi: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.value(t, x, xi)).sum()
    }
}

/// `f(t, x, xi) = f0(x - t xi, xi)` for an initial density read at `t = 0`.
pub struct FreeTransport<K> {
    pub initial: K,
}

impl<K: KineticDensity> KineticDensity for FreeTransport<K> {
    fn d(&self) -> usize {
        self.initial.d()
    }
    fn value(&self, t: f64, x: &[f64], xi: &[f64]) -> f64 {
        let x0: Vec<f64> = x.iter().zip(xi).map(|(a, v)| a - t * v).collect();
        self.initial.value(0.0, &x0, xi)
    }
}

/// `f_bar(s, y, chi) = f(s / (1 - alpha s), y / (1 - alpha s), (1 - alpha s) chi + alpha y)`.
///
/// Outside the image of the map (`1 - alpha s <= 0`) the value is zero.
pub struct KineticPushForward<K> {
    pub density: K,
    pub map: ProjectiveMap,
}

impl<K: KineticDensity> KineticDensity for KineticPushForward<K> {
    fn d(&self) -> usize {
        self.density.d()
    }
    fn value(&self, s: f64, y: &[f64], chi: &[f64]) -> f64 {
        let a = self.map.alpha();
        let j = 1.0 - a * s;
        if !(j > 0.0) {
            return 0.0;
        }
        let x: Vec<f64> = y.iter().map(|v| v / j).collect();
        let xi: Vec<f64> = chi.iter().zip(y).map(|(c, v)| j * c + a * v).collect();
        self.density.value(s / j, &x, &xi)
    }
}

/// Midpoint quadrature of `f` over a velocity lattice, as a tensor source.
pub struct KineticMoments<'a, K: ?Sized> {
    pub density: &'a K,
    pub velocity: &'a Lattice,
}

impl<K: KineticDensity + ?Sized> TensorSource for KineticMoments<'_, K> {
    fn dim(&self) -> usize {
        self.density.d() + 1
    }

    fn eval(&self, point: &[f64]) -> Result<Mat> {
        let n = self.dim();
        let (t, x) = (point[0], &point[1..]);
        let dv = self.velocity.cell_volume();
        let mut acc = vec![0.0; packed_len(n)];
        let mut xi = vec![0.0; n - 1];
        for c in 0..self.velocity.len() {
            self.velocity.center_into(c, &mut xi);
            let f = self.density.value(t, x, &xi);
            if f == 0.0 {
                continue;
            }
            let mut idx = 0;
            for i in 0..n {
                let zi = if i == 0 { 1.0 } else { xi[i - 1] };
                for j in i..n {
                    let zj = if j == 0 { 1.0 } else { xi[j - 1] };
                    acc[idx] += f * zi * zj;
                    idx += 1;
                }
            }
        }
        acc.iter_mut().for_each(|v| *v *= dv);
        Ok(linalg::unpack(n, &acc))
    }
}

fn check_velocity<K: KineticDensity + ?Sized>(density: &K, velocity: &Lattice) -> Result<()> {
    if velocity.ndim() != density.d() {
        return Err(Error::DimensionMismatch { expected: density.d(), found: velocity.ndim() });
    }
    Ok(())
}

/// `S(t, x) = int f (1, xi) (1, xi)^T dxi` at every cell of `grid`.
pub fn moment_tensor<K: KineticDensity + ?Sized>(
    density: &K,
    grid: &GridSpec,
    velocity: &Lattice,
) -> Result<SymTensorField> {
    check_velocity(density, velocity)?;
    if grid.d() != density.d() {
        return Err(Error::DimensionMismatch { expected: density.d(), found: grid.d() });
    }
    SymTensorField::sample(grid, &KineticMoments { density, velocity })
}

/// Velocity atoms of `f(t, x, .)` at the centers of `velocity`.
pub fn velocity_measure<K: KineticDensity + ?Sized>(
    density: &K,
    t: f64,
    x: &[f64],
    velocity: &Lattice,
) -> Result<VelocityMeasure> {
    check_velocity(density, velocity)?;
    let dv = velocity.cell_volume();
    let d = density.d();
    let mut xi = Vec::with_capacity(velocity.len() * d);
    let mut w = Vec::with_capacity(velocity.len());
    let mut v = vec![0.0; d];
    for c in 0..velocity.len() {
        velocity.center_into(c, &mut v);
        let f = density.value(t, x, &v);
        if f > 0.0 {
            xi.extend_from_slice(&v);
            w.push(f * dv);
        }
    }
    VelocityMeasure::new(d, xi, w)
}

/// Per-cell `(eps, q_1, .., q_d)` with `eps = int f |xi|^2 / 2` and
/// `q = int f |xi|^2 xi / 2`.
pub fn energy_flux_fields<K: KineticDensity + ?Sized>(
    density: &K,
    grid: &GridSpec,
    velocity: &Lattice,
) -> Result<VectorField> {
    check_velocity(density, velocity)?;
    let d = density.d();
    let dv = velocity.cell_volume();
    let mut values = vec![0.0; grid.len() * (d + 1)];
    values.par_chunks_mut(d + 1).enumerate().for_each(|(c, out)| {
        let p = grid.center(c);
        let mut xi = vec![0.0; d];
        for v in 0..velocity.len() {
            velocity.center_into(v, &mut xi);
            let f = density.value(p[0], &p[1..], &xi);
            let e = 0.5 * f * xi.iter().map(|a| a * a).sum::<f64>();
            out[0] += e;
            out[1..].iter_mut().zip(&xi).for_each(|(q, a)| *q += e * a);
        }
        out.iter_mut().for_each(|o| *o *= dv);
    });
    Ok(VectorField { grid: grid.clone(), ncomp: d + 1, values })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLawResidual {
    /// `d_t eps + div q` by central differences.
    pub residual: ScalarField,
    pub l1: f64,
    /// `L1` norm of `d_t eps`, for normalization.
    pub scale: f64,
}

/// Discrete residual of the local energy law `d_t eps + div_x q = 0`.
pub fn energy_law_residual<K: KineticDensity + ?Sized>(
    density: &K,
    grid: &GridSpec,
    velocity: &Lattice,
) -> Result<EnergyLawResidual> {
    let fields = energy_flux_fields(density, grid, velocity)?;
    let n = grid.n();
    let lattice = grid.lattice();
    let pairs: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|c| {
            let dt = axis_derivative(lattice, &fields.values, n, 0, 0, c);
            let div: f64 = (1..n).map(|k| axis_derivative(lattice, &fields.values, n, k, k, c)).sum();
            (dt + div, dt)
        })
        .collect();
    let residual = ScalarField { grid: grid.clone(), values: pairs.iter().map(|p| p.0).collect() };
    let vol = grid.cell_volume();
    Ok(EnergyLawResidual {
        l1: residual.l1_norm(),
        scale: pairs.iter().map(|p| p.1.abs()).sum::<f64>() * vol,
        residual,
    })
}

/// The finiteness conditions on initial data: mass, energy, moment of
/// inertia and `int f |log f|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IcbReport {
    pub mass: f64,
    pub energy: f64,
    pub inertia: f64,
    pub entropy_abs: f64,
    pub finite: bool,
}

impl IcbReport {
    pub fn require(self) -> Result<Self> {
        if self.finite && self.mass > 0.0 {
            Ok(self)
        } else {
            Err(Error::InvalidInput(format!("initial data fail the finiteness conditions: {self:?}")))
        }
    }
}

/// Relative mass allowed to be advected in from outside the phase domain.
const SUPPORT_TOL: f64 = 1e-8;

/// `f` sampled at a fixed time on a `2d`-dimensional lattice over `(x, xi)`.
///
/// Values between nodes are multilinear; outside the lattice `f` is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDensity {
    d: usize,
    t: f64,
    lattice: Lattice,
    values: Vec<f64>,
}

impl PhaseDensity {
    pub fn new(d: usize, t: f64, lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if lattice.ndim() != 2 * d {
            return Err(Error::DimensionMismatch { expected: 2 * d, found: lattice.ndim() });
        }
        if values.len() != lattice.len() {
            return Err(Error::DimensionMismatch { expected: lattice.len(), found: values.len() });
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("phase density must be finite and nonnegative".into()));
        }
        Ok(Self { d, t, lattice, values })
    }

    pub fn sample<K: KineticDensity + ?Sized>(density: &K, t: f64, lattice: Lattice) -> Result<Self> {
        let d = density.d();
        let values = (0..lattice.len())
            .into_par_iter()
            .map(|c| {
                let p = lattice.center(c);
                density.value(t, &p[..d], &p[d..])
            })
            .collect();
        Self::new(d, t, lattice, values)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Velocity axes as their own lattice.
    pub fn velocity_lattice(&self) -> Lattice {
        Lattice::new(self.lattice.axes()[self.d..].to_vec()).expect("velocity axes are valid")
    }

    fn integrate(&self, g: impl Fn(&[f64], f64) -> f64 + Sync) -> f64 {
        let vol = self.lattice.cell_volume();
        ordered_sum((0..self.lattice.len()).into_par_iter().map(|c| g(&self.lattice.center(c), self.values[c]))) * vol
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, f| f)
    }

    pub fn icb(&self) -> IcbReport {
        let d = self.d;
        let mass = self.mass();
        let energy = self.integrate(|p, f| 0.5 * f * p[d..].iter().map(|v| v * v).sum::<f64>());
        let inertia = self.integrate(|p, f| 0.5 * f * p[..d].iter().map(|v| v * v).sum::<f64>());
        let entropy_abs = self.integrate(|_, f| if f > 0.0 { (f * f.ln()).abs() } else { 0.0 });
        let finite = [mass, energy, inertia, entropy_abs].iter().all(|v| v.is_finite());
        IcbReport { mass, energy, inertia, entropy_abs, finite }
    }

    /// Semi-Lagrangian free transport to time `t`: each node takes the
    /// interpolated value at its departure point `x - (t - t0) xi`.
    pub fn free_transport(&self, t: f64) -> Result<Self> {
        let d = self.d;
        let dt = t - self.t;
        let vol = self.lattice.cell_volume();
        let res: Vec<(f64, f64)> = (0..self.lattice.len())
            .into_par_iter()
            .map(|c| {
                let mut p = self.lattice.center(c);
                for k in 0..d {
                    p[k] -= dt * p[d + k];
                }
                if self.lattice.contains(&p) {
                    (self.interp(&p), 0.0)
                } else {
                    // mass that would have to come from outside the domain
                    for k in 0..d {
                        let a = self.lattice.axis(k);
                        p[k] = p[k].clamp(a.center(0), a.center(a.n - 1));
                    }
                    (0.0, self.interp(&p))
                }
            })
            .collect();
        let outflow = ordered_sum((0..self.lattice.len()).into_par_iter().filter(|&c| self.values[c] > 0.0).map(|c| {
            let mut p = self.lattice.center(c);
            for k in 0..d {
                p[k] += dt * p[d + k];
            }
            if self.lattice.contains(&p) {
                0.0
            } else {
                self.values[c]
            }
        }));
        let lost_mass = (outflow + res.iter().map(|r| r.1).sum::<f64>()) * vol;
        if lost_mass > SUPPORT_TOL * self.mass().max(f64::MIN_POSITIVE) {
            return Err(Error::SupportLeftDomain { lost_mass });
        }
        Ok(Self { d, t, lattice: self.lattice.clone(), values: res.into_iter().map(|r| r.0).collect() })
    }

    fn interp(&self, p: &[f64]) -> f64 {
        let mut out = [0.0];
        match interpolate(&self.lattice, &self.values, 1, p, &mut out) {
            Ok(()) => out[0].max(0.0),
            Err(_) => 0.0,
        }
    }

    pub fn to_dump(&self) -> Result<FieldDump> {
        FieldDump::new(FieldKind::PhaseDensity, self.d, self.lattice.clone(), 1, self.values.clone())
    }

    pub fn from_dump(dump: FieldDump, t: f64) -> Result<Self> {
        if dump.kind != FieldKind::PhaseDensity || dump.ncomp != 1 {
            return Err(Error::Format(format!("expected a phase-density dump, found {}", dump.kind.name())));
        }
        Self::new(dump.d, t, dump.lattice, dump.data)
    }
}

/// Free transport of the stored snapshot to any time.
impl KineticDensity for PhaseDensity {
    fn d(&self) -> usize {
        self.d
    }
    fn value(&self, t: f64, x: &[f64], xi: &[f64]) -> f64 {
        let mut p: Vec<f64> = x.iter().zip(xi).map(|(a, v)| a - (t - self.t) * v).collect();
        p.extend_from_slice(xi);
        if !self.lattice.contains(&p) {
            return 0.0;
        }
        self.interp(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::tensor_field::discrete_divergence;
    use approx::assert_relative_eq;

    fn packet() -> GaussianPhaseDensity {
        GaussianPhaseDensity { mass: 1.3, center: vec![0.2], sigma_x: 0.5, u0: vec![0.3], kappa: 0.4, sigma_xi: 0.35 }
    }

    fn vlat(lo: f64, hi: f64, n: usize) -> Lattice {
        Lattice::new(vec![Axis::new(lo, hi, n).unwrap()]).unwrap()
    }

    #[test]
    fn velocity_quadrature_recovers_mass_and_symmetry() {
        let f = GaussianPhaseDensity {
            mass: 1.0,
            center: vec![0.0],
            sigma_x: 1.0,
            u0: vec![0.0],
            kappa: 0.0,
            sigma_xi: 0.5,
        };
        let s = KineticMoments { density: &f, velocity: &vlat(-5.0, 5.0, 200) }.eval(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(s[(0, 0)], 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-10);
        assert!(s[(0, 1)].abs() < 1e-14);
        assert_relative_eq!(s[(1, 1)], 0.25 * s[(0, 0)], max_relative = 1e-10);
    }

    #[test]
    fn free_transport_wrapper_matches_packet_evolution() {
        let f = packet();
        let ft = FreeTransport { initial: f.clone() };
        for (t, x, v) in [(0.7, 0.1, -0.4), (1.5, 2.0, 0.9)] {
            assert_relative_eq!(ft.value(t, &[x], &[v]), f.value(t, &[x], &[v]), max_relative = 1e-14);
        }
    }

    #[test]
    fn push_forward_with_zero_alpha_is_identity() {
        let f = packet();
        let pf = KineticPushForward { density: f.clone(), map: ProjectiveMap::identity() };
        assert_eq!(pf.value(0.4, &[0.3], &[0.1]), f.value(0.4, &[0.3], &[0.1]));
    }

    #[test]
    fn moment_tensor_is_nearly_divergence_free() {
        let f = packet();
        let v = vlat(-4.0, 4.5, 120);
        let err = |n: usize| {
            let g = GridSpec::uniform((0.0, 1.0), n, &[(-2.0, 2.5)], &[n]).unwrap();
            let div = discrete_divergence(&moment_tensor(&f, &g, &v).unwrap()).unwrap();
            // interior only
            let mut e = 0.0;
            for c in 0..g.len() {
                let idx = g.lattice().multi_index(c);
                if idx.iter().zip(g.lattice().shape()).all(|(&i, m)| i > 0 && i + 1 < m) {
                    e += div.cell(c).iter().map(|r| r.abs()).sum::<f64>();
                }
            }
            e * g.cell_volume()
        };
        let (e1, e2) = (err(20), err(40));
        assert!(e2 < 0.3 * e1, "{e1} {e2}");
    }

    #[test]
    fn semi_lagrangian_transport_tracks_exact_solution() {
        let f = packet();
        let lat = Lattice::new(vec![Axis::new(-5.0, 6.0, 220).unwrap(), Axis::new(-2.5, 3.0, 110).unwrap()]).unwrap();
        let p0 = PhaseDensity::sample(&f, 0.0, lat.clone()).unwrap();
        let p1 = p0.free_transport(1.0).unwrap();
        let exact = PhaseDensity::sample(&f, 1.0, lat).unwrap();
        let err: f64 = p1.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
            * p1.lattice().cell_volume();
        assert!(err < 2e-3 * f.mass, "{err}");
        assert_relative_eq!(p1.mass(), f.mass, max_relative = 1e-3);
        let icb = p0.icb();
        assert!(icb.finite && icb.entropy_abs > 0.0);
    }

    #[test]
    fn transport_out_of_domain_is_reported() {
        let f = packet();
        let lat = Lattice::new(vec![Axis::new(-3.0, 3.0, 60).unwrap(), Axis::new(-2.5, 3.0, 50).unwrap()]).unwrap();
        let p0 = PhaseDensity::sample(&f, 0.0, lat).unwrap();
        assert!(matches!(p0.free_transport(20.0), Err(Error::SupportLeftDomain { .. })));
    }
}
