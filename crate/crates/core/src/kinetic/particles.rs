//! Weighted particle representation of collisionless kinetic flows, and
//! monokinetic beam superpositions with closed-form moments.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{KineticDensity, VelocityMeasure};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Lattice};
use crate::linalg::{self, packed_len, Mat};
use crate::projective::ProjectiveMap;
use crate::stats::fit_polynomial;
use crate::tensor_field::{SymTensorField, TensorSource};

/// Particles `(x_i, xi_i)` with weights `w_i` at a common time `t`.
///
/// `vol_i` is the phase-space volume each particle stands for; it enters
/// only the entropy `sum w log(w / vol)`. Free transport and the projective
/// map both have unit phase-space Jacobian, so weights and volumes never
/// change.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    d: usize,
    t: f64,
    x: Vec<f64>,
    xi: Vec<f64>,
    w: Vec<f64>,
    vol: Vec<f64>,
    component: Vec<usize>,
}

/// Least-squares quadratic fit of `I(t)` against its expected coefficients
/// `I(0) + t sum w x.xi + t^2 E_kin`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InertiaRegression {
    pub times: Vec<f64>,
    pub inertia: Vec<f64>,
    pub fitted: [f64; 3],
    pub expected: [f64; 3],
    /// Largest coefficient mismatch relative to the largest expected coefficient.
    pub max_rel_error: f64,
}

/// Weak form `int S : grad phi` of the divergence for one test function,
/// row by row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakResidual {
    pub rows: Vec<f64>,
    pub scale: f64,
}

impl WeakResidual {
    pub fn relative(&self) -> f64 {
        let m = self.rows.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        if self.scale > 0.0 {
            m / self.scale
        } else {
            m
        }
    }
}

impl ParticleState {
    pub fn new(d: usize, t: f64, x: Vec<f64>, xi: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = w.len();
        Self::with_details(d, t, x, xi, w, vec![1.0; n], vec![0; n])
    }

    pub fn with_details(
        d: usize,
        t: f64,
        x: Vec<f64>,
        xi: Vec<f64>,
        w: Vec<f64>,
        vol: Vec<f64>,
        component: Vec<usize>,
    ) -> Result<Self> {
        let n = w.len();
        if d == 0 || x.len() != d * n || xi.len() != d * n || vol.len() != n || component.len() != n {
            return Err(Error::InvalidInput("particle arrays disagree in length".into()));
        }
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || vol.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("particle weights must be nonnegative and volumes positive".into()));
        }
        if x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("particle coordinates must be finite".into()));
        }
        Ok(Self { d, t, x, xi, w, vol, component })
    }

    /// One particle per phase-lattice cell center, weighted by `f vol`.
    /// Cells where `f` vanishes are skipped.
    pub fn from_density<K: KineticDensity + ?Sized>(density: &K, t: f64, phase: &Lattice) -> Result<Self> {
        let d = density.d();
        if phase.ndim() != 2 * d {
            return Err(Error::DimensionMismatch { expected: 2 * d, found: phase.ndim() });
        }
        let vol = phase.cell_volume();
        let cells: Vec<(Vec<f64>, f64)> = (0..phase.len())
            .into_par_iter()
            .filter_map(|c| {
                let p = phase.center(c);
                let f = density.value(t, &p[..d], &p[d..]);
                (f > 0.0).then_some((p, f * vol))
            })
            .collect();
        let mut x = Vec::with_capacity(cells.len() * d);
        let mut xi = Vec::with_capacity(cells.len() * d);
        let mut w = Vec::with_capacity(cells.len());
        for (p, wi) in cells {
            x.extend_from_slice(&p[..d]);
            xi.extend_from_slice(&p[d..]);
            w.push(wi);
        }
        let n = w.len();
        Self::with_details(d, t, x, xi, w, vec![vol; n], vec![0; n])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.xi[i * self.d..(i + 1) * self.d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Exact collisionless evolution to time `t`.
    pub fn free_transport(&self, t: f64) -> Self {
        let dt = t - self.t;
        let x = self.x.iter().zip(&self.xi).map(|(a, v)| a + dt * v).collect();
        Self { t, x, ..self.clone() }
    }

    /// Image under `(t, x, xi) -> (t / L, x / L, L xi - alpha x)`, `L = 1 + alpha t`.
    pub fn push_forward(&self, map: &ProjectiveMap) -> Result<Self> {
        let l = map.factor(self.t);
        if !(l > 0.0) {
            return Err(Error::DegenerateMap { t: self.t, factor: l });
        }
        let a = map.alpha();
        let x = self.x.iter().map(|v| v / l).collect();
        let xi = self.xi.iter().zip(&self.x).map(|(v, p)| l * v - a * p).collect();
        Ok(Self { t: self.t / l, x, xi, ..self.clone() })
    }

    pub fn mass(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn momentum(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for i in 0..self.len() {
            m.iter_mut().zip(self.velocity(i)).for_each(|(a, v)| *a += self.w[i] * v);
        }
        m
    }

    pub fn kinetic_energy(&self) -> f64 {
        (0..self.len()).map(|i| 0.5 * self.w[i] * sq(self.velocity(i))).sum()
    }

    /// `sum w log(w / vol)`, the discrete `int f log f`.
    pub fn entropy(&self) -> f64 {
        self.w.iter().zip(&self.vol).filter(|(w, _)| **w > 0.0).map(|(w, v)| w * (w / v).ln()).sum()
    }

    /// `sum w |x|^2 / 2`.
    pub fn inertia(&self) -> f64 {
        (0..self.len()).map(|i| 0.5 * self.w[i] * sq(self.position(i))).sum()
    }

    /// `sum w x . xi`.
    pub fn inertia_rate(&self) -> f64 {
        (0..self.len()).map(|i| self.w[i] * dot(self.position(i), self.velocity(i))).sum()
    }

    /// `1/4 sum_ij w_i w_j |x_i - x_j|^2`, through the center of mass.
    pub fn pair_inertia(&self) -> f64 {
        let m = self.mass();
        let mut c = vec![0.0; self.d];
        for i in 0..self.len() {
            c.iter_mut().zip(self.position(i)).for_each(|(a, v)| *a += self.w[i] * v);
        }
        0.5 * (m * 2.0 * self.inertia() - sq(&c))
    }

    /// Fits `I(t)` at `times` by a quadratic.
    pub fn inertia_regression(&self, times: &[f64]) -> Result<InertiaRegression> {
        let inertia: Vec<f64> = times.iter().map(|&t| self.free_transport(t).inertia()).collect();
        let c = fit_polynomial(times, &inertia, 2)?;
        let base = self.free_transport(0.0);
        let expected = [base.inertia(), base.inertia_rate(), base.kinetic_energy()];
        let scale = expected.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let max_rel_error = (0..3).map(|k| (c[k] - expected[k]).abs()).fold(0.0, f64::max) / scale;
        Ok(InertiaRegression { times: times.to_vec(), inertia, fitted: [c[0], c[1], c[2]], expected, max_rel_error })
    }

    /// Particles inside the spatial box `[lo, hi)` at the current time, as a
    /// velocity measure with weights divided by the box volume.
    pub fn velocity_measure_in(&self, lo: &[f64], hi: &[f64]) -> Result<VelocityMeasure> {
        let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
        let mut xi = Vec::new();
        let mut w = Vec::new();
        let mut comp = Vec::new();
        for i in 0..self.len() {
            let p = self.position(i);
            if p.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= *a && *v < *b) {
                xi.extend_from_slice(self.velocity(i));
                w.push(self.w[i] / vol);
                comp.push(self.component[i]);
            }
        }
        VelocityMeasure::with_components(self.d, xi, w, comp)
    }

    /// Moment tensor by binning: at every time-slice center the particles are
    /// transported and their `w (1, xi) (1, xi)^T` summed per spatial cell.
    pub fn moment_tensor(&self, grid: &GridSpec) -> Result<SymTensorField> {
        if grid.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: grid.d() });
        }
        let n = self.d + 1;
        let p = packed_len(n);
        let slice = grid.slice_len();
        let space = grid.space();
        let inv_vol = 1.0 / grid.spatial_cell_volume();
        let mut data = vec![0.0; grid.len() * p];
        data.par_chunks_mut(slice * p).enumerate().for_each(|(k, out)| {
            let t = grid.time_axis().center(k);
            let dt = t - self.t;
            let mut y = vec![0.0; self.d];
            'particles: for i in 0..self.len() {
                let v = self.velocity(i);
                let mut cell = 0;
                for a in 0..self.d {
                    y[a] = self.position(i)[a] + dt * v[a];
                    match space.axis(a).locate(y[a]) {
                        Some(j) => cell = cell * space.axis(a).n + j,
                        None => continue 'particles,
                    }
                }
                let o = &mut out[cell * p..(cell + 1) * p];
                let mut idx = 0;
                for r in 0..n {
                    let zr = if r == 0 { 1.0 } else { v[r - 1] };
                    for c in r..n {
                        let zc = if c == 0 { 1.0 } else { v[c - 1] };
                        o[idx] += self.w[i] * zr * zc * inv_vol;
                        idx += 1;
                    }
                }
            }
        });
        SymTensorField::from_packed(grid.clone(), data)
    }

    /// `int int S : grad phi dt dx` for `phi = sin^2(pi (t - t0) / tau) exp(-|x - c|^2 / (2 l^2))`
    /// on `[t0, t0 + tau]`, evaluated along each trajectory by Simpson's rule.
    pub fn weak_residual(&self, tau: f64, center: &[f64], l: f64, n_steps: usize) -> Result<WeakResidual> {
        if center.len() != self.d || !(tau > 0.0 && l > 0.0) {
            return Err(Error::InvalidInput("weak residual needs a d-dimensional center and positive tau, l".into()));
        }
        let n_steps = n_steps.max(2) & !1;
        let h = tau / n_steps as f64;
        let per: Vec<(Vec<f64>, f64)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (x0, v) = (self.position(i), self.velocity(i));
                let (mut total, mut abs) = (0.0, 0.0);
                for k in 0..=n_steps {
                    let s = k as f64 * h;
                    let wk = if k == 0 || k == n_steps {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let time = (PI * s / tau).sin().powi(2);
                    let dtime = PI / tau * (2.0 * PI * s / tau).sin();
                    let mut r2 = 0.0;
                    let mut drift = 0.0;
                    for a in 0..self.d {
                        let z = x0[a] + s * v[a] - center[a];
                        r2 += z * z;
                        drift -= v[a] * z / (l * l);
                    }
                    let g = (-0.5 * r2 / (l * l)).exp();
                    let (pt, px) = (dtime * g, time * g * drift);
                    total += wk * (pt + px);
                    abs += wk * (pt.abs() + px.abs());
                }
                let z = linalg::augmented(v);
                (
                    z.iter().map(|c| self.w[i] * c * total * h / 3.0).collect(),
                    self.w[i] * linalg::norm(z.as_slice()) * abs * h / 3.0,
                )
            })
            .collect();
        let mut rows = vec![0.0; self.d + 1];
        let mut scale = 0.0;
        for (r, s) in per {
            rows.iter_mut().zip(r).for_each(|(a, b)| *a += b);
            scale += s;
        }
        Ok(WeakResidual { rows, scale })
    }

    /// CSV with columns `x1..xd, xi1..xid, w, vol, component` and a leading
    /// `# t = ...` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# t = {}", self.t)?;
        let mut header: Vec<String> = (1..=self.d).map(|k| format!("x{k}")).collect();
        header.extend((1..=self.d).map(|k| format!("xi{k}")));
        header.extend(["w".into(), "vol".into(), "component".into()]);
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.position(i).iter().chain(self.velocity(i)).map(|v| v.to_string()).collect();
            row.extend([self.w[i].to_string(), self.vol[i].to_string(), self.component[i].to_string()]);
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut t = 0.0;
        let mut d = None;
        let (mut x, mut xi, mut w, mut vol, mut comp) = (vec![], vec![], vec![], vec![], vec![]);
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("t =") {
                    t = v.trim().parse().map_err(|_| Error::Format(format!("line {}: bad time", lineno + 1)))?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let Some(dim) = d else {
                if fields.len() < 5 || (fields.len() - 3) % 2 != 0 {
                    return Err(Error::Format(format!("line {}: unexpected header", lineno + 1)));
                }
                d = Some((fields.len() - 3) / 2);
                continue;
            };
            if fields.len() != 2 * dim + 3 {
                return Err(Error::Format(format!("line {}: expected {} columns", lineno + 1, 2 * dim + 3)));
            }
            let num =
                |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("line {}: bad number '{s}'", lineno + 1)));
            for k in 0..dim {
                x.push(num(fields[k])?);
                xi.push(num(fields[dim + k])?);
            }
            w.push(num(fields[2 * dim])?);
            vol.push(num(fields[2 * dim + 1])?);
            comp.push(
                fields[2 * dim + 2]
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}: bad component", lineno + 1)))?,
            );
        }
        let d = d.ok_or_else(|| Error::Format("missing header".into()))?;
        Self::with_details(d, t, x, xi, w, vol, comp)
    }
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// A monokinetic beam: mass `mass` spread as a Gaussian of width `width`
/// around `center` at `t = 0`, all moving with `velocity`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub mass: f64,
    pub center: Vec<f64>,
    pub width: f64,
    pub velocity: Vec<f64>,
}

impl Beam {
    /// Density at `(t, x)` under free transport.
    pub fn density(&self, t: f64, x: &[f64]) -> f64 {
        let d = x.len();
        let r2: f64 = (0..d).map(|k| (x[k] - t * self.velocity[k] - self.center[k]).powi(2)).sum();
        let var = self.width * self.width;
        self.mass * (-0.5 * r2 / var).exp() / (2.0 * PI * var).powf(0.5 * d as f64)
    }
}

/// Superposition of beams; `f = sum rho_b(t, x) delta(xi - xi_b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamState {
    pub beams: Vec<Beam>,
}

impl BeamState {
    pub fn new(beams: Vec<Beam>) -> Result<Self> {
        let d = beams.first().map(|b| b.center.len()).ok_or_else(|| Error::InvalidInput("no beams".into()))?;
        for b in &beams {
            if d == 0 || b.center.len() != d || b.velocity.len() != d || !(b.width > 0.0 && b.mass >= 0.0) {
                return Err(Error::InvalidInput("beams need matching dimensions, positive width and mass >= 0".into()));
            }
        }
        Ok(Self { beams })
    }

    pub fn d(&self) -> usize {
        self.beams[0].center.len()
    }

    pub fn mass(&self) -> f64 {
        self.beams.iter().map(|b| b.mass).sum()
    }

    /// Velocity atoms at `(t, x)`, labelled by beam.
    pub fn velocity_measure(&self, t: f64, x: &[f64]) -> Result<VelocityMeasure> {
        let xi = self.beams.iter().flat_map(|b| b.velocity.iter().copied()).collect();
        let w = self.beams.iter().map(|b| b.density(t, x)).collect();
        VelocityMeasure::with_components(self.d(), xi, w, (0..self.beams.len()).collect())
    }

    /// Quadrature particles: one per cell of `space` and beam, weighted by
    /// the cell mass of the initial profile.
    pub fn particles(&self, space: &Lattice) -> Result<ParticleState> {
        let d = self.d();
        if space.ndim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: space.ndim() });
        }
        let vol = space.cell_volume();
        let (mut x, mut xi, mut w, mut comp) = (vec![], vec![], vec![], vec![]);
        for (b, beam) in self.beams.iter().enumerate() {
            for c in 0..space.len() {
                let p = space.center(c);
                let wi = beam.density(0.0, &p) * vol;
                if wi > 0.0 {
                    x.extend_from_slice(&p);
                    xi.extend_from_slice(&beam.velocity);
                    w.push(wi);
                    comp.push(b);
                }
            }
        }
        let n = w.len();
        ParticleState::with_details(d, 0.0, x, xi, w, vec![vol; n], comp)
    }
}

impl TensorSource for BeamState {
    fn dim(&self) -> usize {
        self.d() + 1
    }
    fn eval(&self, point: &[f64]) -> Result<Mat> {
        let n = self.dim();
        let mut s = Mat::zeros(n, n);
        for b in &self.beams {
            let z = linalg::augmented(&b.velocity);
            s += b.density(point[0], &point[1..]) * &z * z.transpose();
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::projective::push_forward_value;
    use approx::assert_relative_eq;

    fn cloud() -> ParticleState {
        ParticleState::new(1, 0.0, vec![-1.0, 0.5, 2.0, 0.0], vec![0.3, -0.7, 1.1, 0.0], vec![1.0, 2.0, 0.5, 0.25])
            .unwrap()
    }

    #[test]
    fn transport_preserves_mass_energy_entropy() {
        let p = cloud();
        let q = p.free_transport(3.7);
        assert_eq!(p.mass(), q.mass());
        assert_eq!(p.kinetic_energy(), q.kinetic_energy());
        assert_eq!(p.entropy(), q.entropy());
        assert_eq!(p.free_transport(0.0), p);
    }

    #[test]
    fn inertia_is_quadratic_in_time() {
        let r = cloud().inertia_regression(&[0.0, 0.5, 1.0, 2.0, 3.0, 5.0]).unwrap();
        assert!(r.max_rel_error < 1e-10, "{r:?}");
    }

    #[test]
    fn pair_inertia_matches_double_sum() {
        let p = cloud();
        let mut s = 0.0;
        for i in 0..p.len() {
            for j in 0..p.len() {
                s += 0.25 * p.w[i] * p.w[j] * (p.position(i)[0] - p.position(j)[0]).powi(2);
            }
        }
        assert_relative_eq!(p.pair_inertia(), s, max_relative = 1e-12);
    }

    #[test]
    fn push_forward_keeps_mass_and_inverts() {
        let map = ProjectiveMap::new(1.0).unwrap();
        let p = cloud().free_transport(0.5);
        let q = p.push_forward(&map).unwrap();
        assert_eq!(p.mass(), q.mass());
        let back = q.push_forward(&map.inverse()).unwrap();
        for (a, b) in back.x.iter().zip(&p.x).chain(back.xi.iter().zip(&p.xi)) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn beam_tensor_transforms_like_a_point_measure() {
        let beams = BeamState::new(vec![
            Beam { mass: 1.0, center: vec![0.0], width: 0.5, velocity: vec![0.0] },
            Beam { mass: 1.0, center: vec![0.3], width: 0.4, velocity: vec![1.0] },
        ])
        .unwrap();
        let map = ProjectiveMap::new(1.0).unwrap();
        let p = [0.4, 0.2];
        let (q, sbar) = push_forward_value(&map, &p, &beams.eval(&p).unwrap()).unwrap();
        let (img, vm) = beams.velocity_measure(p[0], &p[1..]).unwrap().push_forward(&map, p[0], &p[1..]).unwrap();
        assert_eq!(img, q);
        assert!((vm.moment_matrix() - sbar).abs().max() < 1e-12);
        let det = beams.eval(&p).unwrap().determinant();
        let w: Vec<f64> = beams.beams.iter().map(|b| b.density(p[0], &p[1..])).collect();
        assert_relative_eq!(det, w[0] * w[1], max_relative = 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let p = cloud().free_transport(0.25);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(ParticleState::read_csv(&buf[..]).unwrap(), p);
        assert!(ParticleState::read_csv(&b"x1,xi1,w,vol,component\n1,2,3\n"[..]).is_err());
    }

    #[test]
    fn binned_moments_conserve_mass() {
        let beams =
            BeamState::new(vec![Beam { mass: 2.0, center: vec![0.0], width: 0.3, velocity: vec![0.5] }]).unwrap();
        let p = beams.particles(&Lattice::new(vec![Axis::new(-2.0, 2.0, 200).unwrap()]).unwrap()).unwrap();
        let g = GridSpec::uniform((0.0, 1.0), 4, &[(-3.0, 3.0)], &[60]).unwrap();
        let s = p.moment_tensor(&g).unwrap();
        let m0: f64 = (0..60).map(|c| s.rho(c)).sum::<f64>() * 0.1;
        assert_relative_eq!(m0, p.mass(), max_relative = 1e-12);
        let r = p.weak_residual(1.0, &[0.2], 0.5, 400).unwrap();
        assert!(r.relative() < 1e-10, "{r:?}");
    }
}
