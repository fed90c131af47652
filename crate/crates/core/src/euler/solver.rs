//! Unsplit finite-volume HLL scheme with outflow boundaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Cons, Flow, Gas, GasModel, GasState, Primitive, StepRecord, MAX_D};
use crate::error::{Error, Result};
use crate::grid::Lattice;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Piecewise-constant states, forward Euler in time.
    #[default]
    FirstOrder,
    /// Minmod-limited linear reconstruction of `(rho, u, p)` with two-stage SSP Runge-Kutta.
    Muscl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub t0: f64,
    pub t_end: f64,
    /// Number of time steps (fixed step size).
    pub n_t: usize,
    pub scheme: Scheme,
    pub cfl_limit: f64,
    /// A level is stored every `store_every` steps; must divide `n_t`.
    pub store_every: usize,
    /// Width of the boundary band that must stay free of gas.
    pub guard_cells: usize,
    /// Density, relative to the initial maximum, counted as gas by the guard.
    pub support_threshold: f64,
    /// Cells with `rho <= vacuum` carry no velocity or pressure.
    pub vacuum: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 1.0,
            n_t: 100,
            scheme: Scheme::FirstOrder,
            cfl_limit: 0.45,
            store_every: 1,
            guard_cells: 10,
            support_threshold: 1e-6,
            vacuum: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn new(t_end: f64, n_t: usize) -> Self {
        Self { t_end, n_t, ..Self::default() }
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_t as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t0) || self.n_t == 0 {
            return Err(Error::InvalidInput("need t_end > t0 and n_t > 0".into()));
        }
        if self.store_every == 0 || self.n_t % self.store_every != 0 {
            return Err(Error::InvalidInput(format!(
                "store_every = {} must divide n_t = {}",
                self.store_every, self.n_t
            )));
        }
        if !(self.cfl_limit > 0.0 && self.cfl_limit <= 0.5) {
            return Err(Error::InvalidInput(format!("cfl_limit must be in (0, 0.5], got {}", self.cfl_limit)));
        }
        Ok(())
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

struct Stepper<'a> {
    gas: Gas,
    space: &'a Lattice,
    nc: usize,
    h: Vec<f64>,
    vacuum: f64,
}

impl Stepper<'_> {
    fn d(&self) -> usize {
        self.gas.d
    }

    fn prim_vector(&self, w: &Primitive) -> [f64; MAX_D + 2] {
        let d = self.d();
        let mut q = [0.0; MAX_D + 2];
        q[0] = w.rho;
        q[1..1 + d].copy_from_slice(&w.u[..d]);
        q[1 + d] = w.p;
        q
    }

    fn prim_from_vector(&self, q: &[f64; MAX_D + 2]) -> Primitive {
        let d = self.d();
        self.gas.primitive(q[0], &q[1..1 + d], q[1 + d])
    }

    /// HLL flux with Davis wave speeds; a vacuum side gets the rarefaction
    /// front speed `u +- 2c/(gamma - 1)`. Returns the flux and the fastest speed.
    fn hll(&self, wl: &Primitive, wr: &Primitive, axis: usize) -> (Cons, f64) {
        let vl = wl.rho <= self.vacuum;
        let vr = wr.rho <= self.vacuum;
        if vl && vr {
            return ([0.0; MAX_D + 2], 0.0);
        }
        let g = &self.gas;
        let (cl, cr) = (g.sound_speed(wl), g.sound_speed(wr));
        let (ul, ur) = (wl.u[axis], wr.u[axis]);
        let front = 2.0 / (g.gamma - 1.0);
        let (sl, sr) = if vr {
            (ul - cl, ul + front * cl)
        } else if vl {
            (ur - front * cr, ur + cr)
        } else {
            ((ul - cl).min(ur - cr), (ul + cl).max(ur + cr))
        };
        let speed = sl.abs().max(sr.abs());
        let cons_l = g.to_conserved(wl);
        let cons_r = g.to_conserved(wr);
        let fl = g.flux(wl, &cons_l, axis);
        let fr = g.flux(wr, &cons_r, axis);
        let mut f = [0.0; MAX_D + 2];
        if sl >= 0.0 {
            f = fl;
        } else if sr <= 0.0 {
            f = fr;
        } else {
            let inv = 1.0 / (sr - sl);
            for i in 0..self.nc {
                f[i] = (sr * fl[i] - sl * fr[i] + sl * sr * (cons_r[i] - cons_l[i])) * inv;
            }
        }
        (f, speed)
    }

    fn boundary_flux(&self, w: &Primitive, axis: usize) -> (Cons, f64) {
        if w.rho <= self.vacuum {
            return ([0.0; MAX_D + 2], 0.0);
        }
        let c = self.gas.to_conserved(w);
        (self.gas.flux(w, &c, axis), w.u[axis].abs() + self.gas.sound_speed(w))
    }

    fn primitives(&self, cons: &[f64]) -> Vec<Primitive> {
        cons.par_chunks(self.nc).map(|c| self.gas.to_primitive(c, self.vacuum)).collect()
    }

    /// Limited slopes of the primitive vector along each axis (`d` entries per cell).
    fn slopes(&self, prim: &[Primitive]) -> Vec<[f64; MAX_D + 2]> {
        let d = self.d();
        let n = self.space.len();
        (0..n * d)
            .into_par_iter()
            .map(|i| {
                let (c, k) = (i / d, i % d);
                let a = self.space.axis(k);
                let stride = self.space.stride(k);
                let idx = (c / stride) % a.n;
                let mut s = [0.0; MAX_D + 2];
                if idx == 0 || idx + 1 == a.n {
                    return s;
                }
                let (wm, w0, wp) = (&prim[c - stride], &prim[c], &prim[c + stride]);
                if wm.rho <= self.vacuum || w0.rho <= self.vacuum || wp.rho <= self.vacuum {
                    return s;
                }
                let (qm, q0, qp) = (self.prim_vector(wm), self.prim_vector(w0), self.prim_vector(wp));
                for j in 0..d + 2 {
                    s[j] = minmod(q0[j] - qm[j], qp[j] - q0[j]);
                }
                s
            })
            .collect()
    }

    /// Face value of cell `c` on side `sign = +-1` along `axis`.
    fn face_state(
        &self,
        prim: &[Primitive],
        slopes: Option<&[[f64; MAX_D + 2]]>,
        c: usize,
        axis: usize,
        sign: f64,
    ) -> Primitive {
        let Some(slopes) = slopes else { return prim[c] };
        let s = &slopes[c * self.d() + axis];
        if s.iter().all(|v| *v == 0.0) {
            return prim[c];
        }
        let mut q = self.prim_vector(&prim[c]);
        for j in 0..self.d() + 2 {
            q[j] += 0.5 * sign * s[j];
        }
        if q[0] <= self.vacuum || q[1 + self.d()] < 0.0 {
            return prim[c];
        }
        self.prim_from_vector(&q)
    }

    /// Writes `dU/dt` into `out` and returns `sum_k max|S|_k / h_k`.
    fn rhs(&self, cons: &[f64], muscl: bool, out: &mut [f64]) -> f64 {
        let d = self.d();
        let nc = self.nc;
        let prim = self.primitives(cons);
        let slopes = muscl.then(|| self.slopes(&prim));
        let slopes = slopes.as_deref();
        let speeds = out
            .par_chunks_mut(nc)
            .enumerate()
            .map(|(c, o)| {
                o.iter_mut().for_each(|v| *v = 0.0);
                let mut smax = [0.0f64; MAX_D];
                for k in 0..d {
                    let a = self.space.axis(k);
                    let stride = self.space.stride(k);
                    let idx = (c / stride) % a.n;
                    let here_l = self.face_state(&prim, slopes, c, k, -1.0);
                    let here_r = self.face_state(&prim, slopes, c, k, 1.0);
                    let (fl, sl) = if idx == 0 {
                        self.boundary_flux(&here_l, k)
                    } else {
                        self.hll(&self.face_state(&prim, slopes, c - stride, k, 1.0), &here_l, k)
                    };
                    let (fr, sr) = if idx + 1 == a.n {
                        self.boundary_flux(&here_r, k)
                    } else {
                        self.hll(&here_r, &self.face_state(&prim, slopes, c + stride, k, -1.0), k)
                    };
                    for i in 0..nc {
                        o[i] -= (fr[i] - fl[i]) / self.h[k];
                    }
                    smax[k] = sl.max(sr);
                }
                smax
            })
            .reduce(
                || [0.0; MAX_D],
                |a, b| {
                    let mut m = [0.0; MAX_D];
                    for k in 0..MAX_D {
                        m[k] = a[k].max(b[k]);
                    }
                    m
                },
            );
        (0..d).map(|k| speeds[k] / self.h[k]).sum()
    }

    /// Rescales the momentum of near-vacuum cells (`rho < floor`) whose
    /// kinetic energy exceeds the total, so that `p = 0`. Mass and energy are
    /// untouched. Returns the number of repaired cells.
    fn repair_near_vacuum(&self, cons: &mut [f64], floor: f64) -> usize {
        if !matches!(self.gas.model, GasModel::Full) {
            return 0;
        }
        let d = self.d();
        cons.par_chunks_mut(self.nc)
            .map(|c| {
                if !(c[0] > 0.0 && c[0] < floor) {
                    return 0;
                }
                let kin = 0.5 * (1..=d).map(|k| c[k] * c[k]).sum::<f64>() / c[0];
                if c[1 + d] >= kin {
                    return 0;
                }
                let f = if kin > 0.0 { (c[1 + d].max(0.0) / kin).sqrt() } else { 0.0 };
                (1..=d).for_each(|k| c[k] *= f);
                1
            })
            .sum()
    }

    fn admissible(&self, cons: &[f64]) -> bool {
        let d = self.d();
        cons.par_chunks(self.nc).all(|c| {
            if !(c[0] >= 0.0) {
                return false;
            }
            match self.gas.model {
                GasModel::Isentropic { .. } => true,
                GasModel::Full => {
                    let kin = if c[0] > 0.0 { 0.5 * (1..=d).map(|k| c[k] * c[k]).sum::<f64>() / c[0] } else { 0.0 };
                    c[1 + d] - kin >= -1e-12 * c[1 + d].abs().max(1e-300)
                }
            }
        })
    }
}

/// Total energy `int (rho |u|^2 / 2 + rho e)` of a conserved-variable array.
pub fn total_energy(gas: &Gas, space: &Lattice, cons: &[f64]) -> f64 {
    let d = gas.d;
    let nc = gas.ncons();
    let sum = crate::stats::ordered_sum(cons.par_chunks(nc).map(|c| match gas.model {
        GasModel::Full => c[1 + d],
        GasModel::Isentropic { a } => {
            if c[0] > 0.0 {
                let kin = 0.5 * (1..=d).map(|k| c[k] * c[k]).sum::<f64>() / c[0];
                kin + a * c[0].powf(gas.gamma) / (gas.gamma - 1.0)
            } else {
                0.0
            }
        }
    }));
    sum * space.cell_volume()
}

fn total_mass(nc: usize, space: &Lattice, cons: &[f64]) -> f64 {
    cons.iter().step_by(nc).sum::<f64>() * space.cell_volume()
}

/// True if some cell within `band` cells of a boundary has density above `threshold`.
fn support_near_boundary(space: &Lattice, nc: usize, cons: &[f64], band: usize, threshold: f64) -> bool {
    (0..space.len()).into_par_iter().any(|c| {
        if cons[c * nc] <= threshold {
            return false;
        }
        (0..space.ndim()).any(|k| {
            let i = space.axis_index(c, k);
            i < band || i + band >= space.axis(k).n
        })
    })
}

/// Advances `init` from `cfg.t0` to `cfg.t_end` with `cfg.n_t` equal steps.
///
/// Aborts if the CFL number computed from the face wave speeds exceeds
/// `cfg.cfl_limit`, or if gas enters the guard band next to the boundary.
pub fn solve(init: &GasState, cfg: &SolverConfig) -> Result<Flow> {
    cfg.validate()?;
    let gas = init.gas;
    let space = &init.space;
    if space.axes().iter().any(|a| a.periodic) {
        return Err(Error::InvalidGrid("the solver uses outflow boundaries; periodic axes are not supported".into()));
    }
    if space.axes().iter().any(|a| a.n < 2) {
        return Err(Error::InvalidGrid("every spatial axis needs at least two cells".into()));
    }
    let nc = gas.ncons();
    let stepper = Stepper { gas, space, nc, h: space.widths(), vacuum: cfg.vacuum };
    let dt = cfg.dt();
    let rho_ref = init.max_density();
    if !(rho_ref > 0.0) {
        return Err(Error::InvalidInput("initial density vanishes identically".into()));
    }
    let threshold = cfg.support_threshold * rho_ref;
    if support_near_boundary(space, nc, &init.cons, cfg.guard_cells, threshold) {
        return Err(Error::SupportNearBoundary { step: 0, time: cfg.t0 });
    }

    let n_levels = cfg.n_t / cfg.store_every + 1;
    let mut times = Vec::with_capacity(n_levels);
    let mut data = Vec::with_capacity(n_levels * init.cons.len());
    let mut history = Vec::with_capacity(cfg.n_t + 1);
    let mut u = init.cons.clone();
    times.push(cfg.t0);
    data.extend_from_slice(&u);
    history.push(StepRecord {
        t: cfg.t0,
        mass: total_mass(nc, space, &u),
        energy: total_energy(&gas, space, &u),
        cfl: 0.0,
    });

    let mut k1 = vec![0.0; u.len()];
    let mut k2 = vec![0.0; u.len()];
    let mut u1 = vec![0.0; u.len()];
    for step in 1..=cfg.n_t {
        let t = cfg.t0 + step as f64 * dt;
        let rate = stepper.rhs(&u, cfg.scheme == Scheme::Muscl, &mut k1);
        let cfl = rate * dt;
        if cfl > cfg.cfl_limit {
            return Err(Error::CflViolation { step, cfl, limit: cfg.cfl_limit });
        }
        let mut done = false;
        if cfg.scheme == Scheme::Muscl {
            u1.par_iter_mut().zip(&u).zip(&k1).for_each(|((o, a), k)| *o = a + dt * k);
            stepper.repair_near_vacuum(&mut u1, threshold);
            if stepper.admissible(&u1) {
                stepper.rhs(&u1, true, &mut k2);
                let mut u2 = vec![0.0; u.len()];
                u2.par_iter_mut()
                    .zip(&u)
                    .zip(&u1)
                    .zip(&k2)
                    .for_each(|(((o, a), b), k)| *o = 0.5 * a + 0.5 * (b + dt * k));
                stepper.repair_near_vacuum(&mut u2, threshold);
                if stepper.admissible(&u2) {
                    u = u2;
                    done = true;
                }
            }
            if !done {
                let rate = stepper.rhs(&u, false, &mut k1);
                if rate * dt > cfg.cfl_limit {
                    return Err(Error::CflViolation { step, cfl: rate * dt, limit: cfg.cfl_limit });
                }
            }
        }
        if !done {
            u.par_iter_mut().zip(&k1).for_each(|(a, k)| *a += dt * k);
            stepper.repair_near_vacuum(&mut u, threshold);
            if !stepper.admissible(&u) {
                let bad = u.iter().step_by(nc).filter(|r| **r < 0.0).count();
                return Err(Error::NotPositive { fraction: bad as f64 / space.len() as f64 });
            }
        }
        if support_near_boundary(space, nc, &u, cfg.guard_cells, threshold) {
            return Err(Error::SupportNearBoundary { step, time: t });
        }
        history.push(StepRecord { t, mass: total_mass(nc, space, &u), energy: total_energy(&gas, space, &u), cfl });
        if step % cfg.store_every == 0 {
            times.push(t);
            data.extend_from_slice(&u);
        }
    }
    Ok(Flow { gas, space: space.clone(), times, data, vacuum: cfg.vacuum, steps: cfg.n_t, history })
}

/// Like [`solve`], but on a CFL violation doubles the number of steps (and
/// `store_every`, keeping the stored levels) up to `max_doublings` times.
pub fn solve_refining(init: &GasState, cfg: &SolverConfig, max_doublings: usize) -> Result<Flow> {
    let mut cfg = cfg.clone();
    for attempt in 0..=max_doublings {
        match solve(init, &cfg) {
            Err(Error::CflViolation { .. }) if attempt < max_doublings => {
                cfg.n_t *= 2;
                cfg.store_every *= 2;
            }
            other => return other,
        }
    }
    unreachable!()
}
