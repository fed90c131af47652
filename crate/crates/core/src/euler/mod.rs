//! Compressible Euler equations: equation of state, gas states, a
//! finite-volume solver, exact reference solutions and flow diagnostics.

pub mod diagnostics;
pub mod exact;
pub mod init;
pub mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, Lattice};
use crate::interp::interpolate;
use crate::io::{FieldDump, FieldKind};
use crate::linalg::Mat;
use crate::tensor_field::{SymTensorField, TensorSource};

pub use diagnostics::{
    energy_defect_residual, functionals, projective_invariance_residual, transformed_energy,
    transformed_euler_residual, transformed_flow_functionals, EnergyDefect, EulerResidual, FunctionalChecks,
    GlobalFunctionals, TransformedEnergy, TransformedFlowFunctionals,
};
pub use init::{InitialData, Thermal, Velocity};
pub use solver::{solve, solve_refining, Scheme, SolverConfig};

/// Largest supported spatial dimension of the fixed-size state arrays.
pub const MAX_D: usize = 3;

/// Conserved variables `(rho, rho u_1..rho u_d[, E])`, padded to `MAX_D + 2`.
pub type Cons = [f64; MAX_D + 2];

/// Adiabatic exponent of a mono-atomic gas, `1 + 2/d`.
pub fn gamma_d(d: usize) -> f64 {
    1.0 + 2.0 / d as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GasModel {
    /// `p = A rho^gamma`; the unknowns are mass and momentum.
    Isentropic { a: f64 },
    /// `p = (gamma - 1) rho e`; the energy equation is solved as well.
    Full,
}

/// Equation of state and dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gas {
    pub d: usize,
    pub gamma: f64,
    pub model: GasModel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: [f64; MAX_D],
    /// Specific internal energy.
    pub e: f64,
    pub p: f64,
}

impl Primitive {
    pub fn speed2(&self, d: usize) -> f64 {
        self.u[..d].iter().map(|v| v * v).sum()
    }
}

impl Gas {
    pub fn new(d: usize, gamma: f64, model: GasModel) -> Result<Self> {
        if d == 0 || d > MAX_D {
            return Err(Error::InvalidInput(format!("gas dimension must be 1..={MAX_D}, got {d}")));
        }
        if !(gamma > 1.0) {
            return Err(Error::InvalidInput(format!("gamma must exceed 1, got {gamma}")));
        }
        if let GasModel::Isentropic { a } = model {
            if !(a > 0.0) {
                return Err(Error::InvalidInput(format!("pressure constant must be positive, got {a}")));
            }
        }
        Ok(Self { d, gamma, model })
    }

    pub fn mono_atomic(d: usize, model: GasModel) -> Result<Self> {
        Self::new(d, gamma_d(d), model)
    }

    pub fn gamma_d(&self) -> f64 {
        gamma_d(self.d)
    }

    pub fn is_mono_atomic(&self) -> bool {
        (self.gamma - self.gamma_d()).abs() < 1e-12
    }

    /// Number of conserved variables.
    pub fn ncons(&self) -> usize {
        match self.model {
            GasModel::Isentropic { .. } => 1 + self.d,
            GasModel::Full => 2 + self.d,
        }
    }

    pub fn pressure_from_rho_e(&self, rho: f64, e: f64) -> f64 {
        match self.model {
            GasModel::Isentropic { a } => a * rho.max(0.0).powf(self.gamma),
            GasModel::Full => (self.gamma - 1.0) * rho * e,
        }
    }

    /// Specific internal energy `p / ((gamma - 1) rho)`, zero in vacuum.
    pub fn internal_energy(&self, rho: f64, p: f64) -> f64 {
        if rho > 0.0 {
            p / ((self.gamma - 1.0) * rho)
        } else {
            0.0
        }
    }

    pub fn primitive(&self, rho: f64, u: &[f64], p: f64) -> Primitive {
        let mut uu = [0.0; MAX_D];
        uu[..self.d].copy_from_slice(&u[..self.d]);
        let p = match self.model {
            GasModel::Isentropic { a } => a * rho.max(0.0).powf(self.gamma),
            GasModel::Full => p,
        };
        Primitive { rho, u: uu, e: self.internal_energy(rho, p), p }
    }

    /// Primitive variables; cells with `rho < vacuum` have `u = 0`, `p = 0`.
    pub fn to_primitive(&self, c: &[f64], vacuum: f64) -> Primitive {
        let d = self.d;
        let rho = c[0];
        if !(rho > vacuum) {
            return Primitive { rho: rho.max(0.0), ..Default::default() };
        }
        let mut u = [0.0; MAX_D];
        for k in 0..d {
            u[k] = c[1 + k] / rho;
        }
        let (e, p) = match self.model {
            GasModel::Isentropic { a } => {
                let p = a * rho.powf(self.gamma);
                (p / ((self.gamma - 1.0) * rho), p)
            }
            GasModel::Full => {
                let kin = 0.5 * rho * u[..d].iter().map(|v| v * v).sum::<f64>();
                let rho_e = (c[1 + d] - kin).max(0.0);
                (rho_e / rho, (self.gamma - 1.0) * rho_e)
            }
        };
        Primitive { rho, u, e, p }
    }

    pub fn to_conserved(&self, w: &Primitive) -> Cons {
        let d = self.d;
        let mut c = [0.0; MAX_D + 2];
        c[0] = w.rho;
        for k in 0..d {
            c[1 + k] = w.rho * w.u[k];
        }
        if let GasModel::Full = self.model {
            c[1 + d] = 0.5 * w.rho * w.speed2(d) + w.rho * w.e;
        }
        c
    }

    pub fn sound_speed(&self, w: &Primitive) -> f64 {
        if w.rho > 0.0 && w.p > 0.0 {
            (self.gamma * w.p / w.rho).sqrt()
        } else {
            0.0
        }
    }

    /// Physical flux along `axis`.
    pub fn flux(&self, w: &Primitive, c: &Cons, axis: usize) -> Cons {
        let d = self.d;
        let un = w.u[axis];
        let mut f = [0.0; MAX_D + 2];
        f[0] = c[0] * un;
        for k in 0..d {
            f[1 + k] = c[1 + k] * un;
        }
        f[1 + axis] += w.p;
        if let GasModel::Full = self.model {
            f[1 + d] = (c[1 + d] + w.p) * un;
        }
        f
    }

    /// Total energy density `rho |u|^2 / 2 + rho e`.
    pub fn energy_density(&self, w: &Primitive) -> f64 {
        0.5 * w.rho * w.speed2(self.d) + w.rho * w.e
    }
}

/// Anything that provides the gas state at a space-time point.
pub trait FlowSource: Sync {
    fn gas(&self) -> &Gas;
    fn state(&self, t: f64, x: &[f64]) -> Result<Primitive>;
}

/// A gas state sampled on a spatial lattice (conserved variables per cell).
#[derive(Clone, Debug, PartialEq)]
pub struct GasState {
    pub gas: Gas,
    pub space: Lattice,
    pub cons: Vec<f64>,
}

impl GasState {
    pub fn from_fn<F>(gas: Gas, space: Lattice, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Primitive,
    {
        if space.ndim() != gas.d {
            return Err(Error::DimensionMismatch { expected: gas.d, found: space.ndim() });
        }
        let nc = gas.ncons();
        let mut cons = vec![0.0; space.len() * nc];
        for c in 0..space.len() {
            let w = f(&space.center(c));
            if !(w.rho >= 0.0) || !(w.p >= 0.0) {
                return Err(Error::InvalidInput(format!("negative density or pressure at {:?}", space.center(c))));
            }
            cons[c * nc..(c + 1) * nc].copy_from_slice(&gas.to_conserved(&w)[..nc]);
        }
        Ok(Self { gas, space, cons })
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let nc = self.gas.ncons();
        &self.cons[c * nc..(c + 1) * nc]
    }

    pub fn primitive(&self, c: usize, vacuum: f64) -> Primitive {
        self.gas.to_primitive(self.cell(c), vacuum)
    }

    pub fn mass(&self) -> f64 {
        let nc = self.gas.ncons();
        self.cons.iter().step_by(nc).sum::<f64>() * self.space.cell_volume()
    }

    pub fn max_density(&self) -> f64 {
        self.cons.iter().step_by(self.gas.ncons()).copied().fold(0.0, f64::max)
    }
}

/// Per-step record of the global invariants during a solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub cfl: f64,
}

/// Sidecar of a flow container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowMeta {
    pub gas: Gas,
    pub times: Vec<f64>,
    pub vacuum: f64,
    pub steps: usize,
    pub history: Vec<StepRecord>,
}

/// A solved trajectory: conserved variables at uniformly spaced time levels.
#[derive(Clone, Debug)]
pub struct Flow {
    pub gas: Gas,
    pub space: Lattice,
    /// Level times `t_k = t0 + k dt_level`.
    pub times: Vec<f64>,
    /// Level-major conserved data, `ncons` values per cell.
    pub data: Vec<f64>,
    /// Threshold below which a cell is treated as vacuum.
    pub vacuum: f64,
    pub steps: usize,
    pub history: Vec<StepRecord>,
}

impl Flow {
    /// Builds a flow by sampling a source at the given level times.
    pub fn from_source<F: FlowSource + ?Sized>(source: &F, space: Lattice, times: Vec<f64>) -> Result<Self> {
        let gas = *source.gas();
        let nc = gas.ncons();
        let mut data = Vec::with_capacity(times.len() * space.len() * nc);
        for &t in &times {
            for c in 0..space.len() {
                let w = source.state(t, &space.center(c))?;
                data.extend_from_slice(&gas.to_conserved(&w)[..nc]);
            }
        }
        Ok(Self { gas, space, times, data, vacuum: 0.0, steps: 0, history: Vec::new() })
    }

    pub fn d(&self) -> usize {
        self.gas.d
    }

    pub fn n_levels(&self) -> usize {
        self.times.len()
    }

    pub fn level_dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn level(&self, k: usize) -> GasState {
        let n = self.space.len() * self.gas.ncons();
        GasState { gas: self.gas, space: self.space.clone(), cons: self.data[k * n..(k + 1) * n].to_vec() }
    }

    pub fn level_cell(&self, k: usize, c: usize) -> &[f64] {
        let nc = self.gas.ncons();
        let off = (k * self.space.len() + c) * nc;
        &self.data[off..off + nc]
    }

    pub fn primitive(&self, k: usize, c: usize) -> Primitive {
        self.gas.to_primitive(self.level_cell(k, c), self.vacuum)
    }

    /// Space-time grid whose time cells are centered on the levels.
    pub fn grid(&self) -> Result<GridSpec> {
        let dt = self.level_dt();
        if self.times.len() < 2 || !(dt > 0.0) {
            return Err(Error::InvalidGrid("a flow grid needs at least two levels".into()));
        }
        let t = Axis::new(self.times[0] - 0.5 * dt, self.times[self.times.len() - 1] + 0.5 * dt, self.times.len())?;
        GridSpec::new(t, self.space.axes().to_vec())
    }

    /// Conserved data as a `flow` container on [`Flow::grid`].
    pub fn to_dump(&self) -> Result<FieldDump> {
        FieldDump::new(FieldKind::Flow, self.d(), self.grid()?.lattice().clone(), self.gas.ncons(), self.data.clone())
    }

    /// What the container does not carry: gas, exact level times and solver history.
    pub fn meta(&self) -> FlowMeta {
        FlowMeta {
            gas: self.gas,
            times: self.times.clone(),
            vacuum: self.vacuum,
            steps: self.steps,
            history: self.history.clone(),
        }
    }

    pub fn from_dump(dump: FieldDump, meta: FlowMeta) -> Result<Self> {
        if dump.kind != FieldKind::Flow {
            return Err(Error::Format(format!("expected flow, found {}", dump.kind.name())));
        }
        let axes = dump.lattice.axes();
        if dump.d != meta.gas.d || axes.len() != meta.gas.d + 1 || dump.ncomp != meta.gas.ncons() {
            return Err(Error::Format("flow container does not match its metadata".into()));
        }
        if axes[0].n != meta.times.len() {
            return Err(Error::DimensionMismatch { expected: axes[0].n, found: meta.times.len() });
        }
        Ok(Self {
            gas: meta.gas,
            space: Lattice::new(axes[1..].to_vec())?,
            times: meta.times,
            data: dump.data,
            vacuum: meta.vacuum,
            steps: meta.steps,
            history: meta.history,
        })
    }

    /// Restriction to the first `n` levels.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.times.len());
        let stride = self.space.len() * self.gas.ncons();
        Self {
            times: self.times[..n].to_vec(),
            data: self.data[..n * stride].to_vec(),
            history: self.history.iter().copied().filter(|r| r.t <= self.times[n - 1] + 1e-12).collect(),
            ..self.clone()
        }
    }
}

impl FlowSource for Flow {
    fn gas(&self) -> &Gas {
        &self.gas
    }

    /// Time-linear, space-multilinear interpolation of the conserved variables.
    fn state(&self, t: f64, x: &[f64]) -> Result<Primitive> {
        let grid = self.grid()?;
        let nc = self.gas.ncons();
        let mut c = [0.0; MAX_D + 2];
        let mut p = Vec::with_capacity(x.len() + 1);
        p.push(t.clamp(self.times[0], self.times[self.times.len() - 1]));
        if (t - p[0]).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::OutOfDomain { point: std::iter::once(t).chain(x.iter().copied()).collect() });
        }
        p.extend_from_slice(x);
        interpolate(grid.lattice(), &self.data, nc, &p, &mut c[..nc])?;
        Ok(self.gas.to_primitive(&c, self.vacuum))
    }
}

/// `[[rho, rho u^T], [rho u, rho u u^T + p I]]`.
pub fn gas_tensor(gas: &Gas, w: &Primitive) -> Mat {
    let d = gas.d;
    let n = d + 1;
    let mut s = Mat::zeros(n, n);
    s[(0, 0)] = w.rho;
    for i in 0..d {
        s[(0, i + 1)] = w.rho * w.u[i];
        s[(i + 1, 0)] = w.rho * w.u[i];
        for j in 0..d {
            s[(i + 1, j + 1)] = w.rho * w.u[i] * w.u[j];
        }
        s[(i + 1, i + 1)] += w.p;
    }
    s
}

/// The mass-momentum tensor of a flow source, as a tensor source.
pub struct GasTensor<F> {
    pub flow: F,
}

impl<F: FlowSource> TensorSource for GasTensor<F> {
    fn dim(&self) -> usize {
        self.flow.gas().d + 1
    }
    fn eval(&self, p: &[f64]) -> Result<Mat> {
        let w = self.flow.state(p[0], &p[1..])?;
        Ok(gas_tensor(self.flow.gas(), &w))
    }
}

/// Mass-momentum tensor at every level of a solved flow, on [`Flow::grid`].
pub fn mass_momentum_tensor(flow: &Flow) -> Result<SymTensorField> {
    let grid = flow.grid()?;
    let slice = flow.space.len();
    let mut out = SymTensorField::zeros(grid);
    for k in 0..flow.n_levels() {
        for c in 0..slice {
            out.set(k * slice + c, &gas_tensor(&flow.gas, &flow.primitive(k, c)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flow_container_round_trip() {
        let gas = Gas::new(1, 3.0, GasModel::Full).unwrap();
        let space = Lattice::new(vec![Axis::new(-3.0, 3.0, 60).unwrap()]).unwrap();
        let init = InitialData::CosBump {
            amplitude: 1.0,
            radius: 1.0,
            power: 2.0,
            center: vec![],
            velocity: Velocity::default(),
            thermal: Thermal::Isentropic { a: 1.0 },
        }
        .sample(&gas, &space)
        .unwrap();
        let flow =
            solve(&init, &SolverConfig { t_end: 0.1, n_t: 10, store_every: 5, ..SolverConfig::default() }).unwrap();
        let mut buf = Vec::new();
        flow.to_dump().unwrap().write_binary(&mut buf).unwrap();
        let meta: FlowMeta = serde_json::from_str(&serde_json::to_string(&flow.meta()).unwrap()).unwrap();
        let back = Flow::from_dump(FieldDump::read_binary(buf.as_slice()).unwrap(), meta).unwrap();
        assert_eq!(back.data, flow.data);
        assert_eq!(back.times, flow.times);
        assert_eq!(back.history, flow.history);
        assert_eq!(back.space, flow.space);
    }

    #[test]
    fn conserved_primitive_roundtrip() {
        let gas = Gas::new(2, 1.4, GasModel::Full).unwrap();
        let w = gas.primitive(0.7, &[0.3, -1.1], 2.5);
        let c = gas.to_conserved(&w);
        let back = gas.to_primitive(&c, 0.0);
        assert_relative_eq!(back.p, 2.5, epsilon = 1e-12);
        assert_relative_eq!(back.u[1], -1.1, epsilon = 1e-12);
    }

    #[test]
    fn gas_tensor_determinant_is_rho_p_to_d() {
        for d in 1..=3 {
            let gas = Gas::new(d, 1.3, GasModel::Full).unwrap();
            let w = gas.primitive(1.7, &[0.4, -0.2, 0.9], 0.6);
            let det = gas_tensor(&gas, &w).determinant();
            assert_relative_eq!(det, 1.7 * 0.6f64.powi(d as i32), max_relative = 1e-10);
        }
    }

    #[test]
    fn uniform_state_tensor_is_identity() {
        let gas = Gas::new(2, 2.0, GasModel::Full).unwrap();
        let w = gas.primitive(1.0, &[0.0, 0.0], 1.0);
        assert_eq!(gas_tensor(&gas, &w), Mat::identity(3, 3));
    }

    #[test]
    fn invalid_gases_are_rejected() {
        assert!(Gas::new(1, 1.0, GasModel::Full).is_err());
        assert!(Gas::new(0, 2.0, GasModel::Full).is_err());
        assert!(Gas::new(1, 3.0, GasModel::Isentropic { a: 0.0 }).is_err());
        assert!(Gas::mono_atomic(2, GasModel::Full).unwrap().is_mono_atomic());
    }
}
