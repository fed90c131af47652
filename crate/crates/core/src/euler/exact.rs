//! Closed-form and semi-analytic reference flows.

use super::{FlowSource, Gas, GasModel, InitialData, Primitive};
use crate::error::{Error, Result};

/// Smooth solution of the one-dimensional isentropic gas with `gamma = 3`,
/// `p = A rho^3`, before the first shock.
///
/// The Riemann invariants `w = u +- sqrt(3A) rho` decouple into two inviscid
/// Burgers equations; each is solved by inverting `w = w0(x - t w)`.
#[derive(Clone, Debug)]
pub struct Gamma3Flow {
    gas: Gas,
    init: InitialData,
    sqrt3a: f64,
    bracket: (f64, f64),
    shock_time: f64,
}

impl Gamma3Flow {
    /// `domain` must contain the support of the initial data.
    pub fn new(init: InitialData, a: f64, domain: (f64, f64)) -> Result<Self> {
        let gas = Gas::new(1, 3.0, GasModel::Isentropic { a })?;
        let sqrt3a = (3.0 * a).sqrt();
        let n = 40_000;
        let h = (domain.1 - domain.0) / n as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut min_slope = 0.0f64;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=n {
            let x = domain.0 + i as f64 * h;
            let w = init.state(&gas, &[x])?;
            let (wp, wm) = (w.u[0] + sqrt3a * w.rho, w.u[0] - sqrt3a * w.rho);
            lo = lo.min(wm).min(wp);
            hi = hi.max(wm).max(wp);
            if let Some((pp, pm)) = prev {
                min_slope = min_slope.min((wp - pp) / h).min((wm - pm) / h);
            }
            prev = Some((wp, wm));
        }
        let pad = 1e-3 * (hi - lo).max(1.0);
        let shock_time = if min_slope < 0.0 { -1.0 / min_slope } else { f64::INFINITY };
        Ok(Self { gas, init, sqrt3a, bracket: (lo - pad, hi + pad), shock_time })
    }

    /// Time of the first gradient catastrophe (sampled estimate).
    pub fn shock_time(&self) -> f64 {
        self.shock_time
    }

    fn invariants0(&self, x: f64) -> Result<(f64, f64)> {
        let w = self.init.state(&self.gas, &[x])?;
        Ok((w.u[0] + self.sqrt3a * w.rho, w.u[0] - self.sqrt3a * w.rho))
    }

    fn characteristic(&self, t: f64, x: f64, plus: bool) -> Result<f64> {
        let pick = |x: f64| -> Result<f64> {
            let (p, m) = self.invariants0(x)?;
            Ok(if plus { p } else { m })
        };
        let (mut a, mut b) = self.bracket;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if mid - pick(x - t * mid)? > 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

impl FlowSource for Gamma3Flow {
    fn gas(&self) -> &Gas {
        &self.gas
    }

    fn state(&self, t: f64, x: &[f64]) -> Result<Primitive> {
        if t < 0.0 || t >= self.shock_time {
            return Err(Error::InvalidInput(format!(
                "characteristic solution is valid on [0, {}), got t = {t}",
                self.shock_time
            )));
        }
        let wp = self.characteristic(t, x[0], true)?;
        let wm = self.characteristic(t, x[0], false)?;
        let rho = ((wp - wm) / (2.0 * self.sqrt3a)).max(0.0);
        let u = if rho > 0.0 { 0.5 * (wp + wm) } else { 0.0 };
        Ok(self.gas.primitive(rho, &[u], 0.0))
    }
}

/// Homogeneous expansion with uniform pressure:
/// `rho = rho0(x/L) / L^d`, `u = c x / L`, `p = p0 L^(-gamma d)`, `L = 1 + c t`,
/// with `rho0 = background + amplitude exp(-|x|^2 / (2 width^2))`.
///
/// An exact smooth solution of the full system for every `gamma`.
#[derive(Clone, Copy, Debug)]
pub struct ExpansionFlow {
    pub gas: Gas,
    pub rate: f64,
    pub p0: f64,
    pub background: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl ExpansionFlow {
    pub fn new(d: usize, gamma: f64, rate: f64, p0: f64, background: f64, amplitude: f64, width: f64) -> Result<Self> {
        if !(p0 >= 0.0 && background >= 0.0 && amplitude >= 0.0 && width > 0.0 && background + amplitude > 0.0) {
            return Err(Error::InvalidInput("expansion flow needs nonnegative data and positive width".into()));
        }
        Ok(Self { gas: Gas::new(d, gamma, GasModel::Full)?, rate, p0, background, amplitude, width })
    }
}

impl FlowSource for ExpansionFlow {
    fn gas(&self) -> &Gas {
        &self.gas
    }

    fn state(&self, t: f64, x: &[f64]) -> Result<Primitive> {
        let d = self.gas.d;
        let l = 1.0 + self.rate * t;
        if !(l > 0.0) {
            return Err(Error::DegenerateMap { t, factor: l });
        }
        let r2: f64 = x[..d].iter().map(|v| v * v).sum::<f64>() / (l * l);
        let rho = (self.background + self.amplitude * (-0.5 * r2 / (self.width * self.width)).exp()) / l.powi(d as i32);
        let u: Vec<f64> = x[..d].iter().map(|v| self.rate * v / l).collect();
        let p = self.p0 * l.powf(-self.gas.gamma * d as f64);
        Ok(self.gas.primitive(rho, &u, p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wave {
    Shock { speed: f64 },
    Rarefaction { head: f64, tail: f64 },
}

/// Exact solution of the planar Riemann problem for the full ideal gas.
#[derive(Clone, Copy, Debug)]
pub struct ExactRiemann {
    gas: Gas,
    left: [f64; 3],
    right: [f64; 3],
    x0: f64,
    p_star: f64,
    u_star: f64,
}

impl ExactRiemann {
    /// States are `(rho, u, p)` with `u` normal to the discontinuity at `x_1 = x0`.
    pub fn new(gas: Gas, left: [f64; 3], right: [f64; 3], x0: f64) -> Result<Self> {
        if gas.model != GasModel::Full {
            return Err(Error::InvalidInput("the exact Riemann solver needs the full model".into()));
        }
        if left[0] <= 0.0 || right[0] <= 0.0 || left[2] <= 0.0 || right[2] <= 0.0 {
            return Err(Error::InvalidInput("Riemann states must have positive density and pressure".into()));
        }
        let g = gas.gamma;
        let (cl, cr) = ((g * left[2] / left[0]).sqrt(), (g * right[2] / right[0]).sqrt());
        if 2.0 * (cl + cr) / (g - 1.0) <= right[1] - left[1] {
            return Err(Error::InvalidInput("Riemann data generates vacuum".into()));
        }
        let mut s = Self { gas, left, right, x0, p_star: 0.0, u_star: 0.0 };
        let du = right[1] - left[1];
        let mut p = (0.5 * (left[2] + right[2])).max(1e-10);
        for _ in 0..100 {
            let (fl, dl) = s.wave_function(p, &left);
            let (fr, dr) = s.wave_function(p, &right);
            let next = (p - (fl + fr + du) / (dl + dr)).max(1e-14 * p);
            let change = 2.0 * (next - p).abs() / (next + p);
            p = next;
            if change < 1e-15 {
                break;
            }
        }
        let (fl, _) = s.wave_function(p, &left);
        let (fr, _) = s.wave_function(p, &right);
        s.p_star = p;
        s.u_star = 0.5 * (left[1] + right[1]) + 0.5 * (fr - fl);
        Ok(s)
    }

    fn wave_function(&self, p: f64, k: &[f64; 3]) -> (f64, f64) {
        let g = self.gas.gamma;
        let (rho, pk) = (k[0], k[2]);
        let c = (g * pk / rho).sqrt();
        if p > pk {
            let a = 2.0 / ((g + 1.0) * rho);
            let b = (g - 1.0) / (g + 1.0) * pk;
            let q = (a / (p + b)).sqrt();
            ((p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (b + p)))
        } else {
            let r = (p / pk).powf((g - 1.0) / (2.0 * g));
            (2.0 * c / (g - 1.0) * (r - 1.0), r / (rho * c) * pk / p)
        }
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn u_star(&self) -> f64 {
        self.u_star
    }

    fn wave(&self, k: &[f64; 3], sign: f64) -> Wave {
        let g = self.gas.gamma;
        let c = (g * k[2] / k[0]).sqrt();
        if self.p_star > k[2] {
            let q = ((g + 1.0) / (2.0 * g) * self.p_star / k[2] + (g - 1.0) / (2.0 * g)).sqrt();
            Wave::Shock { speed: k[1] + sign * c * q }
        } else {
            let c_star = c * (self.p_star / k[2]).powf((g - 1.0) / (2.0 * g));
            Wave::Rarefaction { head: k[1] + sign * c, tail: self.u_star + sign * c_star }
        }
    }

    /// Waves as (left, contact speed, right).
    pub fn waves(&self) -> (Wave, f64, Wave) {
        (self.wave(&self.left, -1.0), self.u_star, self.wave(&self.right, 1.0))
    }

    /// `(rho, u, p)` at similarity coordinate `xi = (x - x0)/t`.
    pub fn sample(&self, xi: f64) -> [f64; 3] {
        let g = self.gas.gamma;
        let (k, sign) = if xi <= self.u_star { (&self.left, -1.0) } else { (&self.right, 1.0) };
        let c = (g * k[2] / k[0]).sqrt();
        let gm = (g - 1.0) / (g + 1.0);
        match self.wave(k, sign) {
            Wave::Shock { speed } => {
                if sign * (xi - speed) >= 0.0 {
                    *k
                } else {
                    let ratio = self.p_star / k[2];
                    let rho = k[0] * (ratio + gm) / (gm * ratio + 1.0);
                    [rho, self.u_star, self.p_star]
                }
            }
            Wave::Rarefaction { head, tail } => {
                if sign * (xi - head) >= 0.0 {
                    *k
                } else if sign * (xi - tail) <= 0.0 {
                    let rho = k[0] * (self.p_star / k[2]).powf(1.0 / g);
                    [rho, self.u_star, self.p_star]
                } else {
                    // inside the fan
                    let u = 2.0 / (g + 1.0) * (-sign * c + 0.5 * (g - 1.0) * k[1] + xi);
                    let base = 2.0 / (g + 1.0) - sign * gm / c * (k[1] - xi);
                    let rho = k[0] * base.powf(2.0 / (g - 1.0));
                    let p = k[2] * base.powf(2.0 * g / (g - 1.0));
                    [rho, u, p]
                }
            }
        }
    }
}

impl FlowSource for ExactRiemann {
    fn gas(&self) -> &Gas {
        &self.gas
    }

    fn state(&self, t: f64, x: &[f64]) -> Result<Primitive> {
        let w = if t > 0.0 {
            self.sample((x[0] - self.x0) / t)
        } else if x[0] < self.x0 {
            self.left
        } else {
            self.right
        };
        let mut u = [0.0; 3];
        u[0] = w[1];
        Ok(self.gas.primitive(w[0], &u, w[2]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{Thermal, Velocity};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn sod_star_state_matches_reference() {
        let gas = Gas::new(1, 1.4, GasModel::Full).unwrap();
        let r = ExactRiemann::new(gas, [1.0, 0.0, 1.0], [0.125, 0.0, 0.1], 0.5).unwrap();
        // standard values for this problem
        assert_relative_eq!(r.p_star(), 0.30313, max_relative = 1e-4);
        assert_relative_eq!(r.u_star(), 0.92745, max_relative = 1e-4);
        let [rho, u, p] = r.sample(1.5);
        assert_relative_eq!(rho, 0.26557, max_relative = 1e-4);
        assert_relative_eq!(u, r.u_star(), max_relative = 1e-12);
        assert_relative_eq!(p, r.p_star(), max_relative = 1e-12);
    }

    #[test]
    fn gamma3_solution_has_predicted_shock_time() {
        let init = InitialData::CosBump {
            amplitude: 1.0,
            radius: 1.0,
            power: 2.0,
            center: vec![],
            velocity: Velocity::default(),
            thermal: Thermal::Isentropic { a: 1.0 },
        };
        let flow = Gamma3Flow::new(init, 1.0, (-3.0, 3.0)).unwrap();
        assert_relative_eq!(flow.shock_time(), 2.0 / (3f64.sqrt() * PI), max_relative = 1e-6);
        let w = flow.state(0.0, &[0.25]).unwrap();
        assert_relative_eq!(w.rho, (PI / 8.0).cos().powi(2), max_relative = 1e-12);
        assert!(flow.state(1.0, &[0.0]).is_err());
    }

    #[test]
    fn expansion_flow_satisfies_mass_equation() {
        let f = ExpansionFlow::new(1, 1.4, 0.7, 1.0, 0.1, 1.0, 0.5).unwrap();
        let (t, x, h) = (0.4, 0.3, 1e-5);
        let rho = |t: f64, x: f64| f.state(t, &[x]).unwrap().rho;
        let flux = |t: f64, x: f64| {
            let w = f.state(t, &[x]).unwrap();
            w.rho * w.u[0]
        };
        let r = (rho(t + h, x) - rho(t - h, x)) / (2.0 * h) + (flux(t, x + h) - flux(t, x - h)) / (2.0 * h);
        assert!(r.abs() < 1e-8, "{r}");
    }
}
