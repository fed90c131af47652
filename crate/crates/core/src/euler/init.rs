//! Catalog of initial data for the solver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Gas, GasModel, GasState, Primitive, MAX_D};
use crate::error::{Error, Result};
use crate::grid::Lattice;

/// How the pressure is set inside a density profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Thermal {
    /// `p = a rho^gamma` (the only choice for the isentropic model).
    Isentropic { a: f64 },
    /// Constant specific internal energy.
    ConstantE { e: f64 },
    /// Zero pressure.
    Dust,
}

/// Initial velocity `u0(x) = uniform + linear (x - center)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    #[serde(default)]
    pub uniform: Vec<f64>,
    #[serde(default)]
    pub linear: f64,
}

impl Velocity {
    fn at(&self, x: &[f64], center: &[f64]) -> [f64; MAX_D] {
        let mut u = [0.0; MAX_D];
        for k in 0..x.len() {
            u[k] = self.uniform.get(k).copied().unwrap_or(0.0)
                + self.linear * (x[k] - center.get(k).copied().unwrap_or(0.0));
        }
        u
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum InitialData {
    Uniform {
        rho: f64,
        #[serde(default)]
        u: Vec<f64>,
        p: f64,
    },
    /// `rho = amplitude exp(-|x - center|^2 / (2 width^2))`.
    GaussianBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        velocity: Velocity,
        thermal: Thermal,
    },
    /// `rho = amplitude cos^power(pi r / (2 radius))` for `r < radius`, zero outside.
    CosBump {
        amplitude: f64,
        radius: f64,
        #[serde(default = "two")]
        power: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        velocity: Velocity,
        thermal: Thermal,
    },
    /// Two cos-bumps of equal shape at `centers`.
    TwoBump { amplitude: f64, radius: f64, centers: [Vec<f64>; 2], thermal: Thermal },
    /// Planar Riemann data across `x_1 = x0`; states are `(rho, u_1, p)`.
    Riemann {
        left: [f64; 3],
        right: [f64; 3],
        #[serde(default)]
        x0: f64,
    },
}

fn two() -> f64 {
    2.0
}

fn padded(center: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|k| center.get(k).copied().unwrap_or(0.0)).collect()
}

fn cos_profile(amplitude: f64, radius: f64, power: f64, x: &[f64], center: &[f64]) -> f64 {
    let r = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if r < radius {
        amplitude * (0.5 * PI * r / radius).cos().powf(power)
    } else {
        0.0
    }
}

impl InitialData {
    pub const NAMES: [&'static str; 5] = ["uniform", "gaussian-bump", "cos-bump", "two-bump", "riemann"];

    fn thermal_state(gas: &Gas, thermal: &Thermal, rho: f64, u: [f64; MAX_D]) -> Result<Primitive> {
        let p = match (*thermal, gas.model) {
            (Thermal::Isentropic { a }, _) => a * rho.powf(gas.gamma),
            (_, GasModel::Isentropic { .. }) => {
                return Err(Error::InvalidInput("the isentropic model needs isentropic thermal data".into()))
            }
            (Thermal::ConstantE { e }, GasModel::Full) => (gas.gamma - 1.0) * rho * e,
            (Thermal::Dust, GasModel::Full) => 0.0,
        };
        Ok(gas.primitive(rho, &u, p))
    }

    /// Pointwise value of the initial state.
    pub fn state(&self, gas: &Gas, x: &[f64]) -> Result<Primitive> {
        let d = gas.d;
        match self {
            Self::Uniform { rho, u, p } => Ok(gas.primitive(*rho, &padded(u, MAX_D), *p)),
            Self::GaussianBump { amplitude, width, center, velocity, thermal } => {
                let c = padded(center, d);
                let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                let rho = amplitude * (-0.5 * r2 / (width * width)).exp();
                Self::thermal_state(gas, thermal, rho, velocity.at(x, &c))
            }
            Self::CosBump { amplitude, radius, power, center, velocity, thermal } => {
                let c = padded(center, d);
                let rho = cos_profile(*amplitude, *radius, *power, x, &c);
                let u = if rho > 0.0 { velocity.at(x, &c) } else { [0.0; MAX_D] };
                Self::thermal_state(gas, thermal, rho, u)
            }
            Self::TwoBump { amplitude, radius, centers, thermal } => {
                let rho = centers.iter().map(|c| cos_profile(*amplitude, *radius, 2.0, x, &padded(c, d))).sum();
                Self::thermal_state(gas, thermal, rho, [0.0; MAX_D])
            }
            Self::Riemann { left, right, x0 } => {
                let s = if x[0] < *x0 { left } else { right };
                let mut u = [0.0; MAX_D];
                u[0] = s[1];
                Ok(gas.primitive(s[0], &u, s[2]))
            }
        }
    }

    /// Samples the initial state at cell centers.
    pub fn sample(&self, gas: &Gas, space: &Lattice) -> Result<GasState> {
        let states = (0..space.len()).map(|c| self.state(gas, &space.center(c))).collect::<Result<Vec<_>>>()?;
        let mut next = states.into_iter();
        GasState::from_fn(*gas, space.clone(), |_| next.next().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    #[test]
    fn cos_bump_is_compact_and_isentropic() {
        let gas = Gas::new(1, 3.0, GasModel::Isentropic { a: 1.0 }).unwrap();
        let init = InitialData::CosBump {
            amplitude: 1.0,
            radius: 1.0,
            power: 2.0,
            center: vec![],
            velocity: Velocity::default(),
            thermal: Thermal::Isentropic { a: 1.0 },
        };
        let w = init.state(&gas, &[0.0]).unwrap();
        assert_eq!((w.rho, w.p), (1.0, 1.0));
        assert_eq!(init.state(&gas, &[1.5]).unwrap().rho, 0.0);
        let space = Lattice::new(vec![Axis::new(-2.0, 2.0, 400).unwrap()]).unwrap();
        // mass of cos^2 bump on [-1, 1] is 1
        assert!((init.sample(&gas, &space).unwrap().mass() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn isentropic_model_rejects_other_thermal_data() {
        let gas = Gas::new(1, 3.0, GasModel::Isentropic { a: 1.0 }).unwrap();
        let init = InitialData::GaussianBump {
            amplitude: 1.0,
            width: 1.0,
            center: vec![],
            velocity: Velocity::default(),
            thermal: Thermal::ConstantE { e: 1.0 },
        };
        assert!(init.state(&gas, &[0.0]).is_err());
    }

    #[test]
    fn config_names_parse() {
        let j = r#"{"name": "gaussian-bump", "amplitude": 1, "width": 0.5, "thermal": {"kind": "constant-e", "e": 1}}"#;
        let init: InitialData = serde_json::from_str(j).unwrap();
        assert!(matches!(init, InitialData::GaussianBump { .. }));
    }
}
