//! Invariance of point-particle dynamics under the projective map.
//!
//! A trajectory `x(t)` of `x'' = -grad U(x)` is mapped to `y(s) = x(t)/(1+alpha t)`
//! with `s = t/(1+alpha t)`, then compared against a fresh integration of the
//! same equation in `(s, y)` from `y(0) = x(0)`, `y'(0) = x'(0) - alpha x(0)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

use super::ProjectiveMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    Free,
    /// `U(r) = a / r^2`.
    CalogeroMoser {
        a: f64,
    },
    /// `U(r) = k r^2`; not invariant, used as a negative control.
    Quadratic {
        k: f64,
    },
}

impl Potential {
    fn is_singular(&self) -> bool {
        matches!(self, Self::CalogeroMoser { .. })
    }

    /// `-grad U(x)`.
    pub fn acceleration(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Self::Free => out.iter_mut().for_each(|v| *v = 0.0),
            Self::CalogeroMoser { a } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let f = 2.0 * a / (r2 * r2);
                out.iter_mut().zip(x).for_each(|(o, v)| *o = f * v);
            }
            Self::Quadratic { k } => out.iter_mut().zip(x).for_each(|(o, v)| *o = -2.0 * k * v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Minimal allowed distance to the singularity of the potential.
    pub r_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, r_min: 1e-6, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates `x'' = -grad U(x)` from `t = 0`, returning the state at each
/// of the increasing output `times`.
pub fn integrate(
    potential: &Potential,
    x0: &[f64],
    v0: &[f64],
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let d = x0.len();
    if v0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: v0.len() });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidInput("output times must be nonnegative and increasing".into()));
    }
    let guard = |y: &[f64]| -> Result<()> {
        if potential.is_singular() {
            let r = linalg::norm(&y[..d]);
            if r < opts.r_min {
                return Err(Error::SingularTrajectory { distance: r });
            }
        }
        Ok(())
    };
    let rhs = |y: &[f64], out: &mut [f64]| {
        out[..d].copy_from_slice(&y[d..]);
        potential.acceleration(&y[..d], &mut out[d..]);
    };

    let m = 2 * d;
    let mut y: Vec<f64> = x0.iter().chain(v0).copied().collect();
    guard(&y)?;
    let mut t = 0.0;
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut h = (t_end * 1e-3).max(1e-6);
    let mut k = vec![vec![0.0; m]; 7];
    let mut stage = vec![0.0; m];
    let mut y5 = vec![0.0; m];
    let mut out = Trajectory { t: Vec::new(), x: Vec::new(), v: Vec::new() };
    let mut steps = 0usize;

    for &target in times {
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integrator(format!("step limit reached at t = {t}")));
            }
            let h_step = h.min(target - t);
            rhs(&y, &mut k[0]);
            for s in 1..7 {
                for i in 0..m {
                    stage[i] = y[i] + h_step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                guard(&stage)?;
                rhs(&stage, &mut k[s]);
            }
            let mut err = 0.0;
            for i in 0..m {
                y5[i] = y[i] + h_step * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
                let y4 = y[i] + h_step * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err += ((y5[i] - y4) / sc).powi(2);
            }
            let err = (err / m as f64).sqrt();
            if err <= 1.0 {
                t = if h_step == target - t { target } else { t + h_step };
                y.copy_from_slice(&y5);
                guard(&y)?;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = h_step * factor;
            if h < 1e-14 * t_end.max(1.0) {
                return Err(Error::Integrator(format!("step size underflow at t = {t}")));
            }
        }
        out.t.push(t);
        out.x.push(y[..d].to_vec());
        out.v.push(y[d..].to_vec());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceSample {
    pub t: f64,
    pub s: f64,
    /// Transformed original trajectory `x(t) / (1 + alpha t)`.
    pub mapped: Vec<f64>,
    /// Re-integrated trajectory at `s`.
    pub reintegrated: Vec<f64>,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub max_deviation: f64,
    pub samples: Vec<InvarianceSample>,
}

impl InvarianceReport {
    /// CSV with columns `t, s, x_1..x_d, deviation`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.samples.first().map_or(0, |s| s.mapped.len());
        let xs: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        writeln!(w, "t,s,{},deviation", xs.join(","))?;
        for s in &self.samples {
            let y: Vec<String> = s.mapped.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{:e},{:e},{},{:e}", s.t, s.s, y.join(","), s.deviation)?;
        }
        Ok(())
    }
}

/// Integrates on `[0, t_end]`, maps the trajectory, re-integrates in the
/// new variables and returns the deviation at `n_samples` uniform times.
pub fn ode_invariance_check(
    potential: &Potential,
    x0: &[f64],
    v0: &[f64],
    map: &ProjectiveMap,
    t_end: f64,
    n_samples: usize,
    opts: &OdeOptions,
) -> Result<InvarianceReport> {
    if n_samples < 2 || !(t_end > 0.0) {
        return Err(Error::InvalidInput("need t_end > 0 and at least 2 samples".into()));
    }
    map.forward(&[t_end])?;
    let times: Vec<f64> = (0..n_samples).map(|i| t_end * i as f64 / (n_samples - 1) as f64).collect();
    let original = integrate(potential, x0, v0, &times, opts)?;
    let s_times: Vec<f64> = times.iter().map(|t| t / map.factor(*t)).collect();
    let w0: Vec<f64> = v0.iter().zip(x0).map(|(v, x)| v - map.alpha() * x).collect();
    let transformed = integrate(potential, x0, &w0, &s_times, opts)?;

    let mut samples = Vec::with_capacity(n_samples);
    let mut max_deviation: f64 = 0.0;
    for i in 0..n_samples {
        let l = map.factor(times[i]);
        let mapped: Vec<f64> = original.x[i].iter().map(|x| x / l).collect();
        let diff: Vec<f64> = mapped.iter().zip(&transformed.x[i]).map(|(a, b)| a - b).collect();
        let deviation = linalg::norm(&diff);
        max_deviation = max_deviation.max(deviation);
        samples.push(InvarianceSample {
            t: times[i],
            s: s_times[i],
            mapped,
            reintegrated: transformed.x[i].clone(),
            deviation,
        });
    }
    Ok(InvarianceReport { max_deviation, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        // U = r^2 gives x'' = -2x
        let w = 2f64.sqrt();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let tr = integrate(&Potential::Quadratic { k: 1.0 }, &[1.0], &[0.0], &times, &OdeOptions::default()).unwrap();
        for (t, x) in tr.t.iter().zip(&tr.x) {
            assert!((x[0] - (w * t).cos()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn head_on_collision_is_caught() {
        let opts = OdeOptions::default();
        // attractive inverse-square with zero angular momentum falls into the origin
        let r = integrate(&Potential::CalogeroMoser { a: -1.0 }, &[1.0, 0.0], &[0.0, 0.0], &[5.0], &opts);
        assert!(matches!(r, Err(Error::SingularTrajectory { .. }) | Err(Error::Integrator(_))));
    }

    #[test]
    fn free_lines_map_to_lines() {
        let map = ProjectiveMap::new(1.5).unwrap();
        let rep =
            ode_invariance_check(&Potential::Free, &[0.5, -1.0], &[2.0, 0.3], &map, 3.0, 20, &OdeOptions::default())
                .unwrap();
        assert!(rep.max_deviation < 1e-9, "{}", rep.max_deviation);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,s,x1,x2,deviation"));
    }
}
