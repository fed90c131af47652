//! Kinetic densities `f(t, x, xi)`: moment tensors, the simplex formula for
//! their determinant, free transport and the projective change of variables.

pub mod density;
pub mod particles;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::projective::ProjectiveMap;

pub use density::{
    energy_flux_fields, energy_law_residual, moment_tensor, velocity_measure, EnergyLawResidual, FreeTransport,
    GaussianPhaseDensity, IcbReport, KineticDensity, KineticMoments, KineticPushForward, PhaseDensity, PhaseMixture,
};
pub use particles::{Beam, BeamState, InertiaRegression, ParticleState, WeakResidual};

/// Fewest Monte-Carlo samples accepted by [`VelocityMeasure::det_via_simplex`].
pub const MIN_SAMPLES: usize = 1000;

/// Energy density and energy flux of a velocity distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyFluxPair {
    /// `int f |xi|^2 / 2`.
    pub eps: f64,
    /// `int f |xi|^2 xi / 2`.
    pub q: Vec<f64>,
}

/// `f(t, x, .)` at one space-time point, as weighted velocity atoms.
///
/// Grid densities become atoms at the velocity-cell centers with weight
/// `f dxi`. Each atom carries a component label used to stratify sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityMeasure {
    d: usize,
    xi: Vec<f64>,
    w: Vec<f64>,
    component: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MonteCarloEstimate {
    /// Number of standard errors between the estimate and `reference`.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.value - reference).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff <= 1e-12 * reference.abs().max(1e-300) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Result of the affine-hyperplane support test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Degeneracy {
    pub is_degenerate: bool,
    /// Smallest eigenvalue of the velocity covariance.
    pub min_eigenvalue: f64,
    /// Its eigenvector: the normal of the supporting hyperplane when degenerate.
    pub plane_normal: Vec<f64>,
}

/// `|det[xi_1 - xi_0, ..., xi_d - xi_0]|`, i.e. `d!` times the simplex volume.
pub fn parallelotope_volume(d: usize, vertices: &[&[f64]]) -> f64 {
    let m = Mat::from_fn(d, d, |i, j| vertices[j + 1][i] - vertices[0][i]);
    m.determinant().abs()
}

impl VelocityMeasure {
    pub fn new(d: usize, xi: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = w.len();
        Self::with_components(d, xi, w, vec![0; n])
    }

    pub fn with_components(d: usize, xi: Vec<f64>, w: Vec<f64>, component: Vec<usize>) -> Result<Self> {
        if d == 0 || xi.len() != d * w.len() || component.len() != w.len() {
            return Err(Error::InvalidInput("velocity atoms, weights and labels disagree in length".into()));
        }
        if w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("velocity weights must be nonnegative".into()));
        }
        Ok(Self { d, xi, w, component })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.xi[i * self.d..(i + 1) * self.d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn mass(&self) -> f64 {
        self.w.iter().sum()
    }

    /// `sum w (1, xi) (1, xi)^T`.
    pub fn moment_matrix(&self) -> Mat {
        let n = self.d + 1;
        let mut s = Mat::zeros(n, n);
        for i in 0..self.len() {
            let v = linalg::augmented(self.atom(i));
            s += self.w[i] * &v * v.transpose();
        }
        s
    }

    pub fn energy_flux(&self) -> EnergyFluxPair {
        let mut eps = 0.0;
        let mut q = vec![0.0; self.d];
        for i in 0..self.len() {
            let a = self.atom(i);
            let e = 0.5 * self.w[i] * a.iter().map(|v| v * v).sum::<f64>();
            eps += e;
            q.iter_mut().zip(a).for_each(|(qk, ak)| *qk += e * ak);
        }
        EnergyFluxPair { eps, q }
    }

    /// `1/(d+1)! sum over ordered (d+1)-tuples of w_0..w_d V^2`, enumerated.
    pub fn det_by_enumeration(&self) -> Result<f64> {
        let n = self.len();
        let k = self.d + 1;
        let total = (n as f64).powi(k as i32);
        if total > 5e7 {
            return Err(Error::InvalidInput(format!("{n} atoms are too many for exhaustive enumeration")));
        }
        let mut idx = vec![0usize; k];
        let mut sum = 0.0;
        loop {
            let w: f64 = idx.iter().map(|&i| self.w[i]).product();
            if w > 0.0 {
                let verts: Vec<&[f64]> = idx.iter().map(|&i| self.atom(i)).collect();
                sum += w * parallelotope_volume(self.d, &verts).powi(2);
            }
            let mut j = 0;
            loop {
                idx[j] += 1;
                if idx[j] < n {
                    break;
                }
                idx[j] = 0;
                j += 1;
                if j == k {
                    return Ok(sum / factorial(k));
                }
            }
        }
    }

    /// Monte-Carlo estimate of `1/(d+1)! int f(xi_0)..f(xi_d) V^2`.
    ///
    /// When atoms carry several component labels the `(d+1)`-tuples of
    /// components are sampled as separate strata with equal sample counts;
    /// otherwise vertices are drawn i.i.d. from the normalized weights.
    pub fn det_via_simplex(&self, n_samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
        if n_samples < MIN_SAMPLES {
            return Err(Error::TooFewSamples { requested: n_samples, min: MIN_SAMPLES });
        }
        let mass = self.mass();
        if !(mass > 0.0) {
            return Ok(MonteCarloEstimate { value: 0.0, std_error: 0.0, samples: n_samples, seed });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.d + 1;
        let n_comp = self.component.iter().copied().max().unwrap_or(0) + 1;
        // per-component atom lists and masses
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
        for (i, &c) in self.component.iter().enumerate() {
            if self.w[i] > 0.0 {
                members[c].push(i);
            }
        }
        let comp_mass: Vec<f64> = members.iter().map(|m| m.iter().map(|&i| self.w[i]).sum()).collect();
        let live: Vec<usize> = (0..n_comp).filter(|&c| comp_mass[c] > 0.0).collect();
        let samplers: Vec<Option<WeightedIndex<f64>>> = members
            .iter()
            .map(|m| if m.is_empty() { None } else { WeightedIndex::new(m.iter().map(|&i| self.w[i])).ok() })
            .collect();

        let n_strata = live.len().pow(k as u32);
        let per = (n_samples / n_strata).max(2);
        let mut value = 0.0;
        let mut var = 0.0;
        let mut strata = vec![0usize; k];
        let mut verts: Vec<&[f64]> = Vec::with_capacity(k);
        for _ in 0..n_strata {
            let comps: Vec<usize> = strata.iter().map(|&s| live[s]).collect();
            let weight: f64 = comps.iter().map(|&c| comp_mass[c]).product();
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..per {
                verts.clear();
                for &c in &comps {
                    let j = samplers[c].as_ref().map_or(0, |w| w.sample(&mut rng));
                    verts.push(self.atom(members[c][j]));
                }
                let v2 = parallelotope_volume(self.d, &verts).powi(2);
                s1 += v2;
                s2 += v2 * v2;
            }
            let mean = s1 / per as f64;
            let sample_var = ((s2 / per as f64 - mean * mean) * per as f64 / (per - 1) as f64).max(0.0);
            value += weight * mean;
            var += weight * weight * sample_var / per as f64;
            // next stratum
            for s in strata.iter_mut() {
                *s += 1;
                if *s < live.len() {
                    break;
                }
                *s = 0;
            }
        }
        let f = factorial(k);
        Ok(MonteCarloEstimate { value: value / f, std_error: var.sqrt() / f, samples: per * n_strata, seed })
    }

    /// Smallest eigenpair of the velocity covariance; `None` for zero mass.
    pub fn hyperplane_degeneracy(&self, tol: f64) -> Option<Degeneracy> {
        let mass = self.mass();
        if !(mass > 0.0) {
            return None;
        }
        let s = self.moment_matrix() / mass;
        let d = self.d;
        let mean = s.view((1, 0), (d, 1)).into_owned();
        let cov = s.view((1, 1), (d, d)).into_owned() - &mean * mean.transpose();
        let cov = 0.5 * (&cov + cov.transpose());
        let (lambda, v): (f64, Vector) = linalg::min_eigenpair(&cov);
        let scale = linalg::eigenvalues(&cov).iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1.0);
        Some(Degeneracy {
            is_degenerate: lambda <= tol * scale,
            min_eigenvalue: lambda,
            plane_normal: v.iter().copied().collect(),
        })
    }

    /// `f_bar(s, y, .)` at the image `(s, y)` of `(t, x)`: atoms move to
    /// `chi = L xi - alpha x` and weights, being densities in space, gain `L^d`.
    pub fn push_forward(&self, map: &ProjectiveMap, t: f64, x: &[f64]) -> Result<(Vec<f64>, Self)> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.len() });
        }
        let mut point = vec![t];
        point.extend_from_slice(x);
        let image = map.forward(&point)?;
        let l = map.factor(t);
        let alpha = map.alpha();
        let xi =
            (0..self.len()).flat_map(|i| self.atom(i).iter().zip(x).map(move |(v, xk)| l * v - alpha * xk)).collect();
        let w = self.w.iter().map(|v| v * l.powi(self.d as i32)).collect();
        Ok((image, Self { d: self.d, xi, w, component: self.component.clone() }))
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}
