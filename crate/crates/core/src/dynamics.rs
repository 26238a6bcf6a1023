//! Discrete-time simulators `x_{t+1} = f(x_t, u_t) + ν_t`, bounded noise and
//! input projection. Everything downstream treats the model as a black box
//! that maps (state, projected input, noise) to the next state.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::controller::Controller;
use crate::registry::Registry;
use crate::workspace::Bounds;

pub trait Dynamics: Send + Sync {
    fn name(&self) -> &'static str;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// One step with an already projected input and a given noise vector.
    fn step(&self, x: &[f64], u: &[f64], nu: &[f64]) -> Vec<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub tau: f64,
    pub state_dim: usize,
}

/// `sin(a)/a` with the removable singularity filled in.
pub fn sinc(a: f64) -> f64 {
    if a.abs() < 1e-8 {
        1.0 - a * a / 6.0
    } else {
        a.sin() / a
    }
}

/// Differential-drive robot: state `[x, y, θ]`, input `[v, ω]`. The
/// position update uses `v` without a factor of τ.
#[derive(Clone, Debug)]
pub struct Unicycle {
    pub tau: f64,
}

impl Dynamics for Unicycle {
    fn name(&self) -> &'static str {
        "unicycle"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &[f64], u: &[f64], nu: &[f64]) -> Vec<f64> {
        let half = 0.5 * u[1] * self.tau;
        let s = u[0] * sinc(half);
        vec![
            x[0] + s * (x[2] + half).cos() + nu[0],
            x[1] + s * (x[2] + half).sin() + nu[1],
            x[2] + self.tau * u[1] + nu[2],
        ]
    }
}

/// `x_{t+1} = x_t + τ u_t + ν_t`.
#[derive(Clone, Debug)]
pub struct SingleIntegrator {
    pub dim: usize,
    pub tau: f64,
}

impl Dynamics for SingleIntegrator {
    fn name(&self) -> &'static str {
        "single_integrator"
    }

    fn state_dim(&self) -> usize {
        self.dim
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn step(&self, x: &[f64], u: &[f64], nu: &[f64]) -> Vec<f64> {
        x.iter().zip(u).zip(nu).map(|((xi, ui), ni)| xi + self.tau * ui + ni).collect()
    }
}

pub fn dynamics_registry() -> Registry<dyn Dynamics, DynamicsParams> {
    Registry::<dyn Dynamics, DynamicsParams>::new("dynamics model")
        .register("unicycle", |p| {
            if p.state_dim != 3 {
                return Err(format!("needs a 3-dimensional state, scenario has {}", p.state_dim));
            }
            check_tau(p.tau)?;
            Ok(Box::new(Unicycle { tau: p.tau }))
        })
        .register("single_integrator", |p| {
            check_tau(p.tau)?;
            Ok(Box::new(SingleIntegrator { dim: p.state_dim, tau: p.tau }))
        })
}

fn check_tau(tau: f64) -> Result<(), String> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(format!("step duration must be positive, got {tau}"))
    }
}

/// Bounded disturbance model; every component stays in `[-V, V]`.
pub trait Noise: Send + Sync {
    fn name(&self) -> &'static str;
    fn bound(&self) -> f64;
    fn sample(&self, dim: usize, rng: &mut dyn RngCore) -> Vec<f64>;
}

#[derive(Clone, Debug)]
pub struct UniformNoise {
    pub bound: f64,
}

impl Noise for UniformNoise {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn sample(&self, dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        if self.bound == 0.0 {
            return vec![0.0; dim];
        }
        (0..dim).map(|_| rng.gen_range(-self.bound..=self.bound)).collect()
    }
}

/// Gaussian with σ = V/3, resampled until inside `[-V, V]`.
#[derive(Clone, Debug)]
pub struct TruncatedGaussianNoise {
    pub bound: f64,
}

impl Noise for TruncatedGaussianNoise {
    fn name(&self) -> &'static str {
        "truncated_gaussian"
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn sample(&self, dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        if self.bound == 0.0 {
            return vec![0.0; dim];
        }
        let sigma = self.bound / 3.0;
        (0..dim)
            .map(|_| loop {
                // Box-Muller
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos() * sigma;
                if z.abs() <= self.bound {
                    break z;
                }
            })
            .collect()
    }
}

pub fn noise_registry() -> Registry<dyn Noise, f64> {
    Registry::<dyn Noise, f64>::new("noise model")
        .register("uniform", |&v| {
            check_bound(v)?;
            Ok(Box::new(UniformNoise { bound: v }))
        })
        .register("truncated_gaussian", |&v| {
            check_bound(v)?;
            Ok(Box::new(TruncatedGaussianNoise { bound: v }))
        })
}

fn check_bound(v: f64) -> Result<(), String> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("noise bound must be finite and >= 0, got {v}"))
    }
}

/// Euclidean projection onto the input box (componentwise clamp).
pub fn project_input(u: &[f64], input_box: &Bounds) -> Vec<f64> {
    input_box.clamp(u)
}

/// The closed-loop system: model, noise and input bounds together.
pub struct System {
    pub dynamics: Box<dyn Dynamics>,
    pub noise: Box<dyn Noise>,
    pub input_box: Bounds,
}

impl System {
    pub fn new(dynamics: Box<dyn Dynamics>, noise: Box<dyn Noise>, input_box: Bounds) -> Self {
        System { dynamics, noise, input_box }
    }

    /// One noisy closed-loop step under controller `ctrl`.
    pub fn closed_loop_step(&self, x: &[f64], ctrl: &dyn Controller, rng: &mut dyn RngCore) -> Vec<f64> {
        let u = project_input(&ctrl.act(x), &self.input_box);
        let nu = self.noise.sample(self.dynamics.state_dim(), rng);
        self.dynamics.step(x, &u, &nu)
    }

    /// Noise-free closed-loop step.
    pub fn nominal_step(&self, x: &[f64], ctrl: &dyn Controller) -> Vec<f64> {
        let u = project_input(&ctrl.act(x), &self.input_box);
        self.dynamics.step(x, &u, &vec![0.0; self.dynamics.state_dim()])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    /// `H + 1` states including the start.
    pub states: Vec<Vec<f64>>,
    /// First index whose state lies outside the state box.
    pub left_domain: Option<usize>,
}

/// Run `ctrl` for `h >= 1` steps from `x0`.
pub fn rollout(
    sys: &System,
    x0: &[f64],
    ctrl: &dyn Controller,
    h: usize,
    state_box: &Bounds,
    rng: &mut dyn RngCore,
) -> Rollout {
    assert!(h >= 1, "rollout horizon must be at least 1");
    let mut states = Vec::with_capacity(h + 1);
    states.push(x0.to_vec());
    let mut left_domain = (!state_box.contains(x0)).then_some(0);
    for t in 1..=h {
        let next = sys.closed_loop_step(&states[t - 1], ctrl, rng);
        if left_domain.is_none() && !state_box.contains(&next) {
            left_domain = Some(t);
        }
        states.push(next);
    }
    Rollout { states, left_domain }
}
