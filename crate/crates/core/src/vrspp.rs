//! Variance-reduced stochastic proximal point method.
//!
//! Each outer step approximates the resolvent `(I + lambda T)^{-1}(x^k)` by a
//! projected stochastic-approximation loop on the strongly monotone map
//! `z -> T(z) + (z - x^k) / lambda`, run for a growing number of steps `N_k`.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, param, Error, Result};
use crate::game::GameOracle;
use crate::report::{Monitor, RunReport};
use crate::rng::RandomStream;

/// Inner sample-size rule `N_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Schedule {
    /// `ceil((k+1)^(2a))`, `a > 1`.
    Polynomial { a: f64 },
    /// `floor(rho^-(k+1))`, `0 < rho < 1`.
    Geometric { rho: f64 },
    /// `floor(r^(k+1))`, `r > 1`.
    GeometricBase { r: f64 },
    Constant { n: u64 },
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Polynomial { a } if !(a > 1.0) => param("polynomial schedule needs a > 1"),
            Schedule::Geometric { rho } if !(rho > 0.0 && rho < 1.0) => {
                param("geometric schedule needs 0 < rho < 1")
            }
            Schedule::GeometricBase { r } if !(r > 1.0) => param("geometric-base schedule needs r > 1"),
            Schedule::Constant { n } if n == 0 => param("constant schedule needs n >= 1"),
            _ => Ok(()),
        }
    }

    fn raw(&self, k: usize) -> f64 {
        let e = (k + 1) as f64;
        match *self {
            Schedule::Polynomial { a } => e.powf(2.0 * a).ceil(),
            Schedule::Geometric { rho } => rho.powf(-e).floor(),
            Schedule::GeometricBase { r } => r.powf(e).floor(),
            Schedule::Constant { n } => n as f64,
        }
    }
}

fn default_theta() -> f64 {
    0.1
}
fn default_min_inner() -> u64 {
    10
}
fn default_max_inner() -> u64 {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VrSppConfig {
    pub lambda: f64,
    /// Inner steplength scale: `alpha_j = theta / j`.
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub schedule: Schedule,
    pub outer_iters: usize,
    /// Floor `J0` on the inner step count.
    #[serde(default = "default_min_inner")]
    pub min_inner_steps: u64,
    /// Use the increasing floor `J0 sqrt(k+1)` instead of `J0`.
    #[serde(default)]
    pub growing_floor: bool,
    /// Cap `N_max` applied to every schedule.
    #[serde(default = "default_max_inner")]
    pub max_inner_steps: u64,
}

impl VrSppConfig {
    pub fn new(lambda: f64, theta: f64, schedule: Schedule, outer_iters: usize) -> Self {
        Self {
            lambda,
            theta,
            schedule,
            outer_iters,
            min_inner_steps: default_min_inner(),
            growing_floor: false,
            max_inner_steps: default_max_inner(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return param("lambda must be positive");
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return param("theta must be positive");
        }
        if self.min_inner_steps == 0 {
            return param("min_inner_steps must be >= 1");
        }
        if self.max_inner_steps == 0 {
            return param("max_inner_steps must be >= 1");
        }
        self.schedule.validate()
    }

    /// `N_k` from the schedule, floored at 1 and capped at `N_max`.
    pub fn sample_schedule(&self, k: usize) -> u64 {
        let raw = self.schedule.raw(k);
        let cap = self.max_inner_steps as f64;
        if raw.is_finite() {
            raw.clamp(1.0, cap) as u64
        } else {
            self.max_inner_steps
        }
    }

    /// Inner step count actually run at outer step `k`.
    pub fn inner_steps(&self, k: usize) -> u64 {
        let floor = if self.growing_floor {
            (self.min_inner_steps as f64 * ((k + 1) as f64).sqrt()).ceil() as u64
        } else {
            self.min_inner_steps
        };
        self.sample_schedule(k).max(floor)
    }

    /// Oracle samples consumed by a full run.
    pub fn total_samples(&self) -> u64 {
        (0..self.outer_iters).map(|k| self.inner_steps(k)).sum()
    }
}

/// Inexact resolvent `(I + lambda T)^{-1}(x_k)` by projected SA with one
/// operator sample per step.
pub fn inner_resolvent<G: GameOracle + ?Sized>(
    game: &G,
    x_k: &[f64],
    lambda: f64,
    theta: f64,
    n_steps: u64,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    inner_resolvent_batched(game, x_k, lambda, theta, n_steps, 1, stream)
}

/// As [`inner_resolvent`], averaging `batch` operator samples per step.
pub fn inner_resolvent_batched<G: GameOracle + ?Sized>(
    game: &G,
    x_k: &[f64],
    lambda: f64,
    theta: f64,
    n_steps: u64,
    batch: usize,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    if n_steps == 0 || batch == 0 {
        return param("inner resolvent needs n_steps >= 1 and batch >= 1");
    }
    if !(lambda > 0.0) {
        return param("lambda must be positive");
    }
    let dim = game.layout().total_dim();
    if x_k.len() != dim {
        return param("iterate has wrong dimension");
    }
    let feasible = game.feasible();
    let inv_lambda = 1.0 / lambda;
    let inv_batch = 1.0 / batch as f64;
    let mut z = x_k.to_vec();
    let mut v = vec![0.0; dim];
    let mut acc = vec![0.0; dim];
    for j in 1..=n_steps {
        let alpha = theta / j as f64;
        if batch == 1 {
            game.operator_sample_into(&z, stream, &mut acc);
        } else {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for _ in 0..batch {
                game.operator_sample_into(&z, stream, &mut v);
                acc.iter_mut().zip(&v).for_each(|(a, s)| *a += s);
            }
            acc.iter_mut().for_each(|a| *a *= inv_batch);
        }
        for ((zi, ai), xi) in z.iter_mut().zip(&acc).zip(x_k) {
            *zi -= alpha * (ai + (*zi - xi) * inv_lambda);
        }
        feasible.project_in_place(&mut z);
        if z.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { what: "inner iterate", iter: j as usize });
        }
    }
    Ok(z)
}

/// Runs `K` outer steps from `x0`. Outer step `k` draws from the child
/// stream `k`, so each step is reproducible on its own.
pub fn run<G: GameOracle + ?Sized>(
    game: &G,
    config: &VrSppConfig,
    x0: &[f64],
    stream: &RandomStream,
    mut monitor: Monitor<'_>,
) -> Result<RunReport> {
    config.validate()?;
    if x0.len() != game.layout().total_dim() {
        return param("x0 has wrong dimension");
    }
    check_finite(x0, "initial point", 0)?;
    let k_max = config.outer_iters;
    let mut x = x0.to_vec();
    let mut samples = 0u64;
    monitor.restart_clock();
    monitor.record(0, &x, 0)?;
    for k in 0..k_max {
        let n_k = config.inner_steps(k);
        let mut child = stream.derive(k as u64);
        x = inner_resolvent(game, &x, config.lambda, config.theta, n_k, &mut child)
            .map_err(|e| match e {
                Error::NonFinite { what, .. } => Error::NonFinite { what, iter: k + 1 },
                other => other,
            })?;
        samples += n_k;
        if k + 1 < k_max {
            monitor.maybe_record(k + 1, k_max, &x, samples)?;
        } else {
            monitor.record(k + 1, &x, samples)?;
        }
    }
    Ok(monitor.finish())
}
