//! Solution-quality metrics.
//!
//! The Yosida residual `|T_lambda(x)| = |x - J_lambda(x)| / lambda` vanishes
//! exactly at solutions of the inclusion; the resolvent is estimated by a
//! long projected SA run. The best-response residual measures how far each
//! player is from its smoothed proximal best response.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::game::GameOracle;
use crate::rng::RandomStream;
use crate::smoothing::{zsol_solve, SmoothingParams};
use crate::stats::{dist, Estimate, MeanEstimate, Running, RunningVec};
use crate::vrspp::inner_resolvent_batched;

fn default_theta() -> f64 {
    0.1
}
fn default_inner_steps() -> u64 {
    2_000
}
fn default_one() -> usize {
    1
}
fn default_repeats() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualConfig {
    pub lambda: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_inner_steps")]
    pub inner_steps: u64,
    #[serde(default = "default_one")]
    pub samples_per_step: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl ResidualConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            theta: default_theta(),
            inner_steps: default_inner_steps(),
            samples_per_step: 1,
            repeats: default_repeats(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return param("residual lambda must be positive");
        }
        if !(self.theta > 0.0) {
            return param("residual theta must be positive");
        }
        if self.inner_steps == 0 || self.samples_per_step == 0 || self.repeats == 0 {
            return param("residual inner_steps, samples_per_step and repeats must be >= 1");
        }
        Ok(())
    }
}

/// Estimate of `|T_lambda(x)|`: the mean over `repeats` independent resolvent
/// estimates (child streams `0..repeats`) with its standard error.
pub fn yosida_residual<G: GameOracle + ?Sized>(
    game: &G,
    x: &[f64],
    config: &ResidualConfig,
    stream: &RandomStream,
) -> Result<Estimate> {
    config.validate()?;
    let values: Vec<f64> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let mut s = stream.derive(r as u64);
            let j = inner_resolvent_batched(
                game,
                x,
                config.lambda,
                config.theta,
                config.inner_steps,
                config.samples_per_step,
                &mut s,
            )?;
            Ok(dist(x, &j) / config.lambda)
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().collect::<Running>().estimate())
}

/// Componentwise estimate of the vector `T_lambda(x)` over `repeats`
/// resolvent estimates, for testing whether it vanishes.
pub fn yosida_mean<G: GameOracle + ?Sized>(
    game: &G,
    x: &[f64],
    config: &ResidualConfig,
    stream: &RandomStream,
) -> Result<MeanEstimate> {
    config.validate()?;
    let rows: Vec<Vec<f64>> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let mut s = stream.derive(r as u64);
            let j = inner_resolvent_batched(
                game,
                x,
                config.lambda,
                config.theta,
                config.inner_steps,
                config.samples_per_step,
                &mut s,
            )?;
            Ok(x.iter().zip(&j).map(|(a, b)| (a - b) / config.lambda).collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = RunningVec::new(x.len());
    rows.iter().for_each(|r| acc.push(r));
    Ok(acc.finish())
}

fn default_br_steps() -> usize {
    400
}
fn default_step_scale() -> f64 {
    0.2
}
fn default_br_batch() -> u64 {
    2_000
}

/// Budget of the high-accuracy best-response solve inside [`br_residual`].
///
/// The reference solve runs with steplength `step_scale * zeta`. Smoothing a
/// kinked objective with radius `eta` raises its curvature by `O(1/eta)`, so
/// the solver's own steplength can exceed the stable range near the kink; a
/// shorter step with more iterations keeps the reference accurate there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrResidualConfig {
    #[serde(default = "default_br_steps")]
    pub steps: usize,
    #[serde(default = "default_br_batch")]
    pub max_batch: u64,
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
}

impl Default for BrResidualConfig {
    fn default() -> Self {
        Self { steps: default_br_steps(), max_batch: default_br_batch(), step_scale: default_step_scale() }
    }
}

/// Mean over players of `|x^i - B_{i,eta}(x)|`, each best response from a
/// long ZSOL run on child stream `i`.
pub fn br_residual<G: GameOracle + ?Sized>(
    game: &G,
    params: &SmoothingParams,
    x: &[f64],
    config: &BrResidualConfig,
    stream: &RandomStream,
) -> Result<f64> {
    if config.steps == 0 || config.max_batch == 0 {
        return param("br residual needs steps >= 1 and max_batch >= 1");
    }
    if !(config.step_scale > 0.0) {
        return param("br residual step_scale must be positive");
    }
    params.validate()?;
    let mut p = params.clone();
    p.max_batch = config.max_batch;
    p.zeta *= config.step_scale;
    let layout = game.layout();
    let n = layout.n_players();
    let dists: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let b = zsol_solve(game, &p, i, x, config.steps, &stream.derive(i as u64))?;
            Ok(dist(&x[layout.block(i)], &b.v))
        })
        .collect::<Result<_>>()?;
    Ok(dists.iter().sum::<f64>() / n as f64)
}
