//! Projected stochastic subgradient baseline with `alpha_k = alpha0 / sqrt(k)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, param, Error, Result};
use crate::game::GameOracle;
use crate::report::{Monitor, RunReport};
use crate::rng::RandomStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgConfig {
    pub alpha0: f64,
    pub iters: u64,
}

impl SgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) || !self.alpha0.is_finite() {
            return param("alpha0 must be positive");
        }
        Ok(())
    }
}

/// One operator sample per iteration. For primal-dual games the multiplier
/// block is part of the joint iterate and shares the steplength.
pub fn run<G: GameOracle + ?Sized>(
    game: &G,
    config: &SgConfig,
    x0: &[f64],
    stream: &RandomStream,
    mut monitor: Monitor<'_>,
) -> Result<RunReport> {
    config.validate()?;
    let dim = game.layout().total_dim();
    if x0.len() != dim {
        return param("x0 has wrong dimension");
    }
    check_finite(x0, "initial point", 0)?;
    let feasible = game.feasible();
    let last = config.iters as usize;
    let mut rng = stream.derive(0);
    let mut x = x0.to_vec();
    let mut v = vec![0.0; dim];
    monitor.restart_clock();
    monitor.record(0, &x, 0)?;
    for k in 1..=config.iters {
        let alpha = config.alpha0 / (k as f64).sqrt();
        game.operator_sample_into(&x, &mut rng, &mut v);
        x.iter_mut().zip(&v).for_each(|(xi, vi)| *xi -= alpha * vi);
        feasible.project_in_place(&mut x);
        if x.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { what: "iterate", iter: k as usize });
        }
        monitor.maybe_record(k as usize, last, &x, k)?;
    }
    Ok(monitor.finish())
}
