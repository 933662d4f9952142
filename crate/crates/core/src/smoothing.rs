//! Randomized smoothing, zeroth-order proximal best responses and the
//! asynchronous relaxed best-response scheme.
//!
//! Player `i`'s smoothed objective is `f_{i,eta}(v) = E[f_i(v + eta u)]` with
//! `u` uniform on the unit ball. Its proximal best response minimises
//! `phi(v) = f_{i,eta}(v, x^{-i}) + c/2 |v - x^i|^2`, which is solved with
//! projected steps along mini-batched zeroth-order gradient estimates.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, param, Error, Result};
use crate::game::GameOracle;
use crate::report::{Monitor, RunReport};
use crate::rng::RandomStream;
use crate::stats::{MeanEstimate, RunningVec};

/// Zeroth-order gradient estimator of the smoothed proximal objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZoEstimator {
    /// `(n/eta) phi(v + eta u) u`, one evaluation per direction.
    OnePoint,
    /// `(n/(2 eta)) (phi(v + eta u) - phi(v - eta u)) u` with the same
    /// scenario at both points. Same mean, far smaller variance.
    #[default]
    Antithetic,
}

/// Mini-batch size rule for the inner solver, in step `t = 0, 1, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BatchRule {
    /// `ceil(base^(t+1))`.
    Geometric { base: f64 },
    /// `ceil(q^-(t+1))` for a contraction factor `0 < q < 1`.
    Contraction { q: f64 },
    Constant { n: u64 },
}

impl BatchRule {
    pub fn size(&self, t: usize, cap: u64) -> u64 {
        let e = (t + 1) as f64;
        let raw = match *self {
            BatchRule::Geometric { base } => base.powf(e).ceil(),
            BatchRule::Contraction { q } => q.powf(-e).ceil(),
            BatchRule::Constant { n } => n as f64,
        };
        if raw.is_finite() {
            raw.clamp(1.0, cap as f64) as u64
        } else {
            cap
        }
    }
}

/// Inner step count `T_k` at outer iteration `k >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StepsRule {
    /// `max(1, ceil(ln(k^power)))`.
    LogPower { power: f64 },
    Fixed { steps: usize },
}

impl StepsRule {
    pub fn steps(&self, k: usize) -> usize {
        match *self {
            StepsRule::LogPower { power } => {
                let v = (power * (k.max(1) as f64).ln()).ceil();
                if v >= 1.0 {
                    v as usize
                } else {
                    1
                }
            }
            StepsRule::Fixed { steps } => steps.max(1),
        }
    }
}

fn default_prox() -> f64 {
    1.0
}
fn default_max_batch() -> u64 {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub eta: f64,
    #[serde(default = "default_prox")]
    pub prox_weight: f64,
    pub zeta: f64,
    pub batch: BatchRule,
    #[serde(default = "default_max_batch")]
    pub max_batch: u64,
    pub steps: StepsRule,
    #[serde(default)]
    pub estimator: ZoEstimator,
}

impl SmoothingParams {
    /// Benchmark settings: `eta = 0.1`, `zeta = 0.01`, `N_t = ceil(1.5^(t+1))`,
    /// `T_k = ceil(ln k^1.5)`, `c = 1`.
    pub fn benchmark() -> Self {
        Self {
            eta: 0.1,
            prox_weight: 1.0,
            zeta: 0.01,
            batch: BatchRule::Geometric { base: 1.5 },
            max_batch: default_max_batch(),
            steps: StepsRule::LogPower { power: 1.5 },
            estimator: ZoEstimator::Antithetic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return param("eta must be positive");
        }
        if !(self.prox_weight > 0.0) {
            return param("prox_weight must be positive");
        }
        if !(self.zeta > 0.0) {
            return param("zeta must be positive");
        }
        if self.max_batch == 0 {
            return param("max_batch must be >= 1");
        }
        match self.batch {
            BatchRule::Geometric { base } if !(base > 1.0) => param("batch base must exceed 1"),
            BatchRule::Contraction { q } if !(q > 0.0 && q < 1.0) => param("batch q must lie in (0, 1)"),
            BatchRule::Constant { n } if n == 0 => param("constant batch must be >= 1"),
            _ => Ok(()),
        }
    }
}

/// `1 - 2 mu zeta + 2 zeta^2 alpha^2` for a `mu`-strongly convex,
/// `alpha`-smooth inner problem.
pub fn contraction_factor(mu: f64, alpha: f64, zeta: f64) -> f64 {
    1.0 - 2.0 * mu * zeta + 2.0 * zeta * zeta * alpha * alpha
}

fn with_block(x: &[f64], range: std::ops::Range<usize>, v: &[f64], out: &mut [f64]) {
    out.copy_from_slice(x);
    out[range].copy_from_slice(v);
}

/// One draw of `f_i(v_i + eta u, x^{-i}, w)` with `u` uniform in the unit ball.
pub fn smoothed_value_sample<G: GameOracle + ?Sized>(
    game: &G,
    params: &SmoothingParams,
    i: usize,
    v_i: &[f64],
    x: &[f64],
    stream: &mut RandomStream,
) -> f64 {
    let range = game.layout().block(i);
    let mut u = vec![0.0; v_i.len()];
    stream.fill_unit_ball(&mut u);
    let shifted: Vec<f64> = v_i.iter().zip(&u).map(|(v, e)| v + params.eta * e).collect();
    let mut joint = vec![0.0; x.len()];
    with_block(x, range, &shifted, &mut joint);
    game.objective_sample(i, &joint, stream)
}

/// Mini-batch zeroth-order estimate of the gradient of
/// `phi(v) = f_{i,eta}(v, x^{-i}) + c/2 |v - x^i|^2` at `v_i`.
pub fn zo_gradient_batch<G: GameOracle + ?Sized>(
    game: &G,
    params: &SmoothingParams,
    i: usize,
    v_i: &[f64],
    x: &[f64],
    batch: u64,
    stream: &mut RandomStream,
) -> Result<MeanEstimate> {
    if batch == 0 {
        return param("zo_gradient_batch needs batch >= 1");
    }
    let mut ws = ZoWorkspace::new(game, i, x);
    let mut acc = RunningVec::new(v_i.len());
    let mut g = vec![0.0; v_i.len()];
    for _ in 0..batch {
        ws.sample(game, params, v_i, stream, &mut g);
        acc.push(&g);
    }
    Ok(acc.finish())
}

struct ZoWorkspace {
    i: usize,
    range: std::ops::Range<usize>,
    center: Vec<f64>,
    joint: Vec<f64>,
    u: Vec<f64>,
    point: Vec<f64>,
}

impl ZoWorkspace {
    fn new<G: GameOracle + ?Sized>(game: &G, i: usize, x: &[f64]) -> Self {
        let range = game.layout().block(i);
        let n = range.len();
        Self {
            i,
            center: x[range.clone()].to_vec(),
            range,
            joint: x.to_vec(),
            u: vec![0.0; n],
            point: vec![0.0; n],
        }
    }

    fn phi<G: GameOracle + ?Sized>(
        &mut self,
        game: &G,
        c: f64,
        sign: f64,
        eta: f64,
        v: &[f64],
        stream: &mut RandomStream,
    ) -> f64 {
        let mut prox = 0.0;
        for k in 0..v.len() {
            self.point[k] = v[k] + sign * eta * self.u[k];
            let d = self.point[k] - self.center[k];
            prox += d * d;
        }
        self.joint[self.range.clone()].copy_from_slice(&self.point);
        game.objective_sample(self.i, &self.joint, stream) + 0.5 * c * prox
    }

    fn sample<G: GameOracle + ?Sized>(
        &mut self,
        game: &G,
        params: &SmoothingParams,
        v: &[f64],
        stream: &mut RandomStream,
        out: &mut [f64],
    ) {
        let n = v.len() as f64;
        let (eta, c) = (params.eta, params.prox_weight);
        stream.fill_unit_sphere(&mut self.u);
        let scale = match params.estimator {
            ZoEstimator::OnePoint => self.phi(game, c, 1.0, eta, v, stream) * n / eta,
            ZoEstimator::Antithetic => {
                let mut twin = stream.clone();
                let plus = self.phi(game, c, 1.0, eta, v, stream);
                let minus = self.phi(game, c, -1.0, eta, v, &mut twin);
                (plus - minus) * n / (2.0 * eta)
            }
        };
        out.iter_mut().zip(&self.u).for_each(|(o, u)| *o = scale * u);
    }
}

/// Objective evaluations per gradient draw.
fn evals_per_draw(params: &SmoothingParams) -> u64 {
    match params.estimator {
        ZoEstimator::OnePoint => 1,
        ZoEstimator::Antithetic => 2,
    }
}

/// Result of an inexact smoothed proximal best response.
#[derive(Clone, Debug, PartialEq)]
pub struct ZsolOutput {
    pub v: Vec<f64>,
    /// Objective evaluations used.
    pub samples: u64,
}

/// `n_steps` projected zeroth-order steps on player `i`'s smoothed proximal
/// best-response problem, warm-started at `x^i`. Step `t` uses the child
/// stream `t`.
pub fn zsol_solve<G: GameOracle + ?Sized>(
    game: &G,
    params: &SmoothingParams,
    i: usize,
    x: &[f64],
    n_steps: usize,
    stream: &RandomStream,
) -> Result<ZsolOutput> {
    zsol_trace(game, params, i, x, n_steps, stream, |_, _| {})
}

/// As [`zsol_solve`], calling `observe(t, v^t)` for `t = 0..=n_steps`.
pub fn zsol_trace<G: GameOracle + ?Sized>(
    game: &G,
    params: &SmoothingParams,
    i: usize,
    x: &[f64],
    n_steps: usize,
    stream: &RandomStream,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<ZsolOutput> {
    if n_steps == 0 {
        return param("zsol needs at least one step");
    }
    if i >= game.layout().n_players() {
        return param("player index out of range");
    }
    let mut ws = ZoWorkspace::new(game, i, x);
    let mut v = ws.center.clone();
    let mut g = vec![0.0; v.len()];
    let mut acc = vec![0.0; v.len()];
    let mut samples = 0;
    let per = evals_per_draw(params);
    observe(0, &v);
    for t in 0..n_steps {
        let batch = params.batch.size(t, params.max_batch);
        let mut rng = stream.derive(t as u64);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for _ in 0..batch {
            ws.sample(game, params, &v, &mut rng, &mut g);
            acc.iter_mut().zip(&g).for_each(|(a, gi)| *a += gi);
        }
        let step = params.zeta / batch as f64;
        v.iter_mut().zip(&acc).for_each(|(vi, a)| *vi -= step * a);
        game.feasible().project_player(i, &mut v);
        if v.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { what: "best-response iterate", iter: t + 1 });
        }
        samples += batch * per;
        observe(t + 1, &v);
    }
    Ok(ZsolOutput { v, samples })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Relaxation {
    /// `gamma_k = 1`.
    Unrelaxed,
    /// `gamma_k = k^-exponent`.
    Power { exponent: f64 },
    /// Explicit `gamma_1, gamma_2, ...`; the last value repeats.
    Custom { gammas: Vec<f64> },
}

impl Relaxation {
    pub fn gamma(&self, k: usize) -> f64 {
        match self {
            Relaxation::Unrelaxed => 1.0,
            Relaxation::Power { exponent } => (k.max(1) as f64).powf(-exponent),
            Relaxation::Custom { gammas } => gammas[(k.max(1) - 1).min(gammas.len() - 1)],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Relaxation::Power { exponent } if !(*exponent >= 0.0) => {
                param("relaxation exponent must be nonnegative")
            }
            Relaxation::Custom { gammas } if gammas.is_empty() => param("custom relaxation is empty"),
            Relaxation::Custom { gammas } if gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) => {
                param("relaxation weights must lie in (0, 1]")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArspbrConfig {
    pub relaxation: Relaxation,
    /// Player-selection probabilities; uniform when absent.
    #[serde(default)]
    pub player_probs: Option<Vec<f64>>,
    pub outer_iters: usize,
}

impl ArspbrConfig {
    fn probs(&self, n: usize) -> Result<Vec<f64>> {
        match &self.player_probs {
            None => Ok(vec![1.0 / n as f64; n]),
            Some(p) => {
                if p.len() != n {
                    return param("player_probs needs one entry per player");
                }
                if p.iter().any(|v| !(*v > 0.0)) {
                    return param("player_probs must be positive");
                }
                if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return param("player_probs must sum to one");
                }
                Ok(p.clone())
            }
        }
    }
}

/// Asynchronous relaxed smoothed proximal best-response iteration.
///
/// Step `k = 1..=K` picks a player from the child stream `(k, 0)`, solves its
/// best response on the child stream `(k, 1)`, and moves that player a
/// fraction `gamma_k` toward it.
pub fn arspbr_run<G: GameOracle + ?Sized>(
    game: &G,
    params: &SmoothingParams,
    config: &ArspbrConfig,
    x0: &[f64],
    stream: &RandomStream,
    mut monitor: Monitor<'_>,
) -> Result<RunReport> {
    params.validate()?;
    config.relaxation.validate()?;
    let layout = game.layout();
    if x0.len() != layout.total_dim() {
        return param("x0 has wrong dimension");
    }
    check_finite(x0, "initial point", 0)?;
    let probs = config.probs(layout.n_players())?;
    let last = config.outer_iters;
    let mut x = x0.to_vec();
    let mut samples = 0u64;
    monitor.restart_clock();
    monitor.record(0, &x, 0)?;
    for k in 1..=last {
        let step = stream.derive(k as u64);
        let i = step.derive(0).categorical(&probs);
        let t_k = params.steps.steps(k);
        let br = zsol_solve(game, params, i, &x, t_k, &step.derive(1)).map_err(|e| match e {
            Error::NonFinite { what, .. } => Error::NonFinite { what, iter: k },
            other => other,
        })?;
        let gamma = config.relaxation.gamma(k);
        for (xi, bi) in x[layout.block(i)].iter_mut().zip(&br.v) {
            *xi = (1.0 - gamma) * *xi + gamma * bi;
        }
        samples += br.samples;
        monitor.maybe_record(k, last, &x, samples)?;
    }
    Ok(monitor.finish())
}
