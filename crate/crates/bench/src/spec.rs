//! The experiment document: one JSON file describing a game, one or more
//! solvers, the seed list, a budget, the residual to report and an optional
//! parameter sweep.

use std::path::Path;

use hgame_core::bilevel::BilevelParams;
use hgame_core::mlmf::MlmfParams;
use hgame_core::residual::{BrResidualConfig, ResidualConfig};
use hgame_core::smoothing::{Relaxation, SmoothingParams};
use hgame_core::vrspp::{Schedule, VrSppConfig};
use hgame_core::{Cadence, RandomStream, SetKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BenchError, Result};

fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}
fn default_n() -> usize {
    13
}
fn default_followers() -> usize {
    10
}
fn default_b() -> f64 {
    7.0
}
fn default_a_lo() -> f64 {
    33.0
}
fn default_a_hi() -> f64 {
    37.0
}
fn default_cost_hi() -> f64 {
    100.0
}
fn default_follower_cost() -> f64 {
    50.0
}
fn default_cap() -> f64 {
    5.0
}
fn default_one() -> f64 {
    1.0
}
fn default_q() -> f64 {
    3.0
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
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub game: GameSpec,
    pub solvers: Solvers,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub budget: Budget,
    /// With several solvers, give every solver after the first the sample
    /// count of the first solver's run.
    #[serde(default = "default_true")]
    pub matched_budget: bool,
    #[serde(default = "final_only")]
    pub cadence: Cadence,
    #[serde(default)]
    pub residual: ResidualSpec,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub x0: InitSpec,
    /// Default output directory when the CLI is not given `--out`.
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn final_only() -> Cadence {
    Cadence::FinalOnly
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Solvers {
    One(SolverSpec),
    Many(Vec<SolverSpec>),
}

impl Solvers {
    pub fn as_slice(&self) -> &[SolverSpec] {
        match self {
            Solvers::One(s) => std::slice::from_ref(s),
            Solvers::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum GameSpec {
    Mlmf(MlmfSpec),
    MlmfConstrained {
        #[serde(flatten)]
        base: MlmfSpec,
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default = "default_one")]
        noise_half_width: f64,
    },
    Bilevel(BilevelSpec),
}

/// Leader costs are drawn from `U(0, leader_cost_hi)` per seed unless given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlmfSpec {
    #[serde(default = "default_n")]
    pub n_leaders: usize,
    #[serde(default = "default_followers")]
    pub n_followers: usize,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_a_lo")]
    pub a_lo: f64,
    #[serde(default = "default_a_hi")]
    pub a_hi: f64,
    #[serde(default = "default_cost_hi")]
    pub leader_cost_hi: f64,
    #[serde(default)]
    pub leader_cost: Option<Vec<f64>>,
    #[serde(default = "default_follower_cost")]
    pub follower_cost: f64,
}

impl Default for MlmfSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BilevelSlopes {
    /// `b_i ~ U(0, 3)`, `l_i ~ U(0, 1)`.
    #[default]
    Random,
    /// `b_i = Q_i`, `l_i = 1`: both lower-level branches coincide.
    Coincident,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilevelSpec {
    #[serde(default = "default_n")]
    pub n_players: usize,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub slopes: BilevelSlopes,
    #[serde(default = "default_cost_hi")]
    pub d_hi: f64,
    #[serde(default = "default_a_lo")]
    pub a_lo: f64,
    #[serde(default = "default_a_hi")]
    pub a_hi: f64,
    /// Strong-monotonicity shift added to every player's cost.
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "whole_space")]
    pub set: SetKind,
}

fn whole_space() -> SetKind {
    SetKind::WholeSpace
}

impl Default for BilevelSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// A concrete game instance, drawn per seed.
#[derive(Clone, Debug)]
pub enum GameInstance {
    Mlmf(MlmfParams),
    MlmfConstrained(MlmfParams),
    Bilevel(BilevelParams),
}

impl MlmfSpec {
    fn instantiate(&self, stream: &mut RandomStream) -> MlmfParams {
        let leader_cost = match &self.leader_cost {
            Some(c) => c.clone(),
            None => (0..self.n_leaders)
                .map(|_| stream.uniform(0.0, self.leader_cost_hi).unwrap_or(0.0))
                .collect(),
        };
        MlmfParams {
            n_followers: self.n_followers,
            b: self.b,
            a_lo: self.a_lo,
            a_hi: self.a_hi,
            leader_cost,
            follower_cost: vec![self.follower_cost; self.n_followers],
            constraint: None,
        }
    }

    fn check(&self, at: &str, errs: &mut Vec<String>) {
        if self.n_leaders == 0 {
            errs.push(format!("{at}.n_leaders: must be >= 1"));
        }
        if self.n_followers == 0 {
            errs.push(format!("{at}.n_followers: must be >= 1"));
        }
        if !(self.b > 0.0) {
            errs.push(format!("{at}.b: must be positive"));
        }
        if !(self.a_lo <= self.a_hi) {
            errs.push(format!("{at}.a_lo/a_hi: need a_lo <= a_hi"));
        }
        if !(self.leader_cost_hi >= 0.0) {
            errs.push(format!("{at}.leader_cost_hi: must be nonnegative"));
        }
        if let Some(c) = &self.leader_cost {
            if c.len() != self.n_leaders {
                errs.push(format!("{at}.leader_cost: needs {} entries", self.n_leaders));
            }
        }
    }
}

impl BilevelSpec {
    fn instantiate(&self, stream: &mut RandomStream) -> BilevelParams {
        let n = self.n_players;
        let mut p = match self.slopes {
            BilevelSlopes::Random => BilevelParams::benchmark(n, stream),
            BilevelSlopes::Coincident => BilevelParams::coincident(n, stream),
        };
        p.q = vec![self.q; n];
        if self.slopes == BilevelSlopes::Coincident {
            p.b = vec![self.q; n];
        }
        // rescale the U(0, 100) intercept draws to U(0, d_hi)
        p.d.iter_mut().for_each(|d| *d *= self.d_hi / 100.0);
        p.a_lo = self.a_lo;
        p.a_hi = self.a_hi;
        p.mu = self.mu;
        p.set = self.set.clone();
        p
    }

    fn check(&self, at: &str, errs: &mut Vec<String>) {
        if self.n_players == 0 {
            errs.push(format!("{at}.n_players: must be >= 1"));
        }
        if !(self.q > 0.0) {
            errs.push(format!("{at}.q: must be positive"));
        }
        if !(self.d_hi >= 0.0) {
            errs.push(format!("{at}.d_hi: must be nonnegative"));
        }
        if !(self.a_lo <= self.a_hi) {
            errs.push(format!("{at}.a_lo/a_hi: need a_lo <= a_hi"));
        }
        if !(self.mu >= 0.0) {
            errs.push(format!("{at}.mu: must be nonnegative"));
        }
    }
}

impl GameSpec {
    pub fn instantiate(&self, stream: &mut RandomStream) -> GameInstance {
        match self {
            GameSpec::Mlmf(m) => GameInstance::Mlmf(m.instantiate(stream)),
            GameSpec::MlmfConstrained { base, cap, noise_half_width } => {
                let mut p = base.instantiate(stream);
                p.constraint = Some(hgame_core::mlmf::ExpectationConstraint {
                    cap: vec![*cap; base.n_leaders],
                    noise_half_width: *noise_half_width,
                });
                GameInstance::MlmfConstrained(p)
            }
            GameSpec::Bilevel(b) => GameInstance::Bilevel(b.instantiate(stream)),
        }
    }

    /// Number of players (leaders for the market games).
    pub fn n_players(&self) -> usize {
        match self {
            GameSpec::Mlmf(m) | GameSpec::MlmfConstrained { base: m, .. } => m.n_leaders,
            GameSpec::Bilevel(b) => b.n_players,
        }
    }

    fn check(&self, errs: &mut Vec<String>) {
        match self {
            GameSpec::Mlmf(m) => m.check("game", errs),
            GameSpec::MlmfConstrained { base, cap, noise_half_width } => {
                base.check("game", errs);
                if !(*cap >= 0.0) {
                    errs.push("game.cap: must be nonnegative".into());
                }
                if !(*noise_half_width >= 0.0) {
                    errs.push("game.noise_half_width: must be nonnegative".into());
                }
            }
            GameSpec::Bilevel(b) => b.check("game", errs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum SolverSpec {
    VrSpp {
        lambda: f64,
        #[serde(default = "default_theta")]
        theta: f64,
        schedule: Schedule,
        #[serde(default = "default_min_inner")]
        min_inner_steps: u64,
        #[serde(default)]
        growing_floor: bool,
        #[serde(default = "default_max_inner")]
        max_inner_steps: u64,
    },
    Sg {
        alpha0: f64,
    },
    Arspbr {
        #[serde(default = "SmoothingParams::benchmark")]
        smoothing: SmoothingParams,
        relaxation: Relaxation,
        #[serde(default)]
        player_probs: Option<Vec<f64>>,
    },
}

impl SolverSpec {
    /// Short label used in file names and tables.
    pub fn label(&self) -> String {
        match self {
            SolverSpec::VrSpp { .. } => "vr-spp".into(),
            SolverSpec::Sg { .. } => "sg".into(),
            SolverSpec::Arspbr { relaxation, .. } => match relaxation {
                Relaxation::Unrelaxed => "arspbr".into(),
                Relaxation::Power { exponent } => format!("arspbr-pow{exponent}"),
                Relaxation::Custom { .. } => "arspbr-custom".into(),
            },
        }
    }

    pub fn vrspp_config(&self, outer_iters: usize) -> Option<VrSppConfig> {
        match self {
            SolverSpec::VrSpp { lambda, theta, schedule, min_inner_steps, growing_floor, max_inner_steps } => {
                Some(VrSppConfig {
                    lambda: *lambda,
                    theta: *theta,
                    schedule: schedule.clone(),
                    outer_iters,
                    min_inner_steps: *min_inner_steps,
                    growing_floor: *growing_floor,
                    max_inner_steps: *max_inner_steps,
                })
            }
            _ => None,
        }
    }

    fn check(&self, at: &str, errs: &mut Vec<String>) {
        match self {
            SolverSpec::VrSpp { .. } => {
                if let Err(e) = self.vrspp_config(1).expect("vr-spp").validate() {
                    errs.push(format!("{at}: {e}"));
                }
            }
            SolverSpec::Sg { alpha0 } => {
                if !(*alpha0 > 0.0) || !alpha0.is_finite() {
                    errs.push(format!("{at}.alpha0: must be positive"));
                }
            }
            SolverSpec::Arspbr { smoothing, .. } => {
                if let Err(e) = smoothing.validate() {
                    errs.push(format!("{at}.smoothing: {e}"));
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Budget {
    /// Outer iterations for VR-SPP and ARSPBR, iterations for SG.
    OuterIters { n: usize },
    /// Oracle samples: the largest run that fits.
    Samples { n: u64 },
}

/// How each recorded iterate is scored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum ResidualSpec {
    /// Yosida residual; `lambda` defaults to the VR-SPP solver's lambda.
    Yosida {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default = "default_theta")]
        theta: f64,
        #[serde(default = "yosida_steps")]
        inner_steps: u64,
        #[serde(default = "yosida_batch")]
        samples_per_step: usize,
        #[serde(default = "yosida_repeats")]
        repeats: usize,
    },
    /// Mean distance to each player's smoothed best response.
    BestResponse(BrResidualConfig),
    /// Distance to the closed-form equilibrium of a coincident bilevel game.
    EquilibriumDistance,
}

fn yosida_steps() -> u64 {
    100_000
}
fn yosida_batch() -> usize {
    20
}
fn yosida_repeats() -> usize {
    5
}

impl Default for ResidualSpec {
    fn default() -> Self {
        serde_json::from_str(r#"{"kind":"yosida"}"#).expect("all fields defaulted")
    }
}

impl ResidualSpec {
    pub fn yosida_config(&self, fallback_lambda: f64) -> Option<ResidualConfig> {
        match self {
            ResidualSpec::Yosida { lambda, theta, inner_steps, samples_per_step, repeats } => Some(ResidualConfig {
                lambda: lambda.unwrap_or(fallback_lambda),
                theta: *theta,
                inner_steps: *inner_steps,
                samples_per_step: *samples_per_step,
                repeats: *repeats,
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum InitSpec {
    /// Each primal coordinate `U(lo, hi)`; multipliers start at zero.
    Uniform { lo: f64, hi: f64 },
    #[default]
    UnitBox,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Player count (leaders for the market games).
    N,
    Alpha0,
    /// `[a_lo, a_hi]` pairs.
    ARange,
    Zeta,
    Eta,
    Lambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<Value>,
    /// Per-point outer-iteration budgets, overriding `budget`.
    #[serde(default)]
    pub outer_iters: Option<Vec<usize>>,
}

/// One resolved sweep point: the spec with the swept value substituted.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub key: String,
    pub game: GameSpec,
    pub solvers: Vec<SolverSpec>,
    pub budget: Budget,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Collects every problem before failing, so a single pass names all
    /// offending fields.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("name: must be nonempty".into());
        }
        if self.seeds.is_empty() {
            errs.push("seeds: need at least one seed".into());
        }
        let mut seen = std::collections::HashSet::new();
        if self.seeds.iter().any(|s| !seen.insert(*s)) {
            errs.push("seeds: duplicate seed".into());
        }
        match self.budget {
            Budget::OuterIters { .. } => {}
            Budget::Samples { n } if n == 0 => errs.push("budget.n: must be positive".into()),
            Budget::Samples { .. } => {}
        }
        if self.solvers.as_slice().is_empty() {
            errs.push("solvers: need at least one solver".into());
        }
        if let InitSpec::Uniform { lo, hi } = self.x0 {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                errs.push("x0: need finite lo <= hi".into());
            }
        }
        if let ResidualSpec::Yosida { lambda, theta, inner_steps, samples_per_step, repeats } = &self.residual {
            if lambda.is_some_and(|l| !(l > 0.0)) {
                errs.push("residual.lambda: must be positive".into());
            }
            if !(*theta > 0.0) {
                errs.push("residual.theta: must be positive".into());
            }
            if *inner_steps == 0 || *samples_per_step == 0 || *repeats == 0 {
                errs.push("residual: inner_steps, samples_per_step and repeats must be >= 1".into());
            }
            if lambda.is_none() && !self.solvers.as_slice().iter().any(|s| matches!(s, SolverSpec::VrSpp { .. })) {
                errs.push("residual.lambda: required when no vr-spp solver is listed".into());
            }
        }
        if let ResidualSpec::EquilibriumDistance = self.residual {
            let ok = matches!(&self.game, GameSpec::Bilevel(b) if b.slopes == BilevelSlopes::Coincident && b.set == SetKind::WholeSpace);
            if !ok {
                errs.push("residual: equilibrium-distance needs a coincident bilevel game on the whole space".into());
            }
        }
        if let ResidualSpec::BestResponse(c) = &self.residual {
            if c.steps == 0 || c.max_batch == 0 || !(c.step_scale > 0.0) {
                errs.push("residual: best-response needs positive steps, max_batch and step_scale".into());
            }
            if !self.solvers.as_slice().iter().any(|s| matches!(s, SolverSpec::Arspbr { .. })) {
                errs.push("residual: best-response needs an arspbr solver for its smoothing parameters".into());
            }
        }
        self.game.check(&mut errs);
        for (i, s) in self.solvers.as_slice().iter().enumerate() {
            s.check(&format!("solvers[{i}]"), &mut errs);
        }
        if self.solvers.as_slice().iter().any(|s| matches!(s, SolverSpec::Arspbr { .. }))
            && !matches!(self.game, GameSpec::Bilevel(_))
        {
            errs.push("solvers: arspbr is only wired to the bilevel game".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                errs.push("sweep.values: need at least one value".into());
            }
            if let Some(b) = &sweep.outer_iters {
                if b.len() != sweep.values.len() {
                    errs.push("sweep.outer_iters: needs one entry per sweep value".into());
                }
            }
        }
        if errs.is_empty() {
            match self.sweep_points() {
                Ok(points) => {
                    for p in &points {
                        let mut sub = self.clone();
                        sub.game = p.game.clone();
                        sub.solvers = Solvers::Many(p.solvers.clone());
                        sub.sweep = None;
                        let mut inner = Vec::new();
                        sub.game.check(&mut inner);
                        for (i, s) in p.solvers.iter().enumerate() {
                            s.check(&format!("solvers[{i}]"), &mut inner);
                        }
                        errs.extend(inner.into_iter().map(|e| format!("sweep point {}: {e}", p.key)));
                    }
                }
                Err(BenchError::Invalid(v)) => errs.extend(v),
                Err(e) => errs.push(e.to_string()),
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(BenchError::Invalid(errs))
        }
    }

    /// Expands the sweep; a spec without one has the single point `"base"`.
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>> {
        let base = SweepPoint {
            key: "base".into(),
            game: self.game.clone(),
            solvers: self.solvers.as_slice().to_vec(),
            budget: self.budget.clone(),
        };
        let Some(sweep) = &self.sweep else {
            return Ok(vec![base]);
        };
        let mut out = Vec::with_capacity(sweep.values.len());
        for (idx, v) in sweep.values.iter().enumerate() {
            let mut p = base.clone();
            let bad = |what: &str| BenchError::invalid(format!("sweep.values[{idx}]: expected {what}, got {v}"));
            match sweep.param {
                SweepParam::N => {
                    let n = v.as_u64().filter(|n| *n > 0).ok_or_else(|| bad("a positive integer"))? as usize;
                    match &mut p.game {
                        GameSpec::Mlmf(m) | GameSpec::MlmfConstrained { base: m, .. } => {
                            m.n_leaders = n;
                            m.leader_cost = None;
                        }
                        GameSpec::Bilevel(b) => b.n_players = n,
                    }
                    p.key = format!("N={n}");
                }
                SweepParam::ARange => {
                    let pair = v
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
                        .ok_or_else(|| bad("a [lo, hi] pair"))?;
                    match &mut p.game {
                        GameSpec::Mlmf(m) | GameSpec::MlmfConstrained { base: m, .. } => {
                            m.a_lo = pair.0;
                            m.a_hi = pair.1;
                        }
                        GameSpec::Bilevel(b) => {
                            b.a_lo = pair.0;
                            b.a_hi = pair.1;
                        }
                    }
                    p.key = format!("a=[{},{}]", pair.0, pair.1);
                }
                param => {
                    let x = v.as_f64().ok_or_else(|| bad("a number"))?;
                    let mut hit = false;
                    for s in &mut p.solvers {
                        match (param, s) {
                            (SweepParam::Alpha0, SolverSpec::Sg { alpha0 }) => {
                                *alpha0 = x;
                                hit = true;
                            }
                            (SweepParam::Lambda, SolverSpec::VrSpp { lambda, .. }) => {
                                *lambda = x;
                                hit = true;
                            }
                            (SweepParam::Zeta, SolverSpec::Arspbr { smoothing, .. }) => {
                                smoothing.zeta = x;
                                hit = true;
                            }
                            (SweepParam::Eta, SolverSpec::Arspbr { smoothing, .. }) => {
                                smoothing.eta = x;
                                hit = true;
                            }
                            _ => {}
                        }
                    }
                    if !hit {
                        return Err(BenchError::invalid(format!(
                            "sweep.param: no listed solver takes {param:?}"
                        )));
                    }
                    let name = match param {
                        SweepParam::Alpha0 => "alpha0",
                        SweepParam::Lambda => "lambda",
                        SweepParam::Zeta => "zeta",
                        _ => "eta",
                    };
                    p.key = format!("{name}={x}");
                }
            }
            if let Some(b) = &sweep.outer_iters {
                p.budget = Budget::OuterIters { n: b[idx] };
            }
            out.push(p);
        }
        Ok(out)
    }
}
