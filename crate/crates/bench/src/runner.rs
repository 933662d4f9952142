//! Executes every (sweep point, seed) pair of a spec on a bounded pool.

use hgame_core::bilevel::BilevelGame;
use hgame_core::mlmf::{ConstrainedMlmfGame, MlmfGame};
use hgame_core::residual::{br_residual, yosida_residual};
use hgame_core::smoothing::{arspbr_run, ArspbrConfig, SmoothingParams};
use hgame_core::stats::{dist, Running};
use hgame_core::{sg, vrspp, Estimate, GameOracle, Monitor, RandomStream, RunReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::spec::{Budget, ExperimentSpec, GameInstance, InitSpec, ResidualSpec, SolverSpec, SweepPoint};

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub root_seed: u64,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
    /// Zero every wall-time column so output is byte-reproducible.
    pub deterministic: bool,
}

impl RunOptions {
    pub fn new(root_seed: u64) -> Self {
        Self { root_seed, jobs: 0, deterministic: false }
    }
}

/// One solver run on one seed at one sweep point.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub sweep_index: usize,
    pub sweep_key: String,
    pub solver: String,
    pub seed: u64,
    pub outcome: std::result::Result<RunReport, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sweep_key: String,
    pub solver: String,
    pub seeds: usize,
    pub failed: usize,
    pub mean_residual: f64,
    pub std_residual: f64,
    pub mean_wall_ms: f64,
    pub mean_samples: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub runs: Vec<RunResult>,
    pub rows: Vec<AggregateRow>,
}

impl ExperimentOutput {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn row(&self, sweep_key: &str, solver: &str) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.sweep_key == sweep_key && r.solver == solver)
    }
}

/// Labels in spec order, suffixed with the position when two coincide.
pub fn solver_labels(solvers: &[SolverSpec]) -> Vec<String> {
    let raw: Vec<String> = solvers.iter().map(SolverSpec::label).collect();
    raw.iter()
        .enumerate()
        .map(|(j, l)| if raw.iter().filter(|o| *o == l).count() > 1 { format!("{l}-{j}") } else { l.clone() })
        .collect()
}

/// Runs the whole spec. Numeric failures are recorded per run rather than
/// aborting the experiment; see [`ExperimentOutput::failures`].
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentOutput> {
    spec.validate()?;
    let points = spec.sweep_points()?;
    let jobs: Vec<(usize, u64)> =
        (0..points.len()).flat_map(|p| spec.seeds.iter().map(move |s| (p, *s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| BenchError::invalid(format!("jobs: {e}")))?;
    let root = RandomStream::new(opts.root_seed);
    // collect() on an indexed parallel iterator keeps input order
    let nested: Vec<Vec<RunResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, seed)| run_point_seed(spec, &points[p], p, seed, &root.derive(p as u64).derive(seed), opts))
            .collect()
    });
    let runs: Vec<RunResult> = nested.into_iter().flatten().collect();
    let rows = aggregate(&runs);
    Ok(ExperimentOutput { runs, rows })
}

/// Aggregates final records grouped by (sweep point, solver), in first-seen
/// order.
pub fn aggregate(runs: &[RunResult]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in runs {
        let k = (r.sweep_key.clone(), r.solver.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(key, solver)| {
            let group: Vec<&RunResult> =
                runs.iter().filter(|r| r.sweep_key == key && r.solver == solver).collect();
            let finals: Vec<(f64, f64, f64)> = group
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .filter_map(|rep| {
                    let last = rep.last()?;
                    Some((last.residual.map_or(f64::NAN, |e| e.value), last.wall_ms, last.samples_cum as f64))
                })
                .collect();
            summarize(key, solver, group.len(), &finals)
        })
        .collect()
}

pub(crate) fn summarize(sweep_key: String, solver: String, seeds: usize, finals: &[(f64, f64, f64)]) -> AggregateRow {
    let res: Running = finals.iter().map(|f| f.0).collect();
    let n = finals.len().max(1) as f64;
    AggregateRow {
        sweep_key,
        solver,
        seeds,
        failed: seeds - finals.len(),
        mean_residual: if finals.is_empty() { f64::NAN } else { res.mean() },
        std_residual: if finals.len() > 1 { res.std_dev() } else { 0.0 },
        mean_wall_ms: finals.iter().map(|f| f.1).sum::<f64>() / n,
        mean_samples: finals.iter().map(|f| f.2).sum::<f64>() / n,
    }
}

fn build_game(inst: &GameInstance) -> hgame_core::Result<Box<dyn GameOracle>> {
    Ok(match inst {
        GameInstance::Mlmf(p) => Box::new(MlmfGame::new(p.clone())?),
        GameInstance::MlmfConstrained(p) => Box::new(ConstrainedMlmfGame::new(p.clone())?),
        GameInstance::Bilevel(p) => Box::new(BilevelGame::new(p.clone())?),
    })
}

fn initial_point(init: &InitSpec, inst: &GameInstance, stream: &mut RandomStream) -> Vec<f64> {
    let (primal, duals) = match inst {
        GameInstance::Mlmf(p) => (p.n_leaders(), 0),
        GameInstance::MlmfConstrained(p) => (p.n_leaders(), p.n_leaders()),
        GameInstance::Bilevel(p) => (p.n_players(), 0),
    };
    let mut x: Vec<f64> = match *init {
        InitSpec::Uniform { lo, hi } => (0..primal).map(|_| stream.uniform(lo, hi).unwrap_or(lo)).collect(),
        InitSpec::UnitBox => (0..primal).map(|_| stream.next_f64()).collect(),
        InitSpec::Zero => vec![0.0; primal],
    };
    x.resize(primal + duals, 0.0);
    x
}

/// Largest outer-iteration count whose cumulative cost fits in `budget`.
fn fit_iters(budget: u64, mut cost: impl FnMut(usize) -> u64) -> usize {
    let mut used = 0u64;
    let mut k = 0usize;
    loop {
        let c = cost(k);
        if c == 0 || used + c > budget {
            return k;
        }
        used += c;
        k += 1;
    }
}

fn arspbr_step_cost(params: &SmoothingParams, k: usize) -> u64 {
    let per = match params.estimator {
        hgame_core::smoothing::ZoEstimator::OnePoint => 1,
        hgame_core::smoothing::ZoEstimator::Antithetic => 2,
    };
    (0..params.steps.steps(k)).map(|t| params.batch.size(t, params.max_batch) * per).sum()
}

/// Iteration count for `solver` under `budget`, and the samples it uses.
fn resolve_budget(solver: &SolverSpec, budget: &Budget) -> (usize, u64) {
    match (solver, budget) {
        (SolverSpec::VrSpp { .. }, Budget::OuterIters { n }) => {
            let cfg = solver.vrspp_config(*n).expect("vr-spp");
            (*n, cfg.total_samples())
        }
        (SolverSpec::VrSpp { .. }, Budget::Samples { n }) => {
            let cfg = solver.vrspp_config(0).expect("vr-spp");
            let k = fit_iters(*n, |k| cfg.inner_steps(k));
            (k, solver.vrspp_config(k).expect("vr-spp").total_samples())
        }
        (SolverSpec::Sg { .. }, Budget::OuterIters { n }) => (*n, *n as u64),
        (SolverSpec::Sg { .. }, Budget::Samples { n }) => (*n as usize, *n),
        (SolverSpec::Arspbr { smoothing, .. }, Budget::OuterIters { n }) => {
            (*n, (1..=*n).map(|k| arspbr_step_cost(smoothing, k)).sum())
        }
        (SolverSpec::Arspbr { smoothing, .. }, Budget::Samples { n }) => {
            let k = fit_iters(*n, |k| arspbr_step_cost(smoothing, k + 1));
            (k, (1..=k).map(|k| arspbr_step_cost(smoothing, k)).sum())
        }
    }
}

fn run_point_seed(
    spec: &ExperimentSpec,
    point: &SweepPoint,
    sweep_index: usize,
    seed: u64,
    stream: &RandomStream,
    opts: &RunOptions,
) -> Vec<RunResult> {
    let labels = solver_labels(&point.solvers);
    let inst = point.game.instantiate(&mut stream.derive(0));
    let x0 = initial_point(&spec.x0, &inst, &mut stream.derive(1));
    let mut budget = point.budget.clone();
    let mut out = Vec::with_capacity(point.solvers.len());
    for (j, solver) in point.solvers.iter().enumerate() {
        let (iters, samples) = resolve_budget(solver, &budget);
        let outcome = run_one(spec, point, &inst, solver, iters, &x0, &stream.derive(2).derive(j as u64), &stream.derive(3), opts)
            .map_err(|e| e.to_string());
        if j == 0 && spec.matched_budget {
            budget = Budget::Samples { n: samples.max(1) };
        }
        out.push(RunResult {
            sweep_index,
            sweep_key: point.key.clone(),
            solver: labels[j].clone(),
            seed,
            outcome,
        });
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    spec: &ExperimentSpec,
    point: &SweepPoint,
    inst: &GameInstance,
    solver: &SolverSpec,
    iters: usize,
    x0: &[f64],
    solver_stream: &RandomStream,
    residual_stream: &RandomStream,
    opts: &RunOptions,
) -> hgame_core::Result<RunReport> {
    let game = build_game(inst)?;
    let game: &dyn GameOracle = game.as_ref();

    let vr_lambda = point.solvers.iter().find_map(|s| match s {
        SolverSpec::VrSpp { lambda, .. } => Some(*lambda),
        _ => None,
    });
    let smoothing = match solver {
        SolverSpec::Arspbr { smoothing, .. } => Some(smoothing.clone()),
        _ => point.solvers.iter().find_map(|s| match s {
            SolverSpec::Arspbr { smoothing, .. } => Some(smoothing.clone()),
            _ => None,
        }),
    };
    let x_star = match (&spec.residual, inst) {
        (ResidualSpec::EquilibriumDistance, GameInstance::Bilevel(p)) => {
            Some(BilevelGame::new(p.clone())?.direct_equilibrium()?)
        }
        _ => None,
    };
    let residual = |k: usize, x: &[f64]| -> hgame_core::Result<Estimate> {
        let s = residual_stream.derive(k as u64);
        match &spec.residual {
            r @ ResidualSpec::Yosida { .. } => {
                let cfg = r.yosida_config(vr_lambda.unwrap_or(0.1)).expect("yosida");
                yosida_residual(game, x, &cfg, &s)
            }
            ResidualSpec::BestResponse(cfg) => {
                let params = smoothing.as_ref().expect("validated: arspbr present");
                let v = br_residual(game, params, x, cfg, &s)?;
                Ok(Estimate { value: v, stderr: 0.0 })
            }
            ResidualSpec::EquilibriumDistance => {
                Ok(Estimate { value: dist(x, x_star.as_ref().expect("computed above")), stderr: 0.0 })
            }
        }
    };
    let mut monitor = Monitor::new(spec.cadence.clone()).with_residual(&residual);
    if opts.deterministic {
        monitor = monitor.without_timing();
    }
    match solver {
        SolverSpec::VrSpp { .. } => {
            let cfg = solver.vrspp_config(iters).expect("vr-spp");
            vrspp::run(game, &cfg, x0, solver_stream, monitor)
        }
        SolverSpec::Sg { alpha0 } => {
            let cfg = sg::SgConfig { alpha0: *alpha0, iters: iters as u64 };
            sg::run(game, &cfg, x0, solver_stream, monitor)
        }
        SolverSpec::Arspbr { smoothing, relaxation, player_probs } => {
            let cfg = ArspbrConfig {
                relaxation: relaxation.clone(),
                player_probs: player_probs.clone(),
                outer_iters: iters,
            };
            arspbr_run(game, smoothing, &cfg, x0, solver_stream, monitor)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hgame_core::vrspp::Schedule;

    #[test]
    fn fit_iters_stops_before_overflowing() {
        assert_eq!(fit_iters(10, |_| 3), 3);
        assert_eq!(fit_iters(2, |_| 3), 0);
        assert_eq!(fit_iters(9, |_| 3), 3);
    }

    #[test]
    fn sample_budget_for_vrspp() {
        let s = SolverSpec::VrSpp {
            lambda: 0.1,
            theta: 0.1,
            schedule: Schedule::Constant { n: 5 },
            min_inner_steps: 1,
            growing_floor: false,
            max_inner_steps: 100,
        };
        assert_eq!(resolve_budget(&s, &Budget::Samples { n: 17 }), (3, 15));
        assert_eq!(resolve_budget(&s, &Budget::OuterIters { n: 4 }), (4, 20));
    }

    #[test]
    fn duplicate_labels_are_disambiguated() {
        let sg = SolverSpec::Sg { alpha0: 0.1 };
        assert_eq!(solver_labels(&[sg.clone(), sg]), vec!["sg-0", "sg-1"]);
    }
}
