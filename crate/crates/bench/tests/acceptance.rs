//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.
//!
//! Set `ACCEPTANCE_ONLY=1,4` to run a subset.

use std::path::PathBuf;
use std::time::Instant;

use hgame_bench::runner::RunResult;
use hgame_bench::{run_experiment, ExperimentOutput, ExperimentSpec, RunOptions};
use hgame_core::bilevel::{BilevelGame, BilevelParams};
use hgame_core::mlmf::{ConstrainedMlmfGame, MlmfGame, MlmfParams};
use hgame_core::residual::{yosida_residual, ResidualConfig};
use hgame_core::smoothing::{
    arspbr_run, contraction_factor, smoothed_value_sample, zo_gradient_batch, zsol_trace, ArspbrConfig, BatchRule,
    Relaxation, SmoothingParams, StepsRule, ZoEstimator,
};
use hgame_core::stats::{dist, dot, log_log_slope, ols_slope, Running};
use hgame_core::vrspp::{self, Schedule, VrSppConfig};
use hgame_core::{sg, Cadence, FeasibleSet, GameOracle, Monitor, PlayerLayout, RandomStream, SetKind};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::json;

const ROOT_SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn run_spec(spec: &ExperimentSpec) -> ExperimentOutput {
    let out = run_experiment(spec, &RunOptions::new(ROOT_SEED)).expect("experiment runs");
    for r in out.runs.iter().filter(|r| r.outcome.is_err()) {
        println!("    run failed: {} {} seed {}: {:?}", r.sweep_key, r.solver, r.seed, r.outcome);
    }
    out
}

fn mean_final(out: &ExperimentOutput, key: &str, solver: &str) -> f64 {
    out.row(key, solver).map_or(f64::NAN, |r| if r.failed > 0 { f64::NAN } else { r.mean_residual })
}

/// Mean of `f(residual)` across seeds at each recorded iteration.
fn mean_trajectory(runs: &[&RunResult], f: impl Fn(f64) -> f64) -> Vec<(usize, f64)> {
    let reps: Vec<_> = runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let Some(first) = reps.first() else { return Vec::new() };
    first
        .records
        .iter()
        .enumerate()
        .map(|(idx, rec)| {
            let m = reps.iter().map(|rep| f(rep.records[idx].residual.map_or(f64::NAN, |e| e.value))).sum::<f64>()
                / reps.len() as f64;
            (rec.iter, m)
        })
        .collect()
}

// ---------------------------------------------------------------- 1, 2

fn market_sweep() -> ExperimentOutput {
    run_spec(&ExperimentSpec::load(spec_path("mlmf_n_sweep.json")).expect("spec"))
}

fn criterion_1(out: &ExperimentOutput) -> Outcome {
    let vr = mean_final(out, "N=13", "vr-spp");
    let sg = mean_final(out, "N=13", "sg");
    let pass = vr <= 5e-3 && (5e-3..=5e-2).contains(&sg) && vr <= sg / 5.0;
    outcome(pass, format!("N=13: VR-SPP {vr:.2e} (<= 5e-3), SG {sg:.2e} (in [5e-3, 5e-2]), ratio {:.1} (>= 5)", sg / vr))
}

fn criterion_2(out: &ExperimentOutput) -> Outcome {
    let vals: Vec<(usize, f64)> = [13, 23, 33, 43].iter().map(|n| (*n, mean_final(out, &format!("N={n}"), "vr-spp"))).collect();
    let hi = vals.iter().map(|v| v.1).fold(f64::MIN, f64::max);
    let lo = vals.iter().map(|v| v.1).fold(f64::MAX, f64::min);
    let list: Vec<String> = vals.iter().map(|(n, v)| format!("N={n}: {v:.2e}")).collect();
    outcome(lo > 0.0 && hi / lo <= 3.0, format!("{}; max/min {:.2} (<= 3)", list.join(", "), hi / lo))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let spec = ExperimentSpec::load(spec_path("mlmf_constrained.json")).expect("spec");
    let out = run_spec(&spec);
    let vr = mean_final(&out, "base", "vr-spp");
    let sg = mean_final(&out, "base", "sg");
    let bounds = vr <= 5e-3 && (5e-3..=5e-2).contains(&sg) && vr <= sg / 5.0;

    // Monte-Carlo check of E[c_i(x^i, w)] <= 3 s.e. at every final iterate
    let n = 13;
    let checker = ConstrainedMlmfGame::new(MlmfParams::benchmark(n, &mut RandomStream::new(0)).with_benchmark_constraint())
        .expect("game");
    let mut worst = f64::MIN;
    let mut feasible = true;
    for (s, r) in out.runs.iter().filter(|r| r.solver == "vr-spp").enumerate() {
        let Ok(rep) = &r.outcome else {
            feasible = false;
            continue;
        };
        let x = rep.final_x().expect("final iterate");
        for i in 0..n {
            let mut stream = RandomStream::new(ROOT_SEED).derive(s as u64).derive(i as u64);
            let acc: Running = (0..10_000)
                .map(|_| checker.constraint_sample(i, &x[i..=i], &mut stream).expect("constrained")[0])
                .collect();
            let est = acc.estimate();
            worst = worst.max(est.value / est.stderr.max(1e-300));
            feasible &= est.value <= 3.0 * est.stderr;
        }
    }
    outcome(
        bounds && feasible,
        format!(
            "VR-SPP {vr:.2e}, SG {sg:.2e}, ratio {:.1}; max E[c_i]/s.e. over leaders and seeds {worst:.1} (<= 3)",
            sg / vr
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let spec: ExperimentSpec = serde_json::from_value(json!({
        "name": "sublinear-rate",
        "game": { "kind": "mlmf" },
        "solvers": { "kind": "vr-spp", "lambda": 0.1, "theta": 0.1, "schedule": { "kind": "polynomial", "a": 1.5 } },
        "seeds": (0..10).collect::<Vec<u64>>(),
        "budget": { "kind": "outer-iters", "n": 30 },
        "cadence": { "kind": "every" },
        "residual": { "kind": "yosida", "inner_steps": 100000, "samples_per_step": 20, "repeats": 5 }
    }))
    .expect("spec");
    let out = run_spec(&spec);
    let runs: Vec<&RunResult> = out.runs.iter().collect();
    let traj: Vec<(usize, f64)> =
        mean_trajectory(&runs, |r| r * r).into_iter().filter(|(k, _)| (5..=30).contains(k)).collect();
    let ks: Vec<f64> = traj.iter().map(|t| t.0 as f64).collect();
    let ys: Vec<f64> = traj.iter().map(|t| t.1).collect();
    let slope = log_log_slope(&ks, &ys);
    outcome(slope <= -0.8, format!("log-log slope of mean res^2 over k in [5, 30]: {slope:.2} (<= -0.8)"))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let spec: ExperimentSpec = serde_json::from_value(json!({
        "name": "linear-rate",
        "game": { "kind": "bilevel", "n_players": 13, "slopes": "coincident", "mu": 1.0 },
        "solvers": {
            "kind": "vr-spp", "lambda": 0.1, "theta": 0.01,
            "schedule": { "kind": "geometric", "rho": 0.5 }, "min_inner_steps": 1
        },
        "seeds": (0..10).collect::<Vec<u64>>(),
        "budget": { "kind": "outer-iters", "n": 13 },
        "cadence": { "kind": "every" },
        "residual": { "kind": "equilibrium-distance" }
    }))
    .expect("spec");
    let out = run_spec(&spec);
    let runs: Vec<&RunResult> = out.runs.iter().collect();
    let traj = mean_trajectory(&runs, |r| r * r);
    let ratios: Vec<f64> = (3..=12).map(|k| traj[k + 1].1 / traj[k].1).collect();
    let worst = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let ks: Vec<f64> = (3..=13).map(|k| k as f64).collect();
    let ln: Vec<f64> = (3..=13).map(|k| traj[k].1.ln()).collect();
    let fitted = ols_slope(&ks, &ln).exp();
    outcome(
        out.failures() == 0 && worst <= 0.95,
        format!("largest step ratio of E|x^k - x*|^2 for k in [3, 12]: {worst:.3} (<= 0.95); fitted {fitted:.3}"),
    )
}

// ---------------------------------------------------------------- 6

/// `f(v, w) = s/2 (v - m)^2 + w v` with `w ~ U(-1, 1)`.
struct Quadratic {
    s: f64,
    m: f64,
    layout: PlayerLayout,
    feasible: FeasibleSet,
}

impl Quadratic {
    fn new(s: f64, m: f64) -> Self {
        let layout = PlayerLayout::scalar(1).expect("layout");
        let feasible = FeasibleSet::uniform(layout.clone(), SetKind::WholeSpace).expect("set");
        Self { s, m, layout, feasible }
    }
}

impl GameOracle for Quadratic {
    fn layout(&self) -> &PlayerLayout {
        &self.layout
    }
    fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }
    fn operator_sample_into(&self, x: &[f64], s: &mut RandomStream, out: &mut [f64]) {
        out[0] = self.s * (x[0] - self.m) + s.uniform(-1.0, 1.0).expect("range");
    }
    fn objective_sample(&self, _i: usize, x: &[f64], s: &mut RandomStream) -> f64 {
        let w = s.uniform(-1.0, 1.0).expect("range");
        0.5 * self.s * (x[0] - self.m).powi(2) + w * x[0]
    }
}

fn criterion_6() -> Outcome {
    let (s, m, c, zeta) = (4.0, 1.0, 1.0, 0.05);
    // phi(v) = s/2 (v - m)^2 + c/2 v^2 + const: modulus and smoothness both s + c
    let mu = s + c;
    let q = contraction_factor(mu, mu, zeta);
    let game = Quadratic::new(s, m);
    let params = SmoothingParams {
        eta: 0.1,
        prox_weight: c,
        zeta,
        batch: BatchRule::Contraction { q },
        max_batch: 1_000_000,
        steps: StepsRule::Fixed { steps: 16 },
        estimator: ZoEstimator::Antithetic,
    };
    let v_star = s * m / (s + c);
    let seeds = 1000;
    let mut err = vec![0.0; 17];
    for seed in 0..seeds {
        zsol_trace(&game, &params, 0, &[0.0], 16, &RandomStream::new(ROOT_SEED).derive(seed), |t, v| {
            err[t] += (v[0] - v_star).powi(2) / seeds as f64;
        })
        .expect("zsol");
    }
    let ts: Vec<f64> = (3..=15).map(|t| t as f64).collect();
    let ln: Vec<f64> = (3..=15).map(|t| err[t].ln()).collect();
    let ratio = ols_slope(&ts, &ln).exp();
    outcome(ratio <= q + 0.05, format!("fitted ratio over t in [3, 15]: {ratio:.3} (<= q + 0.05 = {:.3})", q + 0.05))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let spec = ExperimentSpec::load(spec_path("bilevel_arspbr.json")).expect("spec");
    let out = run_spec(&spec);
    let plain = mean_final(&out, "base", "arspbr");
    let relaxed = mean_final(&out, "base", "arspbr-pow0.51");
    outcome(
        plain <= 5e-3 && relaxed <= plain,
        format!("gamma=1: {plain:.2e} (<= 5e-3); gamma=k^-0.51: {relaxed:.2e} (<= gamma=1)"),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let spec = ExperimentSpec::load(spec_path("bilevel_eta_sweep.json")).expect("spec");
    let out = run_spec(&spec);
    let solver = out.runs[0].solver.clone();
    let vals: Vec<(f64, f64)> =
        [0.2, 0.1, 0.01].iter().map(|eta| (*eta, mean_final(&out, &format!("eta={eta}"), &solver))).collect();
    let monotone = vals.windows(2).all(|w| w[1].1 <= w[0].1);
    let list: Vec<String> = vals.iter().map(|(e, v)| format!("eta={e}: {v:.2e}")).collect();
    outcome(
        monotone && vals[2].1 <= 1e-2,
        format!("mean |x_eta - x*|: {}; nonincreasing as eta shrinks: {monotone}", list.join(", ")),
    )
}

// ---------------------------------------------------------------- 9

fn cases(n: u32) -> Config {
    Config { failure_persistence: None, ..Config::with_cases(n) }
}

fn recursion_bound() -> Result<(), String> {
    let mut runner = TestRunner::new(cases(100));
    let strategy = (0.05f64..5.0, 0.1f64..10.0, 0.05f64..5.0, 0.0f64..10.0)
        .prop_filter("2 c theta > 1", |(c, _, th, _)| 2.0 * c * th > 1.0 + 1e-6);
    runner
        .run(&strategy, |(c, m, theta, a1)| {
            let j0 = (2.0 * c * theta).ceil().max(1.0) as usize;
            let b = theta * theta * std::f64::consts::PI.powi(2) / 12.0;
            let lead = m * m * theta * theta / (2.0 * (2.0 * c * theta - 1.0));
            let mut a = a1;
            for j in j0..=10_000 {
                let tight = lead.max(j0 as f64 * a1) / j as f64;
                let loose = (lead + j0 as f64 * (a1 + b * m * m)) / j as f64;
                prop_assert!(a <= tight * (1.0 + 1e-12) && tight <= loose, "j={j}: {a} vs {tight}, {loose}");
                let alpha = theta / j as f64;
                a = (1.0 - 2.0 * c * alpha) * a + alpha * alpha * m * m / 2.0;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn follower_lcp() -> Result<(), String> {
    let mut runner = TestRunner::new(cases(1000));
    let strategy = (
        proptest::collection::vec(0.0f64..100.0, 1..20),
        0.5f64..10.0,
        20.0f64..50.0,
        0.0f64..20.0,
        0.0f64..20.0,
    );
    runner
        .run(&strategy, |(costs, b, a, x1, x2)| {
            let params = MlmfParams {
                n_followers: costs.len(),
                b,
                a_lo: a,
                a_hi: a,
                leader_cost: vec![1.0],
                follower_cost: costs,
                constraint: None,
            };
            let g = MlmfGame::new(params).expect("game");
            let s1 = g.follower_equilibrium(x1, a).expect("lcp");
            let s2 = g.follower_equilibrium(x2, a).expect("lcp");
            prop_assert!(g.complementarity_residual(x1, a, &s1) <= 1e-10);
            prop_assert!(s1.d_total > -1.0 && s1.d_total <= 0.0);
            let (lo, hi) = if x1 <= x2 { (&s1, &s2) } else { (&s2, &s1) };
            prop_assert!(hi.total <= lo.total + 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn potential_identity() -> Result<(), String> {
    let mut runner = TestRunner::new(cases(1000));
    let strategy = (1usize..8, any::<u64>(), -5.0f64..5.0, 0usize..8);
    runner
        .run(&strategy, |(n, seed, dev, who)| {
            let mut s = RandomStream::new(seed);
            let g = BilevelGame::new(BilevelParams::benchmark(n, &mut s)).expect("game");
            let x: Vec<f64> = (0..n).map(|_| s.uniform(-5.0, 5.0).unwrap()).collect();
            let a: Vec<f64> = (0..n).map(|_| s.uniform(33.0, 37.0).unwrap()).collect();
            let i = who % n;
            let mut y = x.clone();
            y[i] = dev;
            let df = g.objective_at(i, &y, &a) - g.objective_at(i, &x, &a);
            let dp = g.potential_at(&y, &a) - g.potential_at(&x, &a);
            prop_assert!((df - dp).abs() <= 1e-12 * (1.0 + dp.abs()), "{df} vs {dp}");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn zo_unbiased() -> Result<f64, String> {
    let mut s = RandomStream::new(ROOT_SEED).derive(90);
    let g = BilevelGame::new(BilevelParams::benchmark(5, &mut s)).expect("game");
    let x: Vec<f64> = (0..5).map(|_| s.uniform(-1.0, 1.0).unwrap()).collect();
    let params = SmoothingParams::benchmark();
    let (i, v) = (2, [x[2] + 0.05]);
    // reference: central difference of a common-random-number Monte-Carlo
    // estimate of f_eta, plus the analytic proximal gradient
    let h = 1e-4;
    let mut fd = Running::default();
    let mut crn = RandomStream::new(ROOT_SEED).derive(91);
    for _ in 0..1_000_000 {
        let mut twin = crn.clone();
        let up = smoothed_value_sample(&g, &params, i, &[v[0] + h], &x, &mut crn);
        let dn = smoothed_value_sample(&g, &params, i, &[v[0] - h], &x, &mut twin);
        fd.push((up - dn) / (2.0 * h));
    }
    let reference = fd.mean() + params.prox_weight * (v[0] - x[i]);
    let batches = [10u64, 100, 1_000, 10_000];
    let reps = 100;
    let rms: Vec<f64> = batches
        .iter()
        .map(|b| {
            let sq: f64 = (0..reps)
                .map(|r| {
                    let mut st = RandomStream::new(ROOT_SEED).derive(92).derive(*b).derive(r);
                    let est = zo_gradient_batch(&g, &params, i, &v, &x, *b, &mut st).expect("zo");
                    (est.mean[0] - reference).powi(2)
                })
                .sum();
            (sq / reps as f64).sqrt()
        })
        .collect();
    let xs: Vec<f64> = batches.iter().map(|b| *b as f64).collect();
    Ok(log_log_slope(&xs, &rms))
}

fn sandwich() -> Result<(), String> {
    let mut s = RandomStream::new(ROOT_SEED).derive(93);
    let g = BilevelGame::new(BilevelParams::benchmark(13, &mut s)).expect("game");
    let params = SmoothingParams::benchmark();
    let eta = params.eta;
    for p in 0..50u64 {
        let x: Vec<f64> = (0..13).map(|_| s.uniform(-2.0, 2.0).unwrap()).collect();
        let i = (p % 13) as usize;
        let mut diff = Running::default();
        let mut beta = 0.0f64;
        let mut st = RandomStream::new(ROOT_SEED).derive(94).derive(p);
        for _ in 0..20_000 {
            let mut plain = st.clone();
            let u = plain.unit_ball(1).unwrap()[0];
            let scenario = plain.clone();
            let smooth = smoothed_value_sample(&g, &params, i, &[x[i]], &x, &mut st);
            let base = g.objective_sample(i, &x, &mut plain);
            diff.push(smooth - base);
            // per-scenario subgradient bound at both ends of [x_i, x_i + eta u]
            let d = 1e-6;
            let mut shifted = x.clone();
            for end in [0.0, u] {
                shifted[i] = x[i] + eta * end + d;
                let r = g.objective_sample(i, &shifted, &mut scenario.clone());
                shifted[i] = x[i] + eta * end - d;
                let l = g.objective_sample(i, &shifted, &mut scenario.clone());
                beta = beta.max(((r - l) / (2.0 * d)).abs());
            }
        }
        let e = diff.estimate();
        if e.value < -3.0 * e.stderr || e.value > eta * beta + 3.0 * e.stderr {
            return Err(format!("point {p}: f_eta - f = {:.3e} +- {:.1e}, eta*beta = {:.3e}", e.value, e.stderr, eta * beta));
        }
    }
    Ok(())
}

fn yosida_lipschitz() -> Result<(), String> {
    let mut s = RandomStream::new(ROOT_SEED).derive(95);
    let g = MlmfGame::new(MlmfParams::benchmark(5, &mut s)).expect("game");
    let lambda = 0.1;
    let cfg = ResidualConfig { lambda, theta: 0.1, inner_steps: 4000, samples_per_step: 1, repeats: 5 };
    for p in 0..50u64 {
        let x: Vec<f64> = (0..5).map(|_| s.uniform(0.0, 2.0).unwrap()).collect();
        let y: Vec<f64> = x.iter().map(|v| (v + s.uniform(-0.05, 0.05).unwrap()).max(0.0)).collect();
        let rs = RandomStream::new(ROOT_SEED).derive(96).derive(p);
        let rx = yosida_residual(&g, &x, &cfg, &rs.derive(0)).map_err(|e| e.to_string())?;
        let ry = yosida_residual(&g, &y, &cfg, &rs.derive(1)).map_err(|e| e.to_string())?;
        let se = (rx.stderr.powi(2) + ry.stderr.powi(2)).sqrt();
        if (rx.value - ry.value).abs() > dist(&x, &y) / lambda + 6.0 * se {
            return Err(format!("pair {p}: |{:.3e} - {:.3e}| vs {:.3e}", rx.value, ry.value, dist(&x, &y) / lambda));
        }
    }
    Ok(())
}

fn monotone_pairs<G: GameOracle>(g: &G, lo: f64, hi: f64, label: u64) -> Result<(), String> {
    let n = g.layout().total_dim();
    let mut s = RandomStream::new(ROOT_SEED).derive(97).derive(label);
    for p in 0..100u64 {
        let x: Vec<f64> = (0..n).map(|_| s.uniform(lo, hi).unwrap()).collect();
        let y: Vec<f64> = (0..n).map(|_| s.uniform(lo, hi).unwrap()).collect();
        let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let mut st = RandomStream::new(ROOT_SEED).derive(98).derive(label).derive(p);
        let mut acc = Running::default();
        let (mut tx, mut ty) = (vec![0.0; n], vec![0.0; n]);
        for _ in 0..10_000 {
            let mut twin = st.clone();
            g.operator_sample_into(&x, &mut st, &mut tx);
            g.operator_sample_into(&y, &mut twin, &mut ty);
            let d: Vec<f64> = tx.iter().zip(&ty).map(|(a, b)| a - b).collect();
            acc.push(dot(&d, &dxy));
        }
        let e = acc.estimate();
        if e.value < -3.0 * e.stderr {
            return Err(format!("pair {p}: {:.3e} < -3 x {:.1e}", e.value, e.stderr));
        }
    }
    Ok(())
}

fn determinism() -> Result<(), String> {
    let stream = RandomStream::new(ROOT_SEED).derive(99);
    let g = BilevelGame::new(BilevelParams::benchmark(5, &mut stream.derive(0))).expect("game");
    let x0 = vec![0.5; 5];
    let vr = VrSppConfig::new(0.1, 0.01, Schedule::GeometricBase { r: 1.5 }, 12);
    let sgc = sg::SgConfig { alpha0: 0.01, iters: 500 };
    let ar = ArspbrConfig { relaxation: Relaxation::Power { exponent: 0.51 }, player_probs: None, outer_iters: 200 };
    let params = SmoothingParams::benchmark();
    let mon = || Monitor::new(Cadence::Every).without_timing();
    let bits = |r: &hgame_core::RunReport| -> Vec<u64> { r.records.iter().flat_map(|rec| rec.x.iter().map(|v| v.to_bits())).collect() };
    for name in ["vr-spp", "sg", "arspbr"] {
        let run = || match name {
            "vr-spp" => vrspp::run(&g, &vr, &x0, &stream, mon()),
            "sg" => sg::run(&g, &sgc, &x0, &stream, mon()),
            _ => arspbr_run(&g, &params, &ar, &x0, &stream, mon()),
        };
        let (a, b) = (run().map_err(|e| e.to_string())?, run().map_err(|e| e.to_string())?);
        if bits(&a) != bits(&b) || a != b {
            return Err(format!("{name} is not bitwise reproducible"));
        }
    }
    // end to end through the harness, including the CSV bytes
    let spec = ExperimentSpec::load(spec_path("smoke.json")).map_err(|e| e.to_string())?;
    let opts = RunOptions { root_seed: 5, jobs: 0, deterministic: true };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = run_experiment(&spec, &opts).map_err(|e| e.to_string())?;
        hgame_bench::write_outputs(&out, d.path()).map_err(|e| e.to_string())?;
    }
    for f in ["vr-spp.csv", "sg.csv"] {
        let a = std::fs::read(dirs[0].path().join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(f)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{f} differs between invocations"));
        }
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, r: Result<String, String>| {
        match r {
            Ok(msg) => parts.push(format!("{name} ok{msg}")),
            Err(e) => {
                pass = false;
                parts.push(format!("{name} FAILED ({e})"));
            }
        }
    };
    check("recursion", recursion_bound().map(|_| String::new()));
    check("lcp", follower_lcp().map(|_| String::new()));
    check("potential", potential_identity().map(|_| String::new()));
    check(
        "zo-slope",
        zo_unbiased().and_then(|s| if s <= -0.4 { Ok(format!(" {s:.2}")) } else { Err(format!("slope {s:.2} > -0.4")) }),
    );
    check("sandwich", sandwich().map(|_| String::new()));
    check("lipschitz", yosida_lipschitz().map(|_| String::new()));
    let mut ms = RandomStream::new(ROOT_SEED).derive(100);
    let market = MlmfGame::new(MlmfParams::benchmark(5, &mut ms)).expect("game");
    let bilevel = BilevelGame::new(BilevelParams::benchmark(5, &mut ms)).expect("game");
    check("monotone-mlmf", monotone_pairs(&market, 0.0, 3.0, 0).map(|_| String::new()));
    check("monotone-bilevel", monotone_pairs(&bilevel, -2.0, 2.0, 1).map(|_| String::new()));
    check("determinism", determinism().map(|_| String::new()));
    outcome(pass, parts.join("; "))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |c: usize| only.as_ref().is_none_or(|o| o.contains(&c));
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut timed = |c: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        if wanted(c) {
            let t = Instant::now();
            let o = f();
            let secs = t.elapsed().as_secs_f64();
            println!("criterion {c} [{name}]: {} ({secs:.0}s) {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            results.push((c, name, o, secs));
        }
    };
    let mut sweep: Option<ExperimentOutput> = None;
    let mut sweep_once = || sweep.get_or_insert_with(market_sweep).clone();
    timed(1, "market VR-SPP vs SG", &mut || criterion_1(&sweep_once()));
    timed(2, "market player-count sweep", &mut || criterion_2(&sweep_once()));
    timed(3, "constrained market", &mut criterion_3);
    timed(4, "sublinear residual rate", &mut criterion_4);
    timed(5, "linear rate, strongly monotone", &mut criterion_5);
    timed(6, "ZSOL geometric decay", &mut criterion_6);
    timed(7, "ARSPBR relaxation", &mut criterion_7);
    timed(8, "smoothing-radius sweep", &mut criterion_8);
    timed(9, "property suites", &mut criterion_9);
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("\nacceptance: {} passed, {} failed", results.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
