//! Multi-leader multi-follower stochastic Stackelberg-Nash-Cournot game.
//!
//! `N` leaders pick quantities `x_i >= 0`, then `M` followers play a Cournot
//! game on the residual market with inverse demand `p(u, w) = a(w) - b u`.
//! Costs are quadratic for both tiers: `C_i x^2 / 2` for leaders and
//! `c_j y^2 / 2` for followers.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::game::{FeasibleSet, GameOracle, PlayerLayout, SetKind};
use crate::rng::RandomStream;

/// Private expectation constraint `E[x_i - U_i + w_i] <= 0` with
/// `w_i ~ U(-h, h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationConstraint {
    pub cap: Vec<f64>,
    pub noise_half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlmfParams {
    pub n_followers: usize,
    /// Demand slope `b > 0`.
    pub b: f64,
    pub a_lo: f64,
    pub a_hi: f64,
    /// Quadratic leader cost coefficients `C_i`, one per leader.
    pub leader_cost: Vec<f64>,
    /// Quadratic follower cost coefficients `c_j`, one per follower.
    pub follower_cost: Vec<f64>,
    #[serde(default)]
    pub constraint: Option<ExpectationConstraint>,
}

impl MlmfParams {
    /// Benchmark instance: `M = 10` followers with `c_j = 50`, `b = 7`,
    /// `a ~ U(33, 37)` and leader costs `C_i ~ U(0, 100)` drawn from `stream`.
    pub fn benchmark(n_leaders: usize, stream: &mut RandomStream) -> Self {
        let leader_cost = (0..n_leaders).map(|_| stream.uniform_unchecked(0.0, 100.0)).collect();
        Self {
            n_followers: 10,
            b: 7.0,
            a_lo: 33.0,
            a_hi: 37.0,
            leader_cost,
            follower_cost: vec![50.0; 10],
            constraint: None,
        }
    }

    /// Adds the benchmark constraint `U_i = 5`, `w_i ~ U(-1, 1)`.
    pub fn with_benchmark_constraint(mut self) -> Self {
        self.constraint = Some(ExpectationConstraint {
            cap: vec![5.0; self.n_leaders()],
            noise_half_width: 1.0,
        });
        self
    }

    pub fn n_leaders(&self) -> usize {
        self.leader_cost.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.leader_cost.is_empty() || self.n_followers == 0 {
            return param("need at least one leader and one follower");
        }
        if self.follower_cost.len() != self.n_followers {
            return param("follower_cost length must equal n_followers");
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return param("demand slope b must be positive");
        }
        if !(self.a_lo < self.a_hi) && self.a_lo != self.a_hi {
            return param("demand intercept range must satisfy a_lo <= a_hi");
        }
        if self.leader_cost.iter().chain(&self.follower_cost).any(|c| !(*c >= 0.0)) {
            return param("cost coefficients must be nonnegative");
        }
        if let Some(c) = &self.constraint {
            if c.cap.len() != self.n_leaders() {
                return param("constraint cap needs one entry per leader");
            }
            if !(c.noise_half_width >= 0.0) {
                return param("constraint noise half-width must be nonnegative");
            }
        }
        Ok(())
    }
}

/// Lower-level Cournot equilibrium for a given aggregate leader output.
#[derive(Clone, Debug, PartialEq)]
pub struct FollowerSolution {
    pub y: Vec<f64>,
    /// Aggregate follower output `Y`.
    pub total: f64,
    /// `dY/dX` on the current active set, in `(-1, 0]`.
    pub d_total: f64,
    /// Market price `a - b (X + Y)`.
    pub price: f64,
}

/// Unconstrained MLMF game over `x in R_+^N`.
#[derive(Clone, Debug)]
pub struct MlmfGame {
    params: MlmfParams,
    layout: PlayerLayout,
    feasible: FeasibleSet,
    /// `sum_j b / (c_j + b)` over all followers.
    reaction_weight: f64,
}

impl MlmfGame {
    pub fn new(params: MlmfParams) -> Result<Self> {
        params.validate()?;
        let layout = PlayerLayout::scalar(params.n_leaders())?;
        let feasible = FeasibleSet::uniform(layout.clone(), SetKind::NonnegativeOrthant)?;
        let reaction_weight = params.follower_cost.iter().map(|c| params.b / (c + params.b)).sum();
        Ok(Self { params, layout, feasible, reaction_weight })
    }

    pub fn params(&self) -> &MlmfParams {
        &self.params
    }

    /// Solves the follower complementarity problem
    /// `0 <= y  _|_  c_j y_j - a + b (X + Y) + b y_j >= 0`.
    ///
    /// For active followers `y_j = P / (c_j + b)` with the common price `P`,
    /// so every follower shares the sign of `P` and the active set is either
    /// everyone (when `a >= b X`) or nobody. The closed active set is kept at
    /// the boundary `a = b X`.
    pub fn follower_equilibrium(&self, leader_total: f64, a: f64) -> Result<FollowerSolution> {
        if !leader_total.is_finite() || !a.is_finite() {
            return Err(Error::NonFinite { what: "follower input", iter: 0 });
        }
        let b = self.params.b;
        let mut active = vec![true; self.params.n_followers];
        loop {
            let weight: f64 = self
                .params
                .follower_cost
                .iter()
                .zip(&active)
                .filter(|(_, on)| **on)
                .map(|(c, _)| b / (c + b))
                .sum();
            let price = (a - b * leader_total) / (1.0 + weight);
            if price < 0.0 && active.iter().any(|on| *on) {
                // every active follower would go negative: drop them all
                active.iter_mut().for_each(|on| *on = false);
                continue;
            }
            let y: Vec<f64> = self
                .params
                .follower_cost
                .iter()
                .zip(&active)
                .map(|(c, on)| if *on { price / (c + b) } else { 0.0 })
                .collect();
            let total = y.iter().sum();
            let d_total = -weight / (1.0 + weight);
            return Ok(FollowerSolution { y, total, d_total, price });
        }
    }

    /// `(Y, dY/dX)` without materialising the follower vector.
    #[inline]
    fn aggregate_response(&self, leader_total: f64, a: f64) -> (f64, f64) {
        let b = self.params.b;
        let slack = a - b * leader_total;
        if slack >= 0.0 {
            let w = self.reaction_weight;
            (slack / (b * (1.0 + w)) * w, -w / (1.0 + w))
        } else {
            (0.0, 0.0)
        }
    }

    /// Largest violation of the follower complementarity conditions.
    pub fn complementarity_residual(&self, leader_total: f64, a: f64, sol: &FollowerSolution) -> f64 {
        let b = self.params.b;
        let agg = leader_total + sol.y.iter().sum::<f64>();
        sol.y
            .iter()
            .zip(&self.params.follower_cost)
            .map(|(y, c)| {
                let f = c * y - a + b * agg + b * y;
                y.min(f).abs()
            })
            .fold(0.0, f64::max)
    }

    #[inline]
    fn draw_intercept(&self, stream: &mut RandomStream) -> f64 {
        stream.uniform_unchecked(self.params.a_lo, self.params.a_hi)
    }

    /// Operator sample for a fixed intercept `a`.
    pub fn operator_at(&self, x: &[f64], a: f64, out: &mut [f64]) {
        let b = self.params.b;
        let total: f64 = x.iter().sum();
        let (y, dy) = self.aggregate_response(total, a);
        let price = a - b * (total + y);
        let slope = (1.0 + dy) * b;
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.params.leader_cost) {
            *o = -price + ci * xi + slope * xi;
        }
    }

    /// Leader `i`'s cost `C_i x_i^2 / 2 - p(X + Y) x_i` for a fixed intercept.
    pub fn objective_at(&self, i: usize, x: &[f64], a: f64) -> f64 {
        let total: f64 = x.iter().sum();
        let (y, _) = self.aggregate_response(total, a);
        let price = a - self.params.b * (total + y);
        0.5 * self.params.leader_cost[i] * x[i] * x[i] - price * x[i]
    }
}

impl GameOracle for MlmfGame {
    fn layout(&self) -> &PlayerLayout {
        &self.layout
    }

    fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    fn operator_sample_into(&self, x: &[f64], stream: &mut RandomStream, out: &mut [f64]) {
        let a = self.draw_intercept(stream);
        self.operator_at(x, a, out);
    }

    fn objective_sample(&self, i: usize, x: &[f64], stream: &mut RandomStream) -> f64 {
        let a = self.draw_intercept(stream);
        self.objective_at(i, x, a)
    }

    fn constraint_sample(&self, i: usize, xi: &[f64], stream: &mut RandomStream) -> Option<Vec<f64>> {
        let c = self.params.constraint.as_ref()?;
        let w = stream.uniform_unchecked(-c.noise_half_width, c.noise_half_width);
        Some(vec![xi[0] - c.cap[i] + w])
    }

    fn constraint_gradient_sample(&self, _i: usize, _xi: &[f64], _s: &mut RandomStream) -> Option<Vec<f64>> {
        self.params.constraint.as_ref().map(|_| vec![1.0])
    }
}

/// Primal-dual form of the expectation-constrained MLMF game.
///
/// The joint variable is `z = (x, p)` in `R_+^{2N}`; the operator is
/// `(T(x) + p, -c(x, w))`, so the first `N` scalar "players" are leaders and
/// the last `N` are their multipliers.
#[derive(Clone, Debug)]
pub struct ConstrainedMlmfGame {
    base: MlmfGame,
    constraint: ExpectationConstraint,
    layout: PlayerLayout,
    feasible: FeasibleSet,
}

impl ConstrainedMlmfGame {
    pub fn new(params: MlmfParams) -> Result<Self> {
        let constraint = match &params.constraint {
            Some(c) => c.clone(),
            None => return param("constrained MLMF game needs a constraint block"),
        };
        let base = MlmfGame::new(params)?;
        let layout = PlayerLayout::scalar(2 * base.params.n_leaders())?;
        let feasible = FeasibleSet::uniform(layout.clone(), SetKind::NonnegativeOrthant)?;
        Ok(Self { base, constraint, layout, feasible })
    }

    pub fn base(&self) -> &MlmfGame {
        &self.base
    }

    pub fn n_leaders(&self) -> usize {
        self.base.params.n_leaders()
    }

    /// Writes the operator for fixed noise `(a, w)` into `out`.
    pub fn operator_at(&self, z: &[f64], a: f64, noise: &[f64], out: &mut [f64]) {
        let n = self.n_leaders();
        let (x, p) = z.split_at(n);
        let (ox, op) = out.split_at_mut(n);
        self.base.operator_at(x, a, ox);
        for i in 0..n {
            // grad_x c_i = 1
            ox[i] += p[i];
            op[i] = -(x[i] - self.constraint.cap[i] + noise[i]);
        }
    }
}

impl GameOracle for ConstrainedMlmfGame {
    fn layout(&self) -> &PlayerLayout {
        &self.layout
    }

    fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    fn operator_sample_into(&self, z: &[f64], stream: &mut RandomStream, out: &mut [f64]) {
        let n = self.n_leaders();
        let a = self.base.draw_intercept(stream);
        let h = self.constraint.noise_half_width;
        let (x, p) = z.split_at(n);
        let (ox, op) = out.split_at_mut(n);
        self.base.operator_at(x, a, ox);
        for i in 0..n {
            let w = stream.uniform_unchecked(-h, h);
            ox[i] += p[i];
            op[i] = -(x[i] - self.constraint.cap[i] + w);
        }
    }

    /// Leaders see their Lagrangian `f_i + p_i c_i`; multiplier `i` sees
    /// `-p_i c_i`.
    fn objective_sample(&self, i: usize, z: &[f64], stream: &mut RandomStream) -> f64 {
        let n = self.n_leaders();
        let a = self.base.draw_intercept(stream);
        let h = self.constraint.noise_half_width;
        let noise: Vec<f64> = (0..n).map(|_| stream.uniform_unchecked(-h, h)).collect();
        let (x, p) = z.split_at(n);
        let leader = i % n;
        let c = x[leader] - self.constraint.cap[leader] + noise[leader];
        if i < n {
            self.base.objective_at(i, x, a) + p[i] * c
        } else {
            -p[leader] * c
        }
    }

    fn constraint_sample(&self, i: usize, xi: &[f64], stream: &mut RandomStream) -> Option<Vec<f64>> {
        self.base.constraint_sample(i, xi, stream)
    }

    fn constraint_gradient_sample(&self, i: usize, xi: &[f64], s: &mut RandomStream) -> Option<Vec<f64>> {
        self.base.constraint_gradient_sample(i, xi, s)
    }
}
