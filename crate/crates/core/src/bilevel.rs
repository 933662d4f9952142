//! Bilevel game with a quadratic lower level.
//!
//! Player `i` leads a single follower whose response is
//! `y_i = max(b_i x_i / Q_i, l_i x_i)`, and pays
//! `d_i x_i^2 / 2 + 3 x_i sum_j x_j + a_i(w) y_i (+ mu x_i^2 / 2)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::game::{FeasibleSet, GameOracle, PlayerLayout, SetKind};
use crate::rng::RandomStream;

const INTERACTION: f64 = 3.0;

fn whole_space() -> SetKind {
    SetKind::WholeSpace
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilevelParams {
    pub q: Vec<f64>,
    pub b: Vec<f64>,
    pub l: Vec<f64>,
    pub d: Vec<f64>,
    pub a_lo: f64,
    pub a_hi: f64,
    /// Extra strong-monotonicity shift; zero gives the plain game.
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "whole_space")]
    pub set: SetKind,
}

impl BilevelParams {
    /// Benchmark instance: `Q_i = 3`, `b_i ~ U(0,3)`, `l_i ~ U(0,1)`,
    /// `d_i ~ U(0,100)` and `a_i ~ U(33,37)`.
    pub fn benchmark(n: usize, stream: &mut RandomStream) -> Self {
        let mut b = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        for _ in 0..n {
            b.push(stream.uniform_unchecked(0.0, 3.0));
            l.push(stream.uniform_unchecked(0.0, 1.0));
            d.push(stream.uniform_unchecked(0.0, 100.0));
        }
        Self { q: vec![3.0; n], b, l, d, a_lo: 33.0, a_hi: 37.0, mu: 0.0, set: SetKind::WholeSpace }
    }

    /// Benchmark instance with `b_i = 3` and `l_i = 1`, so both lower-level
    /// branches coincide and the mean operator is affine.
    pub fn coincident(n: usize, stream: &mut RandomStream) -> Self {
        let d = (0..n).map(|_| stream.uniform_unchecked(0.0, 100.0)).collect();
        Self {
            q: vec![3.0; n],
            b: vec![3.0; n],
            l: vec![1.0; n],
            d,
            a_lo: 33.0,
            a_hi: 37.0,
            mu: 0.0,
            set: SetKind::WholeSpace,
        }
    }

    pub fn n_players(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.q.len();
        if n == 0 {
            return param("bilevel game needs at least one player");
        }
        if self.b.len() != n || self.l.len() != n || self.d.len() != n {
            return param("q, b, l and d must have one entry per player");
        }
        if self.q.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
            return param("Q_i must be positive");
        }
        if self.d.iter().any(|d| !(*d >= 0.0)) {
            return param("d_i must be nonnegative");
        }
        if self.b.iter().chain(&self.l).any(|v| !v.is_finite()) {
            return param("b_i and l_i must be finite");
        }
        if !(self.a_lo <= self.a_hi) {
            return param("intercept range must satisfy a_lo <= a_hi");
        }
        if !(self.mu >= 0.0) {
            return param("mu must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BilevelGame {
    params: BilevelParams,
    layout: PlayerLayout,
    feasible: FeasibleSet,
}

impl BilevelGame {
    pub fn new(params: BilevelParams) -> Result<Self> {
        params.validate()?;
        let layout = PlayerLayout::scalar(params.n_players())?;
        let feasible = FeasibleSet::uniform(layout.clone(), params.set.clone())?;
        Ok(Self { params, layout, feasible })
    }

    pub fn params(&self) -> &BilevelParams {
        &self.params
    }

    pub fn lower_level_solution(&self, i: usize, xi: f64) -> f64 {
        let p = &self.params;
        (p.b[i] * xi / p.q[i]).max(p.l[i] * xi)
    }

    /// Subgradient of the lower-level response; ties take `b_i / Q_i`.
    pub fn lower_level_slope(&self, i: usize, xi: f64) -> f64 {
        let p = &self.params;
        let upper = p.b[i] / p.q[i];
        if upper * xi >= p.l[i] * xi {
            upper
        } else {
            p.l[i]
        }
    }

    /// One intercept per player, always all `N`, so operator, objective and
    /// potential draws stay aligned under common random numbers.
    fn draw_intercepts(&self, stream: &mut RandomStream, out: &mut [f64]) {
        for a in out.iter_mut() {
            *a = stream.uniform_unchecked(self.params.a_lo, self.params.a_hi);
        }
    }

    pub fn operator_at(&self, x: &[f64], a: &[f64], out: &mut [f64]) {
        let p = &self.params;
        let total: f64 = x.iter().sum();
        for i in 0..x.len() {
            out[i] = (p.d[i] + p.mu) * x[i]
                + INTERACTION * total
                + INTERACTION * x[i]
                + a[i] * self.lower_level_slope(i, x[i]);
        }
    }

    pub fn objective_at(&self, i: usize, x: &[f64], a: &[f64]) -> f64 {
        let p = &self.params;
        let total: f64 = x.iter().sum();
        0.5 * (p.d[i] + p.mu) * x[i] * x[i]
            + INTERACTION * x[i] * total
            + a[i] * self.lower_level_solution(i, x[i])
    }

    pub fn potential_at(&self, x: &[f64], a: &[f64]) -> f64 {
        let p = &self.params;
        let total: f64 = x.iter().sum();
        let mut acc = 0.5 * INTERACTION * total * total;
        for i in 0..x.len() {
            acc += 0.5 * (p.d[i] + p.mu) * x[i] * x[i]
                + 0.5 * INTERACTION * x[i] * x[i]
                + a[i] * self.lower_level_solution(i, x[i]);
        }
        acc
    }

    pub fn potential_sample(&self, x: &[f64], stream: &mut RandomStream) -> f64 {
        let mut a = vec![0.0; x.len()];
        self.draw_intercepts(stream, &mut a);
        self.potential_at(x, &a)
    }

    /// Equilibrium of the coincident-slope game on the whole space, from the
    /// linear system `(d_i + mu + 3) x_i + 3 sum_j x_j = -E[a] s_i`.
    pub fn direct_equilibrium(&self) -> Result<Vec<f64>> {
        let p = &self.params;
        let n = p.n_players();
        for i in 0..n {
            let upper = p.b[i] / p.q[i];
            if (upper - p.l[i]).abs() > 1e-12 * upper.abs().max(1.0) {
                return Err(Error::Unsupported(format!(
                    "direct equilibrium needs b_i / Q_i = l_i (player {i})"
                )));
            }
        }
        if p.set != SetKind::WholeSpace {
            return Err(Error::Unsupported("direct equilibrium needs an unconstrained game".into()));
        }
        let a_bar = 0.5 * (p.a_lo + p.a_hi);
        let mut m = DMatrix::from_element(n, n, INTERACTION);
        for i in 0..n {
            m[(i, i)] += p.d[i] + p.mu + INTERACTION;
        }
        let rhs = DVector::from_iterator(n, (0..n).map(|i| -a_bar * p.l[i]));
        let sol = m
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Unsupported("singular equilibrium system".into()))?;
        Ok(sol.iter().copied().collect())
    }
}

impl GameOracle for BilevelGame {
    fn layout(&self) -> &PlayerLayout {
        &self.layout
    }

    fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    fn operator_sample_into(&self, x: &[f64], stream: &mut RandomStream, out: &mut [f64]) {
        // `out` doubles as the intercept buffer
        self.draw_intercepts(stream, out);
        let p = &self.params;
        let total: f64 = x.iter().sum();
        for i in 0..x.len() {
            let a = out[i];
            out[i] = (p.d[i] + p.mu) * x[i]
                + INTERACTION * total
                + INTERACTION * x[i]
                + a * self.lower_level_slope(i, x[i]);
        }
    }

    fn objective_sample(&self, i: usize, x: &[f64], stream: &mut RandomStream) -> f64 {
        // draw every intercept to keep the stream aligned, keep only a_i
        let mut a_i = 0.0;
        for j in 0..x.len() {
            let a = stream.uniform_unchecked(self.params.a_lo, self.params.a_hi);
            if j == i {
                a_i = a;
            }
        }
        let p = &self.params;
        let total: f64 = x.iter().sum();
        0.5 * (p.d[i] + p.mu) * x[i] * x[i]
            + INTERACTION * x[i] * total
            + a_i * self.lower_level_solution(i, x[i])
    }
}
