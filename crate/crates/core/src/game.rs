//! The interface every solver consumes: a stochastic hierarchical game seen
//! through its feasible-set projection and sampled oracles.
//!
//! Normal-cone terms of the equilibrium inclusion are never materialised;
//! solvers realise them by projecting onto the feasible set.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng::RandomStream;
use crate::stats::{MeanEstimate, RunningVec};

/// Player count and per-player strategy dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl PlayerLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return param("player layout needs at least one player and all dims >= 1");
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in &dims {
            acc += d;
            offsets.push(acc);
        }
        Ok(Self { dims, offsets })
    }

    /// `n` players with scalar strategies.
    pub fn scalar(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn n_players(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.offsets[self.dims.len()]
    }

    /// Index range of player `i` inside the joint vector.
    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SetKind {
    WholeSpace,
    NonnegativeOrthant,
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl SetKind {
    fn project(&self, x: &mut [f64]) {
        match self {
            SetKind::WholeSpace => {}
            SetKind::NonnegativeOrthant => x.iter_mut().for_each(|v| *v = v.max(0.0)),
            SetKind::Box { lo, hi } => {
                for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
                    *v = v.clamp(*l, *h);
                }
            }
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            SetKind::WholeSpace => true,
            SetKind::NonnegativeOrthant => x.iter().all(|v| *v >= 0.0),
            SetKind::Box { lo, hi } => {
                x.iter().zip(lo).zip(hi).all(|((v, l), h)| *l <= *v && *v <= *h)
            }
        }
    }
}

/// Product of per-player feasible sets.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleSet {
    layout: PlayerLayout,
    kinds: Vec<SetKind>,
}

impl FeasibleSet {
    pub fn new(layout: PlayerLayout, kinds: Vec<SetKind>) -> Result<Self> {
        if kinds.len() != layout.n_players() {
            return param("one set kind per player required");
        }
        for (i, k) in kinds.iter().enumerate() {
            if let SetKind::Box { lo, hi } = k {
                if lo.len() != layout.dim(i) || hi.len() != layout.dim(i) {
                    return param(format!("box bounds of player {i} have wrong length"));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return param(format!("box of player {i} has lo > hi"));
                }
            }
        }
        Ok(Self { layout, kinds })
    }

    /// The same set kind for every player.
    pub fn uniform(layout: PlayerLayout, kind: SetKind) -> Result<Self> {
        let kinds = vec![kind; layout.n_players()];
        Self::new(layout, kinds)
    }

    pub fn layout(&self) -> &PlayerLayout {
        &self.layout
    }

    pub fn kind(&self, i: usize) -> &SetKind {
        &self.kinds[i]
    }

    /// Euclidean projection of a joint vector.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.layout.total_dim() {
            return param("projection input has wrong dimension");
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite { what: "projection input", iter: 0 });
        }
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        for (i, k) in self.kinds.iter().enumerate() {
            k.project(&mut x[self.layout.block(i)]);
        }
    }

    /// Projects one player's block, given as a standalone slice.
    pub fn project_player(&self, i: usize, xi: &mut [f64]) {
        self.kinds[i].project(xi);
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.kinds
            .iter()
            .enumerate()
            .all(|(i, k)| k.contains(&x[self.layout.block(i)]))
    }
}

/// One realisation `v(x, omega)` of the stacked player subgradient map.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSample(pub Vec<f64>);

/// Sampled first- and zeroth-order access to a stochastic hierarchical game.
///
/// Implementations are immutable; every random quantity is drawn from the
/// stream handed in, so cloning the stream before a call reproduces the call
/// bit for bit.
pub trait GameOracle: Send + Sync {
    fn layout(&self) -> &PlayerLayout;

    fn feasible(&self) -> &FeasibleSet;

    /// Writes one operator realisation at `x` into `out`.
    fn operator_sample_into(&self, x: &[f64], stream: &mut RandomStream, out: &mut [f64]);

    /// One realisation of player `i`'s objective at the joint point `x`.
    fn objective_sample(&self, i: usize, x: &[f64], stream: &mut RandomStream) -> f64;

    fn operator_sample(&self, x: &[f64], stream: &mut RandomStream) -> OperatorSample {
        let mut out = vec![0.0; self.layout().total_dim()];
        self.operator_sample_into(x, stream, &mut out);
        OperatorSample(out)
    }

    /// Realisation of player `i`'s expectation constraint `c_i(x_i, omega)`,
    /// when the game has one.
    fn constraint_sample(&self, _i: usize, _xi: &[f64], _stream: &mut RandomStream) -> Option<Vec<f64>> {
        None
    }

    /// Realisation of the constraint Jacobian of player `i`, row-major
    /// `m_i x n_i`, when the game has one.
    fn constraint_gradient_sample(
        &self,
        _i: usize,
        _xi: &[f64],
        _stream: &mut RandomStream,
    ) -> Option<Vec<f64>> {
        None
    }
}

/// Monte-Carlo estimate of the mean operator `T(x)` with standard errors.
pub fn estimate_mean_operator<G: GameOracle + ?Sized>(
    game: &G,
    x: &[f64],
    n_samples: usize,
    stream: &mut RandomStream,
) -> Result<MeanEstimate> {
    if n_samples == 0 {
        return param("estimate_mean_operator needs n_samples >= 1");
    }
    let dim = game.layout().total_dim();
    let mut acc = RunningVec::new(dim);
    let mut buf = vec![0.0; dim];
    for _ in 0..n_samples {
        game.operator_sample_into(x, stream, &mut buf);
        acc.push(&buf);
    }
    Ok(acc.finish())
}
