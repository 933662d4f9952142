//! Deterministic, splittable random streams.
//!
//! Every stochastic draw in the crate (demand intercepts, constraint noise,
//! smoothing directions, player selection) goes through a [`RandomStream`].
//! A stream is keyed by a 64-bit root seed and a path of derivation labels;
//! the key seeds a ChaCha8 block generator, so identical paths reproduce
//! identical sequences on every platform.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn seed_bytes(key: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    let mut s = key;
    for chunk in out.chunks_exact_mut(8) {
        s = s.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(s).to_le_bytes());
    }
    out
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    key: u64,
    lineage: Arc<[u64]>,
}

impl RandomStream {
    /// Root stream for a 64-bit seed.
    pub fn new(seed: u64) -> Self {
        let key = mix64(seed ^ 0x6A09_E667_F3BC_C908);
        Self {
            rng: ChaCha8Rng::from_seed(seed_bytes(key)),
            key,
            lineage: Arc::from([seed]),
        }
    }

    /// Child stream identified by `label`. The child depends only on the
    /// parent's key and the label, never on how far the parent has advanced.
    pub fn derive(&self, label: u64) -> Self {
        let key = mix64(mix64(self.key).wrapping_add(mix64(label.wrapping_add(GOLDEN))) ^ GOLDEN);
        let mut lineage = self.lineage.to_vec();
        lineage.push(label);
        let lineage = Arc::from(lineage);
        Self {
            rng: ChaCha8Rng::from_seed(seed_bytes(key)),
            key,
            lineage,
        }
    }

    /// Root seed followed by the derivation labels.
    pub fn lineage(&self) -> &[u64] {
        &self.lineage
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[lo, hi)`; returns `lo` for a degenerate interval.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return param(format!("uniform bounds lo={lo} > hi={hi}"));
        }
        Ok(self.uniform_unchecked(lo, hi))
    }

    #[inline]
    pub(crate) fn uniform_unchecked(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        let v = lo + (hi - lo) * self.next_f64();
        // rounding can land exactly on hi for wide intervals
        if v >= hi {
            lo.max(hi - (hi - lo) * f64::EPSILON)
        } else {
            v
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform direction on the unit sphere in `dim` dimensions, realised as a
    /// normalised Gaussian vector.
    pub fn unit_sphere(&mut self, dim: usize) -> Result<Vec<f64>> {
        if dim == 0 {
            return param("unit_sphere needs dim >= 1");
        }
        let mut v = vec![0.0; dim];
        self.fill_unit_sphere(&mut v);
        Ok(v)
    }

    pub(crate) fn fill_unit_sphere(&mut self, v: &mut [f64]) {
        if v.len() == 1 {
            v[0] = if self.rng.next_u64() >> 63 == 0 { 1.0 } else { -1.0 };
            return;
        }
        loop {
            let mut norm2 = 0.0;
            for e in v.iter_mut() {
                *e = self.standard_normal();
                norm2 += *e * *e;
            }
            if norm2 > 1e-300 {
                let inv = 1.0 / norm2.sqrt();
                v.iter_mut().for_each(|e| *e *= inv);
                return;
            }
        }
    }

    /// Uniform point in the closed unit ball.
    pub fn unit_ball(&mut self, dim: usize) -> Result<Vec<f64>> {
        if dim == 0 {
            return param("unit_ball needs dim >= 1");
        }
        let mut v = vec![0.0; dim];
        self.fill_unit_ball(&mut v);
        Ok(v)
    }

    pub(crate) fn fill_unit_ball(&mut self, v: &mut [f64]) {
        self.fill_unit_sphere(v);
        let r = self.next_f64().powf(1.0 / v.len() as f64);
        v.iter_mut().for_each(|e| *e *= r);
    }

    /// Index drawn with the given probabilities (assumed to sum to one).
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
