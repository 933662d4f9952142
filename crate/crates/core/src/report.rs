//! Run trajectories and the residual-monitoring hook shared by all solvers.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::Estimate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    pub x: Vec<f64>,
    /// Oracle samples consumed by the solver up to this iterate. Residual
    /// evaluation is not counted.
    pub samples_cum: u64,
    /// Solver wall time in milliseconds, residual evaluation excluded.
    pub wall_ms: f64,
    pub residual: Option<Estimate>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: Vec<IterateRecord>,
}

impl RunReport {
    pub fn last(&self) -> Option<&IterateRecord> {
        self.records.last()
    }

    pub fn final_x(&self) -> Option<&[f64]> {
        self.last().map(|r| r.x.as_slice())
    }

    /// Residual of the last record that carries one.
    pub fn final_residual(&self) -> Option<Estimate> {
        self.records.iter().rev().find_map(|r| r.residual)
    }

    pub fn total_samples(&self) -> u64 {
        self.last().map_or(0, |r| r.samples_cum)
    }
}

/// Which iterates get recorded (and, if a residual function is attached,
/// evaluated). The initial and final iterates are always recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Cadence {
    Every,
    Stride { every: usize },
    /// Roughly `per_decade` iterates per factor of ten in `k`.
    LogSpaced { per_decade: usize },
    FinalOnly,
}

impl Default for Cadence {
    fn default() -> Self {
        Cadence::Every
    }
}

impl Cadence {
    pub fn due(&self, k: usize, last: usize) -> bool {
        if k == 0 || k == last {
            return true;
        }
        match self {
            Cadence::Every => true,
            Cadence::Stride { every } => k % (*every).max(1) == 0,
            Cadence::LogSpaced { per_decade } => {
                let p = (*per_decade).max(1) as f64;
                let bucket = |j: usize| (p * (j as f64).log10()).floor();
                bucket(k) != bucket(k - 1) || k <= 10
            }
            Cadence::FinalOnly => false,
        }
    }
}

pub type ResidualFn<'a> = dyn Fn(usize, &[f64]) -> Result<Estimate> + Sync + 'a;

/// Records iterates on a cadence and optionally evaluates a residual at them.
pub struct Monitor<'a> {
    cadence: Cadence,
    residual: Option<&'a ResidualFn<'a>>,
    /// Zero every wall time so reports are reproducible byte for byte.
    timing: bool,
    report: RunReport,
    start: Instant,
    paused: Duration,
}

impl<'a> Monitor<'a> {
    pub fn new(cadence: Cadence) -> Self {
        Self {
            cadence,
            residual: None,
            timing: true,
            report: RunReport::default(),
            start: Instant::now(),
            paused: Duration::ZERO,
        }
    }

    pub fn with_residual(mut self, f: &'a ResidualFn<'a>) -> Self {
        self.residual = Some(f);
        self
    }

    pub fn without_timing(mut self) -> Self {
        self.timing = false;
        self
    }

    pub(crate) fn restart_clock(&mut self) {
        self.start = Instant::now();
        self.paused = Duration::ZERO;
    }

    pub(crate) fn due(&self, k: usize, last: usize) -> bool {
        self.cadence.due(k, last)
    }

    pub(crate) fn record(&mut self, k: usize, x: &[f64], samples_cum: u64) -> Result<()> {
        let wall_ms = if self.timing {
            (self.start.elapsed() - self.paused).as_secs_f64() * 1e3
        } else {
            0.0
        };
        let residual = match self.residual {
            Some(f) => {
                let t = Instant::now();
                let r = f(k, x)?;
                self.paused += t.elapsed();
                Some(r)
            }
            None => None,
        };
        self.report.records.push(IterateRecord { iter: k, x: x.to_vec(), samples_cum, wall_ms, residual });
        Ok(())
    }

    pub(crate) fn maybe_record(&mut self, k: usize, last: usize, x: &[f64], samples_cum: u64) -> Result<()> {
        if self.due(k, last) {
            self.record(k, x, samples_cum)?;
        }
        Ok(())
    }

    pub fn finish(self) -> RunReport {
        self.report
    }
}
