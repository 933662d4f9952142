//! Small Monte-Carlo helpers: running moments and least-squares fits.

use serde::{Deserialize, Serialize};

/// A scalar Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Componentwise sample mean of vector draws with standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
}

impl MeanEstimate {
    pub fn norm(&self) -> f64 {
        l2_norm(&self.mean)
    }

    /// Standard error of a linear functional `w . mean`, ignoring cross-covariances.
    pub fn stderr_norm(&self) -> f64 {
        l2_norm(&self.stderr)
    }
}

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean(), stderr: self.stderr() }
    }
}

impl FromIterator<f64> for Running {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut r = Running::default();
        iter.into_iter().for_each(|x| r.push(x));
        r
    }
}

/// Componentwise Welford accumulator for vector samples.
#[derive(Clone, Debug)]
pub struct RunningVec {
    cols: Vec<Running>,
}

impl RunningVec {
    pub fn new(dim: usize) -> Self {
        Self { cols: vec![Running::default(); dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.cols.iter_mut().zip(x).for_each(|(c, v)| c.push(*v));
    }

    pub fn finish(&self) -> MeanEstimate {
        MeanEstimate {
            mean: self.cols.iter().map(Running::mean).collect(),
            stderr: self.cols.iter().map(Running::stderr).collect(),
            n: self.cols.first().map_or(0, Running::count),
        }
    }
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    ols_slope(&lx, &ly)
}
