//! Batch-means statistics for correlated Monte Carlo output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::ComplexMatrix;
use crate::tracedyn::PhasePoint;

/// Mean and batch-means standard error of one scalar observable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarStats {
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
    pub n: usize,
}

/// Streaming batch-means accumulator. Observations are grouped into
/// fixed-length batches; the standard error of the mean comes from the
/// scatter of batch means, which absorbs within-chain autocorrelation as
/// long as batches are long compared to the correlation time.
#[derive(Debug, Clone)]
pub struct RunningBatch {
    batch_len: usize,
    cur_sum: f64,
    cur_n: usize,
    batch_means: Vec<f64>,
    total_sum: f64,
    total_sq: f64,
    total_n: usize,
}

impl RunningBatch {
    pub fn new(batch_len: usize) -> Self {
        Self {
            batch_len: batch_len.max(1),
            cur_sum: 0.0,
            cur_n: 0,
            batch_means: Vec::new(),
            total_sum: 0.0,
            total_sq: 0.0,
            total_n: 0,
        }
    }

    pub fn observe(&mut self, v: f64) {
        self.cur_sum += v;
        self.cur_n += 1;
        self.total_sum += v;
        self.total_sq += v * v;
        self.total_n += 1;
        if self.cur_n == self.batch_len {
            self.batch_means.push(self.cur_sum / self.batch_len as f64);
            self.cur_sum = 0.0;
            self.cur_n = 0;
        }
    }

    pub fn merge(&mut self, other: RunningBatch) {
        // partial batches are dropped from the SE estimate, never from
        // the mean
        self.batch_means.extend(other.batch_means);
        self.total_sum += other.total_sum;
        self.total_sq += other.total_sq;
        self.total_n += other.total_n;
    }

    pub fn n(&self) -> usize {
        self.total_n
    }

    pub fn mean(&self) -> f64 {
        if self.total_n == 0 {
            0.0
        } else {
            self.total_sum / self.total_n as f64
        }
    }

    pub fn stats(&self) -> ScalarStats {
        let n = self.total_n;
        let mean = self.mean();
        let m = self.batch_means.len();
        let se = if m >= 2 {
            let bm = self.batch_means.iter().sum::<f64>() / m as f64;
            let var_b = self
                .batch_means
                .iter()
                .map(|b| (b - bm) * (b - bm))
                .sum::<f64>()
                / (m - 1) as f64;
            (var_b / m as f64).sqrt()
        } else {
            0.0
        };
        let sample_var = if n >= 2 {
            (self.total_sq - n as f64 * mean * mean) / (n - 1) as f64
        } else {
            0.0
        };
        let ess = if se > 0.0 {
            (sample_var / (se * se)).min(n as f64)
        } else {
            n as f64
        };
        ScalarStats { mean, se, ess, n }
    }
}

/// Entrywise mean and standard error of a matrix-valued observable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixStats {
    pub mean: ComplexMatrix,
    /// Row-major SE of the real parts.
    pub se_re: Vec<f64>,
    /// Row-major SE of the imaginary parts.
    pub se_im: Vec<f64>,
    pub n: usize,
}

/// Streaming entrywise batch-means accumulator for matrix observables.
#[derive(Debug, Clone)]
pub struct MatrixBatch {
    dim: usize,
    re: Vec<RunningBatch>,
    im: Vec<RunningBatch>,
}

impl MatrixBatch {
    pub fn new(dim: usize, batch_len: usize) -> Self {
        Self {
            dim,
            re: vec![RunningBatch::new(batch_len); dim * dim],
            im: vec![RunningBatch::new(batch_len); dim * dim],
        }
    }

    pub fn observe(&mut self, m: &ComplexMatrix) {
        assert_eq!(m.dim(), self.dim);
        for (k, z) in m.entries().iter().enumerate() {
            self.re[k].observe(z.re);
            self.im[k].observe(z.im);
        }
    }

    pub fn merge(&mut self, other: MatrixBatch) {
        for (a, b) in self.re.iter_mut().zip(other.re) {
            a.merge(b);
        }
        for (a, b) in self.im.iter_mut().zip(other.im) {
            a.merge(b);
        }
    }

    pub fn n(&self) -> usize {
        self.re.first().map_or(0, RunningBatch::n)
    }

    pub fn stats(&self) -> MatrixStats {
        let entries: Vec<Complex64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| Complex64::new(r.mean(), i.mean()))
            .collect();
        MatrixStats {
            mean: ComplexMatrix::new(self.dim, entries).expect("finite means"),
            se_re: self.re.iter().map(|b| b.stats().se).collect(),
            se_im: self.im.iter().map(|b| b.stats().se).collect(),
            n: self.n(),
        }
    }
}

/// Named per-observable statistics of one sampling run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleStats {
    pub observables: Vec<(String, ScalarStats)>,
    pub acceptance_rate: f64,
}

fn default_batch_len(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Canonical average of a scalar observable over collected samples, with
/// batch-means standard error. Requires at least 100 samples.
pub fn canonical_average(
    samples: &[PhasePoint],
    observable: impl Fn(&PhasePoint) -> f64,
) -> CoreResult<ScalarStats> {
    if samples.is_empty() {
        return Err(CoreError::InvalidInput("empty sample set".into()));
    }
    if samples.len() < 100 {
        return Err(CoreError::TooFewSamples {
            needed: 100,
            got: samples.len(),
        });
    }
    let mut acc = RunningBatch::new(default_batch_len(samples.len()));
    for z in samples {
        acc.observe(observable(z));
    }
    Ok(acc.stats())
}

/// Canonical average of a matrix observable, entrywise.
pub fn canonical_average_matrix(
    samples: &[PhasePoint],
    observable: impl Fn(&PhasePoint) -> ComplexMatrix,
) -> CoreResult<MatrixStats> {
    if samples.is_empty() {
        return Err(CoreError::InvalidInput("empty sample set".into()));
    }
    if samples.len() < 100 {
        return Err(CoreError::TooFewSamples {
            needed: 100,
            got: samples.len(),
        });
    }
    let first = observable(&samples[0]);
    let mut acc = MatrixBatch::new(first.dim(), default_batch_len(samples.len()));
    acc.observe(&first);
    for z in &samples[1..] {
        acc.observe(&observable(z));
    }
    Ok(acc.stats())
}
