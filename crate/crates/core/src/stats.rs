//! Monte Carlo summaries with normal-approximation confidence bounds.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::{normal_quantile, pairwise_sum};

/// Default confidence level of every statistical bound.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `√n_samples`.
    pub stderr: f64,
    pub n_samples: usize,
    pub confidence: f64,
}

impl MCEstimate {
    /// Summarize `samples`. Identical samples give `stderr = 0` and `mean` equal to the sample.
    pub fn from_samples(samples: &[f64], confidence: f64) -> Result<Self> {
        check_confidence(confidence)?;
        let n = samples.len();
        if n == 0 {
            return domain("no samples");
        }
        if samples.iter().all(|&x| x.to_bits() == samples[0].to_bits()) {
            return Ok(MCEstimate {
                mean: samples[0],
                stderr: 0.0,
                n_samples: n,
                confidence,
            });
        }
        let mean = pairwise_sum(samples) / n as f64;
        let stderr = if n > 1 {
            let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Ok(MCEstimate {
            mean,
            stderr,
            n_samples: n,
            confidence,
        })
    }

    /// An exact value reported as an estimate.
    pub fn exact(value: f64, n_samples: usize, confidence: f64) -> Self {
        MCEstimate {
            mean: value,
            stderr: 0.0,
            n_samples,
            confidence,
        }
    }

    /// One-sided normal quantile at the stored confidence.
    pub fn z(&self) -> f64 {
        normal_quantile(self.confidence)
    }

    /// One-sided lower confidence bound `mean − z·stderr`.
    pub fn lower(&self) -> f64 {
        self.lower_at(self.confidence)
    }

    /// One-sided upper confidence bound `mean + z·stderr`.
    pub fn upper(&self) -> f64 {
        self.upper_at(self.confidence)
    }

    pub fn lower_at(&self, confidence: f64) -> f64 {
        if self.stderr == 0.0 {
            return self.mean;
        }
        self.mean - normal_quantile(confidence) * self.stderr
    }

    pub fn upper_at(&self, confidence: f64) -> f64 {
        if self.stderr == 0.0 {
            return self.mean;
        }
        self.mean + normal_quantile(confidence) * self.stderr
    }

    /// The same estimate scaled by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        MCEstimate {
            mean: self.mean * c,
            stderr: self.stderr * c.abs(),
            ..*self
        }
    }
}

pub(crate) fn check_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return domain(format!("confidence {confidence} outside (0, 1)"));
    }
    Ok(())
}

/// Per-look confidence so that `looks` one-sided bounds hold jointly at `confidence`.
pub fn bonferroni(confidence: f64, looks: usize) -> f64 {
    1.0 - (1.0 - confidence) / looks.max(1) as f64
}
