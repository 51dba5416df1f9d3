//! Order-stable reductions and sample summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn pairwise_sum_by(xs: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().map(|&x| f(x)).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let s = moment_report(xs)?;
        Ok(Self {
            mean: s.mean,
            stderr: s.stderr_mean,
            n: s.n,
        })
    }

    /// `|mean − target| ≤ k · stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Mean, unbiased variance and their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
    /// Normal-approximation standard error of the unbiased variance, from
    /// the fourth central moment.
    pub stderr_variance: f64,
    pub min: f64,
    pub max: f64,
}

pub fn moment_report(xs: &[f64]) -> Result<MomentSummary> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: n,
        });
    }
    let nf = n as f64;
    let mean = pairwise_sum(xs) / nf;
    let m2 = pairwise_sum_by(xs, |x| (x - mean) * (x - mean));
    let m4 = pairwise_sum_by(xs, |x| (x - mean).powi(4)) / nf;
    let variance = m2 / (nf - 1.0);
    let var_of_var = ((m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);
    let (min, max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    Ok(MomentSummary {
        n,
        mean,
        variance,
        stderr_mean: (variance / nf).sqrt(),
        stderr_variance: var_of_var.sqrt(),
        min,
        max,
    })
}
