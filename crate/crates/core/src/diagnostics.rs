//! Single-chain sample diagnostics: autocorrelation, batch-means effective
//! sample size and posterior summaries.

use crate::error::{Error, Result};

/// Minimum chain length for [`ess`].
pub const ESS_MIN_LEN: usize = 100;

/// Probability levels reported by [`summarize`].
pub const SUMMARY_LEVELS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarChain {
    pub label: String,
    pub values: Vec<f64>,
}

impl ScalarChain {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        ScalarChain {
            label: label.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, need: usize) -> Result<()> {
        if self.len() < need {
            return Err(Error::TooShort {
                need,
                got: self.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteChain);
        }
        Ok(())
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sum_sq_dev(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m).powi(2)).sum()
}

/// Sample autocorrelations at lags `0..=max_lag`, normalized by the lag-0
/// autocovariance.
pub fn acf(chain: &ScalarChain, max_lag: usize) -> Result<Vec<f64>> {
    chain.check(2.max(max_lag + 1))?;
    let x = &chain.values;
    let m = mean(x);
    let dev: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if c0 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / c0
            }
        })
        .collect())
}

/// Non-overlapping batch-means estimate of the long-run variance
/// `sigma^2 = lim n Var(mean)`, batch size `floor(sqrt(n))`.
pub fn batch_means_variance(chain: &ScalarChain) -> Result<f64> {
    chain.check(ESS_MIN_LEN)?;
    let x = &chain.values;
    let b = (x.len() as f64).sqrt().floor() as usize;
    let a = x.len() / b;
    let used = &x[..a * b];
    let m = mean(used);
    let ss: f64 = used
        .chunks_exact(b)
        .map(|batch| (mean(batch) - m).powi(2))
        .sum();
    Ok(b as f64 * ss / (a - 1) as f64)
}

/// Monte Carlo standard error of the chain mean from batch means.
pub fn mcse(chain: &ScalarChain) -> Result<f64> {
    Ok((batch_means_variance(chain)? / chain.len() as f64).sqrt())
}

/// `ESS = n * s^2 / sigma^2_BM`, capped at `2n`.
pub fn ess(chain: &ScalarChain) -> Result<f64> {
    chain.check(ESS_MIN_LEN)?;
    let n = chain.len() as f64;
    let s2 = sum_sq_dev(&chain.values, mean(&chain.values)) / (n - 1.0);
    if s2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let lrv = batch_means_variance(chain)?;
    if lrv <= 0.0 {
        return Ok(2.0 * n);
    }
    Ok((n * s2 / lrv).min(2.0 * n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    /// Quantiles at [`SUMMARY_LEVELS`].
    pub quantiles: [f64; 5],
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        // convex combination never leaves [sorted[lo], sorted[hi]]
        (sorted[lo] + frac * (sorted[hi] - sorted[lo])).clamp(sorted[lo], sorted[hi])
    }
}

pub fn summarize(chain: &ScalarChain) -> Result<Summary> {
    chain.check(2)?;
    let x = &chain.values;
    let m = mean(x);
    let sd = (sum_sq_dev(x, m) / (x.len() - 1) as f64).sqrt();
    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);
    let mut quantiles = [0.0; 5];
    for (q, &p) in quantiles.iter_mut().zip(SUMMARY_LEVELS.iter()) {
        *q = quantile_sorted(&sorted, p);
    }
    Ok(Summary { mean: m, sd, quantiles })
}
