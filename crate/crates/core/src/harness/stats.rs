//! Boxplot statistics with a winsorized ("smoothed outlier") mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tukey boxplot summary of one sample set.
///
/// Quartiles use linear interpolation between order statistics (`h = (n − 1) p`). Whiskers
/// sit at the most extreme samples inside `[q1 − 1.5·IQR, q3 + 1.5·IQR]`; samples beyond
/// them are outliers. `smoothed_mean` is the mean after clamping every sample to the
/// whisker range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
    pub smoothed_mean: f64,
}

impl SummaryStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Elementwise `max(x, 0)`.
pub fn clamp_negatives(samples: &[f64]) -> Vec<f64> {
    samples.iter().map(|&x| x.max(0.0)).collect()
}

/// Quantile of an ascending slice by linear interpolation.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats> {
    if samples.is_empty() {
        return Err(Error::Validation("cannot summarize an empty sample".into()));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("sample contains non-finite value {bad}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);

    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (low_fence, high_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);

    // The quartiles lie inside the sample range, so both searches succeed.
    let lower_whisker = *sorted.iter().find(|&&v| v >= low_fence).expect("q1 is a fence-inner value");
    let upper_whisker = *sorted.iter().rev().find(|&&v| v <= high_fence).expect("q3 is a fence-inner value");
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < lower_whisker || v > upper_whisker)
        .collect();
    let smoothed_mean =
        sorted.iter().map(|v| v.clamp(lower_whisker, upper_whisker)).sum::<f64>() / sorted.len() as f64;

    Ok(SummaryStats {
        n: sorted.len(),
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        lower_whisker,
        upper_whisker,
        outliers,
        smoothed_mean,
    })
}

/// Unbiased sample variance; zero for a single sample.
pub fn sample_variance(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}
