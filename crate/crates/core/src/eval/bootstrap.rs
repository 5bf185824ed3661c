use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, quantile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Median,
}

impl Statistic {
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Statistic::Mean => stats::mean(values),
            Statistic::Median => stats::median(values),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
        })
    }
}

/// Point estimate with a 95% percentile-bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: usize,
}

impl MetricSummary {
    /// Larger distance from the point estimate to either interval end.
    pub fn half_width(&self) -> f64 {
        (self.point - self.ci_low).max(self.ci_high - self.point)
    }
}

/// Percentile bootstrap of `statistic` over `values`.
///
/// Resample `b` draws from its own ChaCha stream (`seed`, stream `b`), so the
/// result does not depend on how resamples are spread across threads.
pub fn bootstrap_ci(
    metric: &str,
    values: &[f64],
    statistic: Statistic,
    n_resamples: usize,
    seed: u64,
) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::Empty("bootstrap needs at least one value"));
    }
    if n_resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    let n = values.len();
    let mut draws: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                for slot in buf.iter_mut() {
                    *slot = values[rng.random_range(0..n)];
                }
                statistic.apply(buf)
            },
        )
        .collect();
    draws.sort_by(f64::total_cmp);

    let point = statistic.apply(values);
    // Percentile intervals need not bracket a skewed point estimate; widen
    // to include it.
    let ci_low = quantile_sorted(&draws, 0.025).min(point);
    let ci_high = quantile_sorted(&draws, 0.975).max(point);
    Ok(MetricSummary {
        metric: metric.to_string(),
        point,
        ci_low,
        ci_high,
        n_resamples,
    })
}
