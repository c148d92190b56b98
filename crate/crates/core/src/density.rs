//! Bootstrap estimate of the CDF and PDF of a test sample's distance from the
//! population mean.
//!
//! Each replication resamples the population, measures every member's distance
//! to the replicate mean, and ranks the test sample's distance among them. The
//! CDF statistic is that rank over N; the PDF statistic is an incremental ratio
//! over a window of `Ds = max(1, ⌊N/20⌋)` positions on either side.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::resampling::{replicate, BootstrapConfig, IndexSource, IndexStream, SeededIndices};
use crate::signal::{pir_from_frf, Frf, FrfSet};
use crate::stats;

/// Largest share of replications whose PDF statistic may be skipped.
pub const MAX_SKIPPED_FRACTION: f64 = 0.2;

type MetricFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// Distance between two PIRs.
#[derive(Clone, Default)]
pub enum DistanceMetric {
    /// `Σ_n (x_n − y_n)²`, with no time-step factor.
    #[default]
    IntegratedSquared,
    /// `max_n |x_n − y_n|`.
    MaxAbsolute,
    Custom(Arc<MetricFn>),
}

impl DistanceMetric {
    pub fn custom(f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        DistanceMetric::Custom(Arc::new(f))
    }

    /// Parses `squared` or `max`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "squared" => Ok(DistanceMetric::IntegratedSquared),
            "max" => Ok(DistanceMetric::MaxAbsolute),
            other => Err(Error::InvalidConfig(format!("unknown metric '{other}' (expected 'squared' or 'max')"))),
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            DistanceMetric::IntegratedSquared => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
            DistanceMetric::MaxAbsolute => x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            DistanceMetric::Custom(f) => f(x, y),
        }
    }
}

impl fmt::Debug for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceMetric::IntegratedSquared => f.write_str("IntegratedSquared"),
            DistanceMetric::MaxAbsolute => f.write_str("MaxAbsolute"),
            DistanceMetric::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Numerator of the PDF incremental ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumeratorMode {
    /// `Ds / (N·Δx)`: a window spanning `2·Ds` positions but a numerator of `Ds`.
    #[default]
    CodeCompatible,
    /// `(i2 − i1) / (N·Δx)`: numerator equal to the actual index span.
    IndexSpan,
}

#[derive(Debug, Clone, Default)]
pub struct DensityOptions {
    pub metric: DistanceMetric,
    pub numerator: NumeratorMode,
}

/// Per-replication intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityReplicate {
    pub indices: Vec<usize>,
    /// Ascending member distances to the replicate mean.
    pub sorted_distances: Vec<f64>,
    pub test_distance: f64,
    /// 1-based position of the first member distance beyond the test's,
    /// or N when there is none.
    pub rank: usize,
    /// 1-based window bounds into `sorted_distances`.
    pub window: (usize, usize),
    pub cdf: f64,
    /// `None` when the window has zero spread.
    pub pdf: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub cdf_mean: f64,
    pub cdf_std: f64,
    pub pdf_mean: f64,
    pub pdf_std: f64,
    /// Half-width `Ds` of the PDF window.
    pub window: usize,
    pub numerator_mode: NumeratorMode,
    /// Replications whose PDF statistic was skipped.
    pub skipped: usize,
    /// Filled only by [`estimate_density_with`].
    pub replicates: Vec<DensityReplicate>,
}

pub fn estimate_density(
    test: &Frf,
    set: &FrfSet,
    grid: &FrequencyGrid,
    cfg: &BootstrapConfig,
    metric: DistanceMetric,
) -> Result<DensityEstimate> {
    let options = DensityOptions { metric, numerator: NumeratorMode::CodeCompatible };
    let mut est = estimate_density_with(test, set, grid, cfg, &options, &SeededIndices::new(cfg.seed))?;
    est.replicates.clear();
    Ok(est)
}

pub fn estimate_density_with<S: IndexSource>(
    test: &Frf,
    set: &FrfSet,
    grid: &FrequencyGrid,
    cfg: &BootstrapConfig,
    options: &DensityOptions,
    source: &S,
) -> Result<DensityEstimate> {
    cfg.validate()?;
    set.require(grid, 3)?;
    let test_pir = pir_from_frf(test, grid)?;
    let test_pir = test_pir.values();
    let rows = set.pir_rows(grid);
    let n = rows.len();
    let ds = (n / 20).max(1);

    let replicates = replicate(cfg.replications, |b| {
        let indices = source.stream(&[b as u64]).draw(n);
        let picked: Vec<&[f64]> = indices.iter().map(|&i| rows[i].as_slice()).collect();
        let center = stats::mean(&picked);
        let mut sorted_distances: Vec<f64> = picked.iter().map(|row| options.metric.distance(row, &center)).collect();
        sorted_distances.sort_by(f64::total_cmp);
        let test_distance = options.metric.distance(test_pir, &center);

        let rank = (sorted_distances.partition_point(|&d| d <= test_distance) + 1).min(n);
        let window = pdf_window(rank, ds, n);
        let spread = sorted_distances[window.1 - 1] - sorted_distances[window.0 - 1];
        let numerator = match options.numerator {
            NumeratorMode::CodeCompatible => ds,
            NumeratorMode::IndexSpan => window.1 - window.0,
        } as f64;
        let pdf = (spread > 0.0).then(|| numerator / (n as f64 * spread));

        Ok(DensityReplicate {
            indices,
            sorted_distances,
            test_distance,
            rank,
            window,
            cdf: rank as f64 / n as f64,
            pdf,
        })
    })?;

    let cdfs: Vec<f64> = replicates.iter().map(|r| r.cdf).collect();
    let pdfs: Vec<f64> = replicates.iter().filter_map(|r| r.pdf).collect();
    let skipped = replicates.len() - pdfs.len();
    if skipped as f64 > MAX_SKIPPED_FRACTION * replicates.len() as f64 || pdfs.is_empty() {
        return Err(Error::ZeroSpread { skipped, total: replicates.len() });
    }
    let (cdf_mean, cdf_std) = stats::scalar_mean_std(&cdfs);
    let (pdf_mean, pdf_std) = stats::scalar_mean_std(&pdfs);

    Ok(DensityEstimate {
        cdf_mean,
        cdf_std,
        pdf_mean,
        pdf_std,
        window: ds,
        numerator_mode: options.numerator,
        skipped,
        replicates,
    })
}

/// 1-based window `(rank − ds, rank + ds)`. Near either end it is clamped to
/// `[1, n]` and spans `ds` positions.
fn pdf_window(rank: usize, ds: usize, n: usize) -> (usize, usize) {
    let (mut lo, mut hi) = (rank as isize - ds as isize, rank + ds);
    if lo < 1 {
        lo = 1;
        hi = 1 + ds;
    }
    if hi > n {
        hi = n;
        lo = n as isize - ds as isize;
    }
    (lo as usize, hi)
}
