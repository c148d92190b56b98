//! Prediction bands on PIRs and the minimal band containing a test sample.
//!
//! The bootstrap statistic pool holds, for every replication `b` and every
//! original sample `i`, the max standardized deviation
//! `max_t |x_i(t) − x̂ᵇ(t)| / σ̂ᵇ(t)` of the sample from the replicate mean,
//! standardized by the replicate's own std. That gives `B·N` statistics.

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::resampling::{replicate, BootstrapConfig, IndexSource, IndexStream, SeededIndices, StatEcdf};
use crate::signal::{pir_from_frf, Frf, FrfSet};
use crate::stats;

/// Redraws allowed when a resampled set has zero spread somewhere.
pub const MAX_REDRAWS: usize = 10;

/// `mean ± scale · std`.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub scale: f64,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub alpha: f64,
}

impl Band {
    pub fn new(mean: Vec<f64>, std: Vec<f64>, scale: f64, alpha: f64) -> Self {
        let upper = mean.iter().zip(&std).map(|(m, s)| m + scale * s).collect();
        let lower = mean.iter().zip(&std).map(|(m, s)| m - scale * s).collect();
        Self { mean, std, scale, upper, lower, alpha }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// True when `curve` stays within the band at every sample.
    pub fn contains(&self, curve: &[f64]) -> bool {
        curve.len() == self.len()
            && curve.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

/// One bootstrap replication, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub indices: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Max standardized deviation of each original sample, in sample order.
    pub statistics: Vec<f64>,
}

/// Prediction band together with the bootstrap that produced it.
#[derive(Debug, Clone)]
pub struct BandFit {
    pub band: Band,
    pub ecdf: StatEcdf,
    /// All `B·N` statistics, replication-major.
    pub statistics: Vec<f64>,
    pub replicates: Vec<Replicate>,
}

#[derive(Debug, Clone)]
pub struct MinimalBand {
    /// Band scaled to just reach the test PIR; `band.alpha` equals `alpha`.
    pub band: Band,
    pub alpha: f64,
    /// Max standardized deviation of the test PIR from the set mean.
    pub c_p: f64,
    /// Sample index where the test PIR touches the band.
    pub touch_index: usize,
    pub test_pir: Vec<f64>,
    pub ecdf: StatEcdf,
    pub statistics: Vec<f64>,
    pub replicates: Vec<Replicate>,
}

/// Band expected to contain a new draw from the population with probability
/// `alpha`.
pub fn prediction_band(set: &FrfSet, grid: &FrequencyGrid, alpha: f64, cfg: &BootstrapConfig) -> Result<Band> {
    let prepared = Population::new(set, grid, cfg)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let (statistics, _) = prepared.bootstrap(cfg, &SeededIndices::new(cfg.seed), false)?;
    let ecdf = StatEcdf::new(&statistics, cfg.bins, cfg.quantile)?;
    let scale = ecdf.c_at(alpha)?;
    Ok(Band::new(prepared.mean, prepared.std, scale, alpha))
}

/// [`prediction_band`] with an explicit index source, keeping every
/// intermediate.
pub fn prediction_band_with<S: IndexSource>(
    set: &FrfSet,
    grid: &FrequencyGrid,
    alpha: f64,
    cfg: &BootstrapConfig,
    source: &S,
) -> Result<BandFit> {
    let prepared = Population::new(set, grid, cfg)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let (statistics, replicates) = prepared.bootstrap(cfg, source, true)?;
    let ecdf = StatEcdf::new(&statistics, cfg.bins, cfg.quantile)?;
    let scale = ecdf.c_at(alpha)?;
    Ok(BandFit { band: Band::new(prepared.mean, prepared.std, scale, alpha), ecdf, statistics, replicates })
}

/// Tightest band of the prediction-band family that contains `test`, and the
/// confidence level the bootstrap assigns to it.
pub fn minimal_prediction_band(
    test: &Frf,
    set: &FrfSet,
    grid: &FrequencyGrid,
    cfg: &BootstrapConfig,
) -> Result<MinimalBand> {
    minimal_band_impl(test, set, grid, cfg, &SeededIndices::new(cfg.seed), false)
}

pub fn minimal_prediction_band_with<S: IndexSource>(
    test: &Frf,
    set: &FrfSet,
    grid: &FrequencyGrid,
    cfg: &BootstrapConfig,
    source: &S,
) -> Result<MinimalBand> {
    minimal_band_impl(test, set, grid, cfg, source, true)
}

fn minimal_band_impl<S: IndexSource>(
    test: &Frf,
    set: &FrfSet,
    grid: &FrequencyGrid,
    cfg: &BootstrapConfig,
    source: &S,
    record: bool,
) -> Result<MinimalBand> {
    let prepared = Population::new(set, grid, cfg)?;
    let test_pir = pir_from_frf(test, grid)?.values().to_vec();
    let (statistics, replicates) = prepared.bootstrap(cfg, source, record)?;
    let ecdf = StatEcdf::new(&statistics, cfg.bins, cfg.quantile)?;

    // The original mean and std standardize the test sample.
    let (touch_index, c_p) = test_pir
        .iter()
        .zip(&prepared.mean)
        .zip(&prepared.std)
        .map(|((x, m), s)| (x - m).abs() / s)
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    let alpha = ecdf.alpha_at(c_p);

    Ok(MinimalBand {
        band: Band::new(prepared.mean, prepared.std, c_p, alpha),
        alpha,
        c_p,
        touch_index,
        test_pir,
        ecdf,
        statistics,
        replicates,
    })
}

/// Original PIRs with their pointwise moments.
struct Population {
    rows: Vec<Vec<f64>>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Population {
    fn new(set: &FrfSet, grid: &FrequencyGrid, cfg: &BootstrapConfig) -> Result<Self> {
        cfg.validate()?;
        set.require(grid, 3)?;
        let rows = set.pir_rows(grid);
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let (mean, std) = stats::mean_std(&refs);
        if let Some(n) = std.iter().position(|&s| s == 0.0) {
            return Err(Error::DegenerateSpread(format!("population std is zero at sample {n}")));
        }
        Ok(Self { rows, mean, std })
    }

    fn bootstrap<S: IndexSource>(
        &self,
        cfg: &BootstrapConfig,
        source: &S,
        record: bool,
    ) -> Result<(Vec<f64>, Vec<Replicate>)> {
        let n = self.rows.len();
        let per_rep = replicate(cfg.replications, |b| {
            let mut stream = source.stream(&[b as u64]);
            for _ in 0..=MAX_REDRAWS {
                let indices = stream.draw(n);
                let picked: Vec<&[f64]> = indices.iter().map(|&i| self.rows[i].as_slice()).collect();
                let (mean, std) = stats::mean_std(&picked);
                if std.contains(&0.0) {
                    continue;
                }
                let inv: Vec<f64> = std.iter().map(|s| 1.0 / s).collect();
                let statistics: Vec<f64> =
                    self.rows.iter().map(|row| stats::max_standardized_deviation(row, &mean, &inv)).collect();
                return Ok(if record {
                    Replicate { indices, mean, std, statistics }
                } else {
                    Replicate { indices: Vec::new(), mean: Vec::new(), std: Vec::new(), statistics }
                });
            }
            Err(Error::DegenerateSpread(format!(
                "replication {b}: resampled std vanished in {} consecutive draws",
                MAX_REDRAWS + 1
            )))
        })?;

        let statistics = per_rep.iter().flat_map(|r| r.statistics.iter().copied()).collect();
        let replicates = if record { per_rep } else { Vec::new() };
        Ok((statistics, replicates))
    }
}
