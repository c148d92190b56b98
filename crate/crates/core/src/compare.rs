//! Unpaired comparison of two FRF groups.
//!
//! The band is centered on the difference of group mean PIRs and scaled by a
//! constant `C_u` taken from a bootstrap of the max standardized deviation
//! between that difference and replicate differences. Each outer replication
//! standardizes with a pointwise std estimated by a nested bootstrap drawn
//! inside the replicate groups. Where the band excludes zero, the excess
//! (residuals) is projected back onto the grid frequencies to localize the
//! effect.
//!
//! Substream paths: `[0, j, g]` for the `j`-th draw of the band std, `[1, b, g]`
//! for outer replication `b`, `[2, b, b2, g]` for its nested draws, where `g`
//! is 0 for the first group and 1 for the second.

use crate::bands::{Band, MAX_REDRAWS};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::resampling::{replicate, BootstrapConfig, IndexSource, IndexStream, SeededIndices, StatEcdf};
use crate::signal::{project, Frf, FrfSet};
use crate::stats;

pub const SIGMA_STREAM: u64 = 0;
pub const OUTER_STREAM: u64 = 1;
pub const NESTED_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct ComparisonResult {
    /// `x̄₁(t) − x̄₂(t)` on the original data.
    pub diff_mean: Vec<f64>,
    /// Pointwise std of `Bs` resampled mean differences.
    pub sigma: Vec<f64>,
    /// `diff_mean ± C_u · sigma`.
    pub band: Band,
    pub reject_null: bool,
    pub residuals: Vec<f64>,
    pub residual_frf: Frf,
    pub ecdf: StatEcdf,
    /// One statistic per outer replication.
    pub statistics: Vec<f64>,
    /// Filled only by [`compare_unpaired_with`].
    pub replicates: Vec<ComparisonReplicate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReplicate {
    pub indices: [Vec<usize>; 2],
    /// Replicate mean difference `x̂ᵇ(t)`.
    pub mean_diff: Vec<f64>,
    /// Nested-bootstrap std `σ̂^{b_N}(t)`.
    pub nested_std: Vec<f64>,
    pub statistic: f64,
}

pub fn compare_unpaired(
    set1: &FrfSet,
    set2: &FrfSet,
    grid: &FrequencyGrid,
    alpha: f64,
    cfg: &BootstrapConfig,
) -> Result<ComparisonResult> {
    compare_impl(set1, set2, grid, alpha, cfg, &SeededIndices::new(cfg.seed), false)
}

/// [`compare_unpaired`] with an explicit index source, keeping every
/// replication's intermediates.
pub fn compare_unpaired_with<S: IndexSource>(
    set1: &FrfSet,
    set2: &FrfSet,
    grid: &FrequencyGrid,
    alpha: f64,
    cfg: &BootstrapConfig,
    source: &S,
) -> Result<ComparisonResult> {
    compare_impl(set1, set2, grid, alpha, cfg, source, true)
}

/// Part of the band lying entirely on one side of zero: the lower envelope
/// where it is positive, the upper where it is negative, zero elsewhere.
pub fn residuals(band: &Band) -> Vec<f64> {
    band.lower
        .iter()
        .zip(&band.upper)
        .map(|(&lo, &hi)| {
            if lo > 0.0 {
                lo
            } else if hi < 0.0 {
                hi
            } else {
                0.0
            }
        })
        .collect()
}

/// Projection of residuals onto the grid frequencies.
pub fn residual_frf(residuals: &[f64], grid: &FrequencyGrid) -> Result<Frf> {
    Frf::new(project(residuals, grid)?)
}

fn compare_impl<S: IndexSource>(
    set1: &FrfSet,
    set2: &FrfSet,
    grid: &FrequencyGrid,
    alpha: f64,
    cfg: &BootstrapConfig,
    source: &S,
    record: bool,
) -> Result<ComparisonResult> {
    cfg.validate()?;
    if set1.width() != set2.width() {
        return Err(Error::GridMismatch);
    }
    set1.require(grid, 3)?;
    set2.require(grid, 3)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }

    // Means are linear in the FRF, so resampling runs on the 2M coefficients
    // and only the std needs the time grid.
    let groups = [set1.coefficient_rows(), set2.coefficient_rows()];
    let sizes = [groups[0].len(), groups[1].len()];
    let mean_diff = |idx: [&[usize]; 2]| -> Vec<f64> {
        let m1 = coefficient_mean(&groups[0], idx[0]);
        let m2 = coefficient_mean(&groups[1], idx[1]);
        m1.iter().zip(&m2).map(|(a, b)| a - b).collect()
    };

    let diff_mean = {
        let pirs1 = set1.pir_rows(grid);
        let pirs2 = set2.pir_rows(grid);
        let m1 = stats::mean(&pirs1.iter().map(Vec::as_slice).collect::<Vec<_>>());
        let m2 = stats::mean(&pirs2.iter().map(Vec::as_slice).collect::<Vec<_>>());
        m1.iter().zip(&m2).map(|(a, b)| a - b).collect::<Vec<f64>>()
    };
    let identity: [Vec<usize>; 2] = [(0..sizes[0]).collect(), (0..sizes[1]).collect()];
    let diff_coeffs = mean_diff([&identity[0], &identity[1]]);

    let sigma_draws = replicate(cfg.nested_replications, |j| {
        let idx1 = source.stream(&[SIGMA_STREAM, j as u64, 0]).draw(sizes[0]);
        let idx2 = source.stream(&[SIGMA_STREAM, j as u64, 1]).draw(sizes[1]);
        Ok(mean_diff([&idx1, &idx2]))
    })?;
    let sigma = pointwise_std(&sigma_draws, grid);

    let per_rep = replicate(cfg.replications, |b| {
        let b = b as u64;
        let mut outer = [source.stream(&[OUTER_STREAM, b, 0]), source.stream(&[OUTER_STREAM, b, 1])];
        let mut nested: Vec<[S::Stream; 2]> = (0..cfg.nested_replications as u64)
            .map(|b2| [source.stream(&[NESTED_STREAM, b, b2, 0]), source.stream(&[NESTED_STREAM, b, b2, 1])])
            .collect();

        for _ in 0..=MAX_REDRAWS {
            let idx1 = outer[0].draw(sizes[0]);
            let idx2 = outer[1].draw(sizes[1]);
            let replicate_diff = mean_diff([&idx1, &idx2]);

            let nested_draws: Vec<Vec<f64>> = nested
                .iter_mut()
                .map(|[s1, s2]| {
                    // Nested indices address the replicate groups, not the originals.
                    let inner1: Vec<usize> = s1.draw(sizes[0]).into_iter().map(|i| idx1[i]).collect();
                    let inner2: Vec<usize> = s2.draw(sizes[1]).into_iter().map(|i| idx2[i]).collect();
                    mean_diff([&inner1, &inner2])
                })
                .collect();
            let nested_std = pointwise_std(&nested_draws, grid);
            if nested_std.contains(&0.0) {
                continue;
            }

            let offset: Vec<f64> = diff_coeffs.iter().zip(&replicate_diff).map(|(a, b)| a - b).collect();
            let mut deviation = vec![0.0; grid.n_samples()];
            grid.synthesize_into(&offset, &mut deviation);
            let statistic = deviation.iter().zip(&nested_std).map(|(d, s)| d.abs() / s).fold(0.0, f64::max);

            return Ok(if record {
                let mut mean_diff_t = vec![0.0; grid.n_samples()];
                grid.synthesize_into(&replicate_diff, &mut mean_diff_t);
                ComparisonReplicate { indices: [idx1, idx2], mean_diff: mean_diff_t, nested_std, statistic }
            } else {
                ComparisonReplicate {
                    indices: [Vec::new(), Vec::new()],
                    mean_diff: Vec::new(),
                    nested_std: Vec::new(),
                    statistic,
                }
            });
        }
        Err(Error::DegenerateSpread(format!(
            "outer replication {b}: nested std vanished in {} consecutive draws",
            MAX_REDRAWS + 1
        )))
    })?;

    let statistics: Vec<f64> = per_rep.iter().map(|r| r.statistic).collect();
    let ecdf = StatEcdf::new(&statistics, cfg.bins, cfg.quantile)?;
    let c_u = ecdf.c_at(alpha)?;
    let band = Band::new(diff_mean.clone(), sigma.clone(), c_u, alpha);
    let residuals = residuals(&band);
    let reject_null = residuals.iter().any(|&r| r != 0.0);
    let residual_frf = residual_frf(&residuals, grid)?;

    Ok(ComparisonResult {
        diff_mean,
        sigma,
        band,
        reject_null,
        residuals,
        residual_frf,
        ecdf,
        statistics,
        replicates: if record { per_rep } else { Vec::new() },
    })
}

fn coefficient_mean(rows: &[Vec<f64>], indices: &[usize]) -> Vec<f64> {
    let picked: Vec<&[f64]> = indices.iter().map(|&i| rows[i].as_slice()).collect();
    stats::mean(&picked)
}

/// Pointwise sample std over time of the PIRs of coefficient vectors.
fn pointwise_std(draws: &[Vec<f64>], grid: &FrequencyGrid) -> Vec<f64> {
    let refs: Vec<&[f64]> = draws.iter().map(Vec::as_slice).collect();
    let center = stats::mean(&refs);
    let mut var = vec![0.0; grid.n_samples()];
    let mut curve = vec![0.0; grid.n_samples()];
    let mut centered = vec![0.0; center.len()];
    for d in draws {
        for ((c, x), m) in centered.iter_mut().zip(d).zip(&center) {
            *c = x - m;
        }
        grid.synthesize_into(&centered, &mut curve);
        for (v, x) in var.iter_mut().zip(&curve) {
            *v += x * x;
        }
    }
    let denom = (draws.len() - 1) as f64;
    var.into_iter().map(|v| (v / denom).sqrt()).collect()
}
