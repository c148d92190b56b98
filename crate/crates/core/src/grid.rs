//! Non-uniform frequency grids and their time-domain sampling.
//!
//! The frequencies of a posturography FRF are sparse harmonics of a common
//! base frequency. The PIR period is the inverse of that base frequency and
//! the sampling rate defaults to ten times the highest frequency.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest common denominator tried when reconciling decimal frequencies.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

/// Relative tolerance for a scaled frequency to count as an integer.
pub const COMMENSURABILITY_TOLERANCE: f64 = 1e-9;

/// Upper bound on samples per period.
pub const MAX_SAMPLES: u64 = 10_000_000;

/// Default ratio between sample rate and highest frequency.
pub const DEFAULT_RATE_FACTOR: f64 = 10.0;

/// A validated set of commensurable frequencies plus the time grid the
/// PIRs are sampled on.
///
/// Each frequency is an integer harmonic of `base_frequency`. Sample times are
/// `t_n = n / sample_rate`, `n = 0 .. n_samples`, spanning one period.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    frequencies: Vec<f64>,
    harmonics: Vec<u64>,
    base_frequency: f64,
    period: f64,
    sample_rate: f64,
    n_samples: usize,
    // 2M rows of n_samples: cos then sin of each harmonic.
    basis: Vec<f64>,
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.frequencies == other.frequencies && self.n_samples == other.n_samples && self.harmonics == other.harmonics
    }
}

/// Builds a grid from frequencies in Hz.
///
/// `sample_rate` defaults to ten times the highest frequency. The rate is then
/// reconciled so that one period holds an integer number of samples.
pub fn derive_grid(frequencies: &[f64], sample_rate: Option<f64>) -> Result<FrequencyGrid> {
    FrequencyGrid::new(frequencies, sample_rate)
}

impl FrequencyGrid {
    pub fn new(frequencies: &[f64], sample_rate: Option<f64>) -> Result<Self> {
        validate_frequencies(frequencies)?;
        let max_frequency = *frequencies.last().unwrap();

        let (denominator, scaled) = common_denominator(frequencies)?;
        let divisor = scaled.iter().copied().fold(0, gcd);
        let harmonics: Vec<u64> = scaled.iter().map(|s| s / divisor).collect();

        let requested = sample_rate.unwrap_or(DEFAULT_RATE_FACTOR * max_frequency);
        if !requested.is_finite() || requested <= 0.0 {
            return Err(Error::InvalidConfig(format!("sample rate {requested} Hz is not positive")));
        }
        if requested <= 2.0 * max_frequency {
            return Err(Error::NyquistViolation { sample_rate: requested, max_frequency });
        }

        let base_frequency = divisor as f64 / denominator as f64;
        let period = denominator as f64 / divisor as f64;
        let n_samples = (period * requested).round() as u64;
        let max_harmonic = *harmonics.last().unwrap();
        // Rounding may pull the rate back under the Nyquist limit.
        if n_samples <= 2 * max_harmonic {
            return Err(Error::NyquistViolation { sample_rate: n_samples as f64 * base_frequency, max_frequency });
        }
        if n_samples > MAX_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "one period would hold {n_samples} samples (limit {MAX_SAMPLES}); lower the sample rate"
            )));
        }
        let sample_rate = n_samples as f64 * divisor as f64 / denominator as f64;
        let n_samples = n_samples as usize;
        let basis = build_basis(&harmonics, n_samples);

        Ok(Self { frequencies: frequencies.to_vec(), harmonics, base_frequency, period, sample_rate, n_samples, basis })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Integer multiples of the base frequency, one per grid frequency.
    pub fn harmonics(&self) -> &[u64] {
        &self.harmonics
    }

    pub fn base_frequency(&self) -> f64 {
        self.base_frequency
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn time_step(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Number of frequencies M.
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|n| n as f64 / self.sample_rate).collect()
    }

    /// `cos(2π φ_k t)` sampled on the time grid.
    pub fn cos_row(&self, k: usize) -> &[f64] {
        self.basis_row(2 * k)
    }

    /// `sin(2π φ_k t)` sampled on the time grid.
    pub fn sin_row(&self, k: usize) -> &[f64] {
        self.basis_row(2 * k + 1)
    }

    /// Row `c` of the interleaved basis `[cos_0, sin_0, cos_1, sin_1, ...]`,
    /// matching the coefficient layout `[Re H_0, Im H_0, Re H_1, ...]`.
    pub(crate) fn basis_row(&self, c: usize) -> &[f64] {
        &self.basis[c * self.n_samples..(c + 1) * self.n_samples]
    }

    /// Writes `Σ_c coeffs[c] · basis_c(t)` into `out`.
    pub(crate) fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), 2 * self.len());
        debug_assert_eq!(out.len(), self.n_samples);
        out.fill(0.0);
        for (c, &w) in coeffs.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(self.basis_row(c)) {
                *o += w * b;
            }
        }
    }
}

fn validate_frequencies(frequencies: &[f64]) -> Result<()> {
    if frequencies.is_empty() {
        return Err(Error::InvalidFrequencies("no frequencies given".into()));
    }
    for (i, &f) in frequencies.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::InvalidFrequencies(format!("frequency {i} ({f}) must be finite and positive")));
        }
        if i > 0 && f <= frequencies[i - 1] {
            return Err(Error::InvalidFrequencies(format!(
                "frequencies must be strictly increasing ({} then {f})",
                frequencies[i - 1]
            )));
        }
    }
    Ok(())
}

/// Smallest denominator `d` such that every `f * d` is an integer within the
/// relative tolerance, along with those integers.
fn common_denominator(frequencies: &[f64]) -> Result<(u64, Vec<u64>)> {
    let reconciles = |f: f64, d: u64| -> Option<u64> {
        let scaled = f * d as f64;
        let nearest = scaled.round();
        (nearest >= 1.0 && (scaled - nearest).abs() <= COMMENSURABILITY_TOLERANCE * scaled).then_some(nearest as u64)
    };

    for d in 1..=MAX_DENOMINATOR {
        if frequencies.iter().all(|&f| reconciles(f, d).is_some()) {
            let scaled = frequencies.iter().map(|&f| reconciles(f, d).unwrap()).collect();
            return Ok((d, scaled));
        }
    }

    // Report the first frequency that no denominator reconciles on its own, or
    // the last one if only the combination fails.
    let culprit = frequencies
        .iter()
        .copied()
        .find(|&f| !(1..=MAX_DENOMINATOR).any(|d| reconciles(f, d).is_some()))
        .unwrap_or(*frequencies.last().unwrap());
    Err(Error::NonCommensurableFrequencies { frequency: culprit, max_denominator: MAX_DENOMINATOR })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn build_basis(harmonics: &[u64], n_samples: usize) -> Vec<f64> {
    let ns = n_samples as u128;
    let mut basis = Vec::with_capacity(2 * harmonics.len() * n_samples);
    for &h in harmonics {
        // Reduce the phase index exactly so large n does not lose precision.
        let phase = |n: usize| 2.0 * PI * ((h as u128 * n as u128) % ns) as f64 / n_samples as f64;
        basis.extend((0..n_samples).map(|n| phase(n).cos()));
        basis.extend((0..n_samples).map(|n| phase(n).sin()));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    const STANCE_GRID: [f64; 11] = [0.05, 0.15, 0.3, 0.4, 0.55, 0.7, 0.9, 1.1, 1.35, 1.75, 2.2];

    #[test]
    fn posturography_grid() {
        let g = derive_grid(&STANCE_GRID, None).unwrap();
        assert_eq!(g.sample_rate(), 22.0);
        assert_eq!(g.base_frequency(), 0.05);
        assert_eq!(g.period(), 20.0);
        assert_eq!(g.n_samples(), 440);
        assert_eq!(g.harmonics(), &[1, 3, 6, 8, 11, 14, 18, 22, 27, 35, 44]);
    }

    #[test]
    fn single_frequency() {
        let g = derive_grid(&[1.0], None).unwrap();
        assert_eq!(g.base_frequency(), 1.0);
        assert_eq!(g.period(), 1.0);
        assert_eq!(g.sample_rate(), 10.0);
        assert_eq!(g.n_samples(), 10);
    }

    #[test]
    fn decimal_pair() {
        let g = derive_grid(&[0.3, 0.5], None).unwrap();
        assert!((g.base_frequency() - 0.1).abs() < 1e-15);
        assert!((g.period() - 10.0).abs() < 1e-12);
        assert_eq!(g.n_samples(), 50);
    }

    #[test]
    fn reconciled_rate_is_exact_multiple_of_base() {
        let g = derive_grid(&STANCE_GRID, Some(23.3)).unwrap();
        assert_eq!(g.n_samples(), 466);
        assert!((g.n_samples() as f64 * g.base_frequency() - g.sample_rate()).abs() < 1e-12);
    }

    #[test]
    fn nyquist_is_strict() {
        assert!(matches!(derive_grid(&[1.0, 2.0], Some(4.0)), Err(Error::NyquistViolation { .. })));
        assert!(derive_grid(&[1.0, 2.0], Some(4.5)).is_ok());
    }

    #[test]
    fn rejects_bad_frequency_lists() {
        assert!(matches!(derive_grid(&[], None), Err(Error::InvalidFrequencies(_))));
        assert!(matches!(derive_grid(&[0.0, 1.0], None), Err(Error::InvalidFrequencies(_))));
        assert!(matches!(derive_grid(&[1.0, 1.0], None), Err(Error::InvalidFrequencies(_))));
        assert!(matches!(derive_grid(&[2.0, 1.0], None), Err(Error::InvalidFrequencies(_))));
        assert!(matches!(derive_grid(&[1.0, f64::NAN], None), Err(Error::InvalidFrequencies(_))));
    }

    #[test]
    fn irrational_ratio_is_not_commensurable() {
        let err = derive_grid(&[0.1234567891234, 1.0], None).unwrap_err();
        assert!(matches!(err, Error::NonCommensurableFrequencies { .. }), "{err}");
    }

    #[test]
    fn basis_rows_are_sampled_sinusoids() {
        let g = derive_grid(&STANCE_GRID, None).unwrap();
        for (k, &f) in STANCE_GRID.iter().enumerate() {
            for (n, t) in g.times().into_iter().enumerate() {
                let arg = 2.0 * PI * f * t;
                assert!((g.cos_row(k)[n] - arg.cos()).abs() < 1e-12);
                assert!((g.sin_row(k)[n] - arg.sin()).abs() < 1e-12);
            }
        }
    }
}
