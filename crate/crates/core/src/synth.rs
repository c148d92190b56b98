//! Synthetic FRF populations for calibration experiments.

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::resampling::substream;
use crate::signal::{Frf, FrfSet};

/// Population model `H_i = gain · mean + ε_i`, where each real and imaginary
/// component of `ε_i` is an independent `N(0, noise_std²)` draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub mean_frf: Vec<Complex64>,
    pub noise_std: f64,
    pub n: usize,
    pub gain_factor: f64,
}

impl SyntheticSpec {
    pub fn new(mean_frf: Vec<Complex64>, noise_std: f64, n: usize, gain_factor: f64) -> Result<Self> {
        let spec = Self { mean_frf, noise_std, n, gain_factor };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean_frf.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = self.mean_frf.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::InvalidConfig(format!("noise std {} must be finite and non-negative", self.noise_std)));
        }
        if !(self.gain_factor.is_finite() && self.gain_factor > 0.0) {
            return Err(Error::InvalidConfig(format!("gain factor {} must be positive", self.gain_factor)));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("sample count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws `spec.n` FRFs. Sample `i` uses substream `(seed, [i])`.
///
/// # Panics
///
/// If `spec` does not validate.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> FrfSet {
    spec.validate().expect("invalid synthetic spec");
    let noise = Normal::new(0.0, spec.noise_std).unwrap();
    let samples = (0..spec.n)
        .map(|i| {
            let mut rng = substream(seed, &[i as u64]);
            let values = spec
                .mean_frf
                .iter()
                .map(|m| {
                    let re = noise.sample(&mut rng);
                    let im = noise.sample(&mut rng);
                    m * spec.gain_factor + Complex64::new(re, im)
                })
                .collect();
            Frf::new(values).unwrap()
        })
        .collect();
    FrfSet::new(samples).unwrap()
}

/// Second-order low-pass response `f0² / (f0² − f² + 2iζ f0 f)`, a smooth
/// stand-in for a sway FRF.
pub fn second_order_response(frequencies: &[f64], natural_frequency: f64, damping: f64) -> Vec<Complex64> {
    let f0 = natural_frequency;
    frequencies
        .iter()
        .map(|&f| {
            let den = Complex64::new(f0 * f0 - f * f, 2.0 * damping * f0 * f);
            Complex64::new(f0 * f0, 0.0) / den
        })
        .collect()
}
