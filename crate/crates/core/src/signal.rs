//! FRFs, pseudo-impulse responses, and the lossless conversion between them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::stats;

/// Complex frequency response, one value per grid frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct Frf {
    values: Vec<Complex64>,
}

impl Frf {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Interleaved `[Re H_0, Im H_0, Re H_1, ...]`.
    pub(crate) fn coefficients(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.re, v.im]).collect()
    }

    fn check_grid(&self, grid: &FrequencyGrid) -> Result<()> {
        if self.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: self.len() });
        }
        Ok(())
    }
}

impl TryFrom<Vec<Complex64>> for Frf {
    type Error = Error;

    fn try_from(values: Vec<Complex64>) -> Result<Self> {
        Frf::new(values)
    }
}

impl From<Frf> for Vec<Complex64> {
    fn from(frf: Frf) -> Self {
        frf.values
    }
}

/// A population of FRFs sharing one frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfSet {
    samples: Vec<Frf>,
}

impl FrfSet {
    pub fn new(samples: Vec<Frf>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::EmptyInput);
        };
        let m = first.len();
        if let Some(bad) = samples.iter().find(|s| s.len() != m) {
            return Err(Error::LengthMismatch { expected: m, found: bad.len() });
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Frf] {
        &self.samples
    }

    /// Number of samples N.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of frequencies M.
    pub fn width(&self) -> usize {
        self.samples[0].len()
    }

    pub fn mean(&self) -> Frf {
        let n = self.len() as f64;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.width()];
        for s in &self.samples {
            for (a, v) in acc.iter_mut().zip(s.values()) {
                *a += v;
            }
        }
        Frf { values: acc.into_iter().map(|a| a / n).collect() }
    }

    pub(crate) fn require(&self, grid: &FrequencyGrid, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::TooFewSamples { needed, found: self.len() });
        }
        if self.width() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: self.width() });
        }
        Ok(())
    }

    /// PIR of every sample, row by row.
    pub(crate) fn pir_rows(&self, grid: &FrequencyGrid) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| synthesize(s, grid)).collect()
    }

    pub(crate) fn coefficient_rows(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(Frf::coefficients).collect()
    }
}

/// Real pseudo-impulse response sampled over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Pir {
    values: Vec<f64>,
    time_step: f64,
}

impl Pir {
    pub fn new(values: Vec<f64>, time_step: f64) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values, time_step })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|n| n as f64 * self.time_step).collect()
    }
}

/// Pointwise mean and standard deviation of a PIR set.
#[derive(Debug, Clone, PartialEq)]
pub struct PirStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// `x(t_n) = Σ_k Re(H_k) cos(2π φ_k t_n) + Im(H_k) sin(2π φ_k t_n)`.
pub fn pir_from_frf(frf: &Frf, grid: &FrequencyGrid) -> Result<Pir> {
    frf.check_grid(grid)?;
    Ok(Pir { values: synthesize(frf, grid), time_step: grid.time_step() })
}

/// Inverse of [`pir_from_frf`]: projects the PIR onto each grid sinusoid with
/// the `2 / n_samples` normalization.
pub fn frf_from_pir(pir: &Pir, grid: &FrequencyGrid) -> Result<Frf> {
    Ok(Frf { values: project(pir.values(), grid)? })
}

pub(crate) fn project(values: &[f64], grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    if values.len() != grid.n_samples() {
        return Err(Error::LengthMismatch { expected: grid.n_samples(), found: values.len() });
    }
    let scale = 2.0 / grid.n_samples() as f64;
    let dot = |row: &[f64]| row.iter().zip(values).map(|(b, x)| b * x).sum::<f64>();
    Ok((0..grid.len()).map(|k| Complex64::new(scale * dot(grid.cos_row(k)), scale * dot(grid.sin_row(k)))).collect())
}

fn synthesize(frf: &Frf, grid: &FrequencyGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_samples()];
    grid.synthesize_into(&frf.coefficients(), &mut out);
    out
}

/// Pointwise mean and sample standard deviation (N−1) of the set's PIRs.
pub fn pir_stats(set: &FrfSet, grid: &FrequencyGrid) -> Result<PirStats> {
    set.require(grid, 2)?;
    let rows = set.pir_rows(grid);
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let (mean, std) = stats::mean_std(&refs);
    Ok(PirStats { mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::derive_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const GRID: [f64; 11] = [0.05, 0.15, 0.3, 0.4, 0.55, 0.7, 0.9, 1.1, 1.35, 1.75, 2.2];

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_rel_err(a: &Frf, b: &Frf) -> f64 {
        let scale = b.values().iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm() / scale).fold(0.0, f64::max)
    }

    #[test]
    fn zero_frf_gives_zero_pir() {
        let g = derive_grid(&GRID, None).unwrap();
        let pir = pir_from_frf(&Frf::zeros(11), &g).unwrap();
        assert!(pir.values().iter().all(|&v| v == 0.0));
        assert_eq!(frf_from_pir(&pir, &g).unwrap(), Frf::zeros(11));
    }

    #[test]
    fn single_cosine() {
        let g = derive_grid(&GRID, None).unwrap();
        let mut v = vec![c(0.0, 0.0); 11];
        v[0] = c(1.0, 0.0);
        let pir = pir_from_frf(&Frf::new(v).unwrap(), &g).unwrap();
        for (x, t) in pir.values().iter().zip(pir.times()) {
            assert!((x - (2.0 * PI * 0.05 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_of_sampled_cosine() {
        let g = derive_grid(&GRID, None).unwrap();
        let values: Vec<f64> = g.times().iter().map(|t| (2.0 * PI * 0.05 * t).cos()).collect();
        let frf = frf_from_pir(&Pir::new(values, g.time_step()).unwrap(), &g).unwrap();
        assert!((frf.values()[0] - c(1.0, 0.0)).norm() < 1e-9);
        for v in &frf.values()[1..] {
            assert!(v.norm() < 1e-9);
        }
    }

    #[test]
    fn length_mismatch() {
        let g = derive_grid(&GRID, None).unwrap();
        assert!(matches!(pir_from_frf(&Frf::zeros(3), &g), Err(Error::LengthMismatch { .. })));
        let short = Pir::new(vec![0.0; 10], 0.1).unwrap();
        assert!(matches!(frf_from_pir(&short, &g), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(Frf::new(vec![c(0.0, f64::NAN)]), Err(Error::NonFinite(0))));
        assert!(matches!(FrfSet::new(vec![]), Err(Error::EmptyInput)));
        let ragged = FrfSet::new(vec![Frf::zeros(2), Frf::zeros(3)]);
        assert!(matches!(ragged, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn stats_need_two_samples() {
        let g = derive_grid(&[1.0], None).unwrap();
        let set = FrfSet::new(vec![Frf::zeros(1)]).unwrap();
        assert!(matches!(pir_stats(&set, &g), Err(Error::TooFewSamples { needed: 2, found: 1 })));
    }

    #[test]
    fn identical_samples_have_zero_std() {
        let g = derive_grid(&GRID, None).unwrap();
        let frf = Frf::new((0..11).map(|k| c(0.3 * k as f64, -0.1 * k as f64)).collect()).unwrap();
        let set = FrfSet::new(vec![frf; 5]).unwrap();
        let s = pir_stats(&set, &g).unwrap();
        assert!(s.std.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn opposite_pair() {
        let g = derive_grid(&GRID, None).unwrap();
        let frf = Frf::new((0..11).map(|k| c(1.0 / (k + 1) as f64, 0.2)).collect()).unwrap();
        let neg = Frf::new(frf.values().iter().map(|v| -v).collect()).unwrap();
        let x = pir_from_frf(&frf, &g).unwrap();
        let s = pir_stats(&FrfSet::new(vec![frf, neg]).unwrap(), &g).unwrap();
        for ((m, sd), xv) in s.mean.iter().zip(&s.std).zip(x.values()) {
            assert!(m.abs() < 1e-15);
            assert!((sd - 2f64.sqrt() * xv.abs()).abs() < 1e-12);
        }
    }

    fn arb_frf(m: usize) -> impl Strategy<Value = Frf> {
        prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), m)
            .prop_map(|v| Frf::new(v.into_iter().map(|(re, im)| c(re, im)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn roundtrip_is_identity(frf in arb_frf(11), rate in 4.5f64..60.0) {
            let g = derive_grid(&GRID, Some(rate)).unwrap();
            let back = frf_from_pir(&pir_from_frf(&frf, &g).unwrap(), &g).unwrap();
            prop_assert!(max_rel_err(&back, &frf) <= 1e-9);
        }

        #[test]
        fn roundtrip_survives_doubling_rate(frf in arb_frf(11)) {
            let g = derive_grid(&GRID, Some(44.0)).unwrap();
            let back = frf_from_pir(&pir_from_frf(&frf, &g).unwrap(), &g).unwrap();
            prop_assert!(max_rel_err(&back, &frf) <= 1e-9);
        }

        #[test]
        fn synthesis_is_linear(h1 in arb_frf(11), h2 in arb_frf(11), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = derive_grid(&GRID, None).unwrap();
            let combo = Frf::new(h1.values().iter().zip(h2.values()).map(|(x, y)| x * a + y * b).collect()).unwrap();
            let lhs = pir_from_frf(&combo, &g).unwrap();
            let p1 = pir_from_frf(&h1, &g).unwrap();
            let p2 = pir_from_frf(&h2, &g).unwrap();
            let scale = 1.0 + lhs.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
            for ((l, x), y) in lhs.values().iter().zip(p1.values()).zip(p2.values()) {
                prop_assert!((l - (a * x + b * y)).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn mean_pir_is_pir_of_mean(samples in prop::collection::vec(arb_frf(11), 2..8)) {
            let g = derive_grid(&GRID, None).unwrap();
            let set = FrfSet::new(samples).unwrap();
            let stats = pir_stats(&set, &g).unwrap();
            let direct = pir_from_frf(&set.mean(), &g).unwrap();
            let scale = 1.0 + direct.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (a, b) in stats.mean.iter().zip(direct.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
            prop_assert!(stats.std.iter().all(|&s| s >= 0.0));
        }
    }
}
