//! Bootstrap index generation and the cumulative-histogram machinery that
//! converts between scaling constants and confidence levels.
//!
//! Every replication draws from its own substream, keyed by the run seed and
//! a path such as `[b]` or `[b, b2, group]`. Results are therefore identical
//! whatever the number of threads. Tests and oracles can substitute
//! [`FixedIndices`] to inject exact resample vectors.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const DEFAULT_NESTED_REPLICATIONS: usize = 50;
pub const DEFAULT_BINS: usize = 1000;

/// How confidence levels and scaling constants are read off the bootstrap
/// statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMode {
    /// Equal-width cumulative histogram over `[min, max]`.
    #[default]
    Histogram,
    /// Exact order statistics, for convergence studies.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Outer replication count B.
    pub replications: usize,
    /// Nested replication count Bs, used by the unpaired comparison only.
    pub nested_replications: usize,
    pub seed: u64,
    /// Histogram bins of the statistic ECDF.
    pub bins: usize,
    pub quantile: QuantileMode,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            nested_replications: DEFAULT_NESTED_REPLICATIONS,
            seed: 0,
            bins: DEFAULT_BINS,
            quantile: QuantileMode::Histogram,
        }
    }
}

impl BootstrapConfig {
    pub fn new(replications: usize, seed: u64) -> Self {
        Self { replications, seed, ..Self::default() }
    }

    pub fn with_nested(mut self, nested_replications: usize) -> Self {
        self.nested_replications = nested_replications;
        self
    }

    pub fn with_bins(mut self, bins: usize) -> Self {
        self.bins = bins;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InvalidConfig("B must be at least 1".into()));
        }
        if self.nested_replications < 2 {
            return Err(Error::InvalidConfig("Bs must be at least 2".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidConfig("bins must be at least 2".into()));
        }
        Ok(())
    }
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn resample_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// A sequence of resample draws belonging to one substream.
pub trait IndexStream {
    /// Next resample of `0..n`.
    fn draw(&mut self, n: usize) -> Vec<usize>;
}

/// Factory of independent index streams keyed by a replication path.
pub trait IndexSource: Sync {
    type Stream: IndexStream;

    fn stream(&self, path: &[u64]) -> Self::Stream;
}

/// Pseudo-random streams derived from a single seed.
#[derive(Debug, Clone, Copy)]
pub struct SeededIndices {
    seed: u64,
}

impl SeededIndices {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

pub struct SeededStream(ChaCha8Rng);

impl IndexStream for SeededStream {
    fn draw(&mut self, n: usize) -> Vec<usize> {
        resample_indices(n, &mut self.0)
    }
}

impl IndexSource for SeededIndices {
    type Stream = SeededStream;

    fn stream(&self, path: &[u64]) -> SeededStream {
        SeededStream(substream(self.seed, path))
    }
}

fn splitmix64(z: u64) -> u64 {
    let z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 generator for `(seed, path)`.
///
/// The seed occupies the first key word verbatim; the remaining words are a
/// splitmix64 hash of the path, so distinct seeds never share a stream.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed ^ (path.len() as u64).rotate_left(32));
    for &p in path {
        h = splitmix64(h ^ splitmix64(p));
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    for chunk in key[8..].chunks_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Injected resample vectors, replayed per path in insertion order.
///
/// # Panics
///
/// Streams panic when a path has no (or no more) draws, or when a draw's
/// length differs from the requested sample count.
#[derive(Debug, Clone, Default)]
pub struct FixedIndices {
    draws: HashMap<Vec<u64>, Vec<Vec<usize>>>,
}

impl FixedIndices {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, path: &[u64], draw: Vec<usize>) -> Self {
        self.push(path, draw);
        self
    }

    pub fn push(&mut self, path: &[u64], draw: Vec<usize>) {
        self.draws.entry(path.to_vec()).or_default().push(draw);
    }
}

pub struct FixedStream {
    path: Vec<u64>,
    queue: VecDeque<Vec<usize>>,
}

impl IndexStream for FixedStream {
    fn draw(&mut self, n: usize) -> Vec<usize> {
        let draw = self.queue.pop_front().unwrap_or_else(|| panic!("no injected draw left for stream {:?}", self.path));
        assert_eq!(draw.len(), n, "injected draw for {:?} has wrong length", self.path);
        assert!(draw.iter().all(|&i| i < n), "injected index out of range for {:?}", self.path);
        draw
    }
}

impl IndexSource for FixedIndices {
    type Stream = FixedStream;

    fn stream(&self, path: &[u64]) -> FixedStream {
        FixedStream { path: path.to_vec(), queue: self.draws.get(path).cloned().unwrap_or_default().into() }
    }
}

/// Runs `count` replications in parallel, keeping replication order.
pub(crate) fn replicate<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Cumulative distribution of bootstrap statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StatEcdf {
    sorted: Vec<f64>,
    edges: Vec<f64>,
    cdf: Vec<f64>,
    mode: QuantileMode,
}

/// Histogram ECDF of `stats` with `bins` equal-width bins over `[min, max]`.
pub fn ecdf(stats: &[f64], bins: usize) -> Result<StatEcdf> {
    StatEcdf::new(stats, bins, QuantileMode::Histogram)
}

/// Confidence level at scaling constant `c`; see [`StatEcdf::alpha_at`].
pub fn alpha_at(ecdf: &StatEcdf, c: f64) -> f64 {
    ecdf.alpha_at(c)
}

/// Scaling constant for confidence `alpha`; see [`StatEcdf::c_at`].
pub fn c_at(ecdf: &StatEcdf, alpha: f64) -> Result<f64> {
    ecdf.c_at(alpha)
}

impl StatEcdf {
    pub fn new(stats: &[f64], bins: usize, mode: QuantileMode) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::EmptyInput);
        }
        if bins < 1 {
            return Err(Error::InvalidConfig("bins must be positive".into()));
        }
        if let Some(i) = stats.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut sorted = stats.to_vec();
        sorted.sort_by(f64::total_cmp);

        let lo = sorted[0];
        let mut hi = sorted[sorted.len() - 1];
        if hi == lo {
            // Degenerate range: widen upward by a few ulps per bin.
            hi = lo + f64::EPSILON * lo.abs().max(1.0) * bins as f64;
        }
        let width = hi - lo;
        let mut edges: Vec<f64> = (0..bins).map(|j| lo + width * (j as f64 / bins as f64)).collect();
        edges.push(hi);

        let n = sorted.len() as f64;
        let cdf = edges[1..].iter().map(|&e| sorted.partition_point(|&s| s <= e) as f64 / n).collect();

        Ok(Self { sorted, edges, cdf, mode })
    }

    pub fn sorted_stats(&self) -> &[f64] {
        &self.sorted
    }

    /// `bins + 1` edges; `edges[0]` is the smallest statistic and the last
    /// edge the largest.
    pub fn bin_edges(&self) -> &[f64] {
        &self.edges
    }

    /// Fraction of statistics at or below each bin's upper edge.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn bins(&self) -> usize {
        self.cdf.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.edges[self.bins()] - self.edges[0]) / self.bins() as f64
    }

    pub fn mode(&self) -> QuantileMode {
        self.mode
    }

    /// Confidence level reached by scaling constant `c`.
    ///
    /// Histogram mode returns the cumulative value of the bin containing `c`
    /// (its upper edge is the first edge beyond `c`). Below the range this is
    /// 0; above it the level clamps to 1.
    pub fn alpha_at(&self, c: f64) -> f64 {
        match self.mode {
            QuantileMode::Histogram => {
                let above = self.edges.partition_point(|&e| e <= c);
                if above == 0 {
                    0.0
                } else {
                    self.cdf[(above - 1).min(self.bins() - 1)]
                }
            }
            QuantileMode::Exact => self.sorted.partition_point(|&s| s <= c) as f64 / self.sorted.len() as f64,
        }
    }

    /// Smallest scaling constant whose cumulative level exceeds `alpha`.
    ///
    /// Histogram mode returns the lower edge of the first bin whose cumulative
    /// value exceeds `alpha`, or the largest statistic when none does.
    pub fn c_at(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(match self.mode {
            QuantileMode::Histogram => match self.cdf.iter().position(|&p| p > alpha) {
                Some(j) => self.edges[j],
                None => self.edges[self.bins()],
            },
            QuantileMode::Exact => {
                let n = self.sorted.len();
                let rank = ((alpha * n as f64).floor() as usize).min(n - 1);
                self.sorted[rank]
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_index() {
        let mut s = SeededIndices::new(3).stream(&[0]);
        assert_eq!(s.draw(1), vec![0]);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let src = SeededIndices::new(42);
        let a = src.stream(&[7]).draw(10);
        assert_eq!(a, src.stream(&[7]).draw(10));
        assert_ne!(a, src.stream(&[8]).draw(10));
        assert_ne!(a, src.stream(&[7, 0]).draw(10));
        assert_ne!(a, SeededIndices::new(43).stream(&[7]).draw(10));
    }

    #[test]
    fn parallel_replication_matches_sequential() {
        let src = SeededIndices::new(9);
        let par = replicate(64, |b| Ok(src.stream(&[b as u64]).draw(10))).unwrap();
        let seq: Vec<_> = (0..64).map(|b| src.stream(&[b as u64]).draw(10)).collect();
        assert_eq!(par, seq);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let threaded = pool.install(|| replicate(64, |b| Ok(src.stream(&[b as u64]).draw(10)))).unwrap();
        assert_eq!(threaded, seq);
    }

    #[test]
    fn indices_are_uniform() {
        // Binomial(n·reps, 1/n) per index; allow 5σ.
        let n = 1000;
        let reps = 200;
        let mut counts = vec![0usize; n];
        let src = SeededIndices::new(1);
        for r in 0..reps {
            for i in src.stream(&[r]).draw(n) {
                counts[i] += 1;
            }
        }
        let total = (n * reps as usize) as f64;
        let p = 1.0 / n as f64;
        let sigma = (total * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - total * p).abs() <= 5.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn fixed_indices_replay_in_order() {
        let src = FixedIndices::new().with(&[0], vec![1, 1]).with(&[0], vec![0, 1]);
        let mut s = src.stream(&[0]);
        assert_eq!(s.draw(2), vec![1, 1]);
        assert_eq!(s.draw(2), vec![0, 1]);
    }

    #[test]
    #[should_panic(expected = "no injected draw")]
    fn fixed_indices_exhaust() {
        FixedIndices::new().stream(&[1]).draw(2);
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::default().validate().is_ok());
        assert!(BootstrapConfig::new(0, 1).validate().is_err());
        assert!(BootstrapConfig::default().with_nested(1).validate().is_err());
        assert!(BootstrapConfig::default().with_bins(1).validate().is_err());
    }

    #[test]
    fn two_halves() {
        let e = ecdf(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(e.cdf(), &[0.5, 1.0]);
        assert_eq!(e.bin_edges(), &[1.0, 2.5, 4.0]);
    }

    #[test]
    fn constant_stats() {
        let e = ecdf(&[2.5; 10], 1000).unwrap();
        assert_eq!(*e.cdf().last().unwrap(), 1.0);
        assert_eq!(e.cdf()[0], 1.0);
        assert!(e.bin_width() > 0.0);
        assert_eq!(e.alpha_at(2.4), 0.0);
        assert_eq!(e.alpha_at(2.5), 1.0);
        assert_eq!(e.c_at(0.5).unwrap(), 2.5);
    }

    #[test]
    fn empty_or_non_finite_stats() {
        assert!(matches!(ecdf(&[], 10), Err(Error::EmptyInput)));
        assert!(matches!(ecdf(&[1.0, f64::INFINITY], 10), Err(Error::NonFinite(1))));
    }

    #[test]
    fn alpha_clamps_outside_range() {
        let e = ecdf(&[1.0, 2.0, 3.0], 10).unwrap();
        assert_eq!(e.alpha_at(0.5), 0.0);
        assert_eq!(e.alpha_at(1e9), 1.0);
        assert_eq!(e.alpha_at(3.0), 1.0);
    }

    #[test]
    fn c_at_extremes() {
        let e = ecdf(&[0.3, 1.0, 2.0, 7.0], 100).unwrap();
        assert_eq!(e.c_at(0.0).unwrap(), 0.3);
        assert_eq!(e.c_at(1.0).unwrap(), 7.0);
        assert!(matches!(e.c_at(1.5), Err(Error::InvalidAlpha(_))));
        assert!(matches!(e.c_at(-0.1), Err(Error::InvalidAlpha(_))));
        assert!(e.c_at(f64::NAN).is_err());
    }

    #[test]
    fn uniform_quantile() {
        let n = 100_000;
        let stats: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let e = ecdf(&stats, 1000).unwrap();
        assert!((e.c_at(0.95).unwrap() - 0.95).abs() <= 2.0 / 1000.0);
        // Median by rank.
        let median = stats[n / 2];
        assert!((e.alpha_at(median) - 0.5).abs() <= 1.0 / 1000.0 + 1e-12);
    }

    #[test]
    fn exact_mode_uses_order_statistics() {
        let stats = [4.0, 1.0, 3.0, 2.0];
        let e = StatEcdf::new(&stats, 10, QuantileMode::Exact).unwrap();
        assert_eq!(e.alpha_at(2.0), 0.5);
        assert_eq!(e.alpha_at(0.0), 0.0);
        assert_eq!(e.alpha_at(9.0), 1.0);
        assert_eq!(e.c_at(0.0).unwrap(), 1.0);
        assert_eq!(e.c_at(0.5).unwrap(), 3.0);
        assert_eq!(e.c_at(1.0).unwrap(), 4.0);
    }

    fn rank(stats: &[f64], x: f64) -> f64 {
        stats.iter().filter(|&&s| s <= x).count() as f64 / stats.len() as f64
    }

    proptest! {
        #[test]
        fn cdf_matches_rank_oracle(stats in prop::collection::vec(-50.0f64..50.0, 1..400), bins in 2usize..200) {
            let e = ecdf(&stats, bins).unwrap();
            prop_assert!(e.cdf().windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*e.cdf().last().unwrap(), 1.0);
            for (edge, p) in e.bin_edges()[1..].iter().zip(e.cdf()) {
                prop_assert_eq!(*p, rank(&stats, *edge));
            }
        }

        #[test]
        fn alpha_brackets_rank(stats in prop::collection::vec(-50.0f64..50.0, 1..400), bins in 2usize..200, c in -60.0f64..60.0) {
            // The bin containing c spans at most one bin width above it.
            let e = ecdf(&stats, bins).unwrap();
            let a = e.alpha_at(c);
            prop_assert!(a >= rank(&stats, c));
            prop_assert!(a <= rank(&stats, c + e.bin_width() * (1.0 + 1e-9)));
        }

        #[test]
        fn ecdf_is_permutation_invariant(mut stats in prop::collection::vec(-5.0f64..5.0, 1..100), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let e1 = ecdf(&stats, 50).unwrap();
            stats.shuffle(&mut substream(seed, &[]));
            prop_assert_eq!(e1, ecdf(&stats, 50).unwrap());
        }

        #[test]
        fn c_at_inverts_alpha_on_dense_data(u in 0.0f64..1.0) {
            // Every bin populated: 20 uniform points per bin.
            let stats: Vec<f64> = (0..2000).map(|i| i as f64 / 1999.0).collect();
            let e = ecdf(&stats, 100).unwrap();
            let c = u;
            let back = e.c_at(e.alpha_at(c)).unwrap();
            prop_assert!(back >= c - e.bin_width() && back <= c + e.bin_width(), "c={c} back={back}");
        }

        #[test]
        fn c_at_alpha_never_below_c(stats in prop::collection::vec(0.0f64..10.0, 2..300), c in 0.0f64..10.0) {
            let e = ecdf(&stats, 100).unwrap();
            let a = e.alpha_at(c);
            if a < 1.0 && c >= e.bin_edges()[0] {
                prop_assert!(e.c_at(a).unwrap() > c);
            }
        }
    }
}
