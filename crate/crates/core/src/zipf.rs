use rand::Rng;

/// Zipf law over ranks `1..=n` with P(k) proportional to k^-s.
///
/// Sampling is inverse-CDF over a precomputed table, so draws are exact and
/// reproducible for any `s >= 0` including `s = inf` (all mass on rank 1).
#[derive(Debug, Clone)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(n: usize, s: f64) -> Option<Self> {
        Self::from_ranks((1..=n).map(|k| k as f64), s)
    }

    /// Zipf restricted to a subset of ranks (1-based), renormalised.
    pub fn from_ranks(ranks: impl IntoIterator<Item = f64>, s: f64) -> Option<Self> {
        if s.is_nan() || s < 0.0 {
            return None;
        }
        let weights: Vec<f64> = ranks.into_iter().map(|k| k.powf(-s)).collect();
        Self::from_weights(&weights)
    }

    pub fn from_weights(weights: &[f64]) -> Option<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || !total.is_finite() || total <= 0.0 {
            return None;
        }
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Some(Self { cdf })
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn probability(&self, index: usize) -> f64 {
        let hi = self.cdf[index];
        let lo = if index == 0 { 0.0 } else { self.cdf[index - 1] };
        hi - lo
    }

    /// Returns a 0-based index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        // Zero-mass tail entries share the final CDF value; clamp to the last
        // entry that actually carries mass.
        idx.min(self.last_positive())
    }

    fn last_positive(&self) -> usize {
        let mut i = self.cdf.len() - 1;
        while i > 0 && self.cdf[i] == self.cdf[i - 1] {
            i -= 1;
        }
        i
    }
}
