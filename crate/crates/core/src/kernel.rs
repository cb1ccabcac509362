//! Every random choice an agent makes: which measures to apply, how to
//! aggregate their scores, and the acceptance threshold for the tick.
//!
//! All draws come from an [`RngStream`], a ChaCha8 generator addressed by a
//! `(seed, stream_id)` pair. Simulation `i` of a meta-simulation owns stream
//! `i`; agents inside a simulation fork per-tick sub-streams keyed by their
//! identity so draws never depend on iteration order.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::KernelError;
use crate::similarity::MeasureId;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent generator for `(label, index)` under this stream's
    /// `(seed, stream_id)`. Does not advance `self`.
    pub fn fork(&self, label: &str, index: u64) -> RngStream {
        let mut state = splitmix64(self.seed ^ 0x5ca1_ab1e_0000_0000);
        state = splitmix64(state ^ self.stream_id);
        state = splitmix64(state ^ fnv1a(label.as_bytes()));
        state = splitmix64(state ^ index);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        RngStream { seed: self.seed, stream_id: self.stream_id, rng: ChaCha8Rng::from_seed(key) }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Derives the root seed of repetition `index` from a base seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x9e37_79b9)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "weights", rename_all = "lowercase")]
pub enum AggregationFn {
    Max,
    Average,
    Weighted(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggregationKind {
    Max,
    Average,
    Weighted,
}

impl AggregationFn {
    /// Checks that the weights are non-negative and sum to 1 within 1e-9.
    pub fn weighted(weights: Vec<f64>) -> Result<Self, KernelError> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| w.is_nan() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(KernelError::InvalidWeights { sum });
        }
        Ok(AggregationFn::Weighted(weights))
    }

    pub fn kind(&self) -> AggregationKind {
        match self {
            AggregationFn::Max => AggregationKind::Max,
            AggregationFn::Average => AggregationKind::Average,
            AggregationFn::Weighted(_) => AggregationKind::Weighted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInterval {
    lo: f64,
    hi: f64,
}

impl ThresholdInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, KernelError> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(KernelError::InvalidInterval { lo, hi });
        }
        Ok(ThresholdInterval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

impl Default for ThresholdInterval {
    fn default() -> Self {
        ThresholdInterval { lo: 0.45, hi: 0.65 }
    }
}

/// A uniformly random `k`-subset of `pool`, returned in pool order.
pub fn draw_measures(rng: &mut RngStream, pool: &[MeasureId], k: usize) -> Result<Vec<MeasureId>, KernelError> {
    if k == 0 || k > pool.len() {
        return Err(KernelError::InvalidDrawSize { k, pool: pool.len() });
    }
    let mut picked = index::sample(rng, pool.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i]).collect())
}

/// Uniform over the three kinds. Weighted draws `n_scores` uniform variates
/// and normalizes them.
pub fn draw_aggregation(rng: &mut RngStream, n_scores: usize) -> AggregationFn {
    match rng.random_range(0..3u8) {
        0 => AggregationFn::Max,
        1 => AggregationFn::Average,
        _ => {
            let n = n_scores.max(1);
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            let weights = if sum > 0.0 { raw.iter().map(|w| w / sum).collect() } else { vec![1.0 / n as f64; n] };
            AggregationFn::Weighted(weights)
        }
    }
}

/// Uniform in `[lo, hi)`, or exactly `lo` for a degenerate interval.
pub fn draw_threshold(rng: &mut RngStream, interval: ThresholdInterval) -> f64 {
    if interval.lo >= interval.hi {
        return interval.lo;
    }
    rng.random_range(interval.lo..interval.hi)
}

/// Combines measure scores. The result always lies within
/// `[min(scores), max(scores)]`.
pub fn aggregate(f: &AggregationFn, scores: &[f64]) -> Result<f64, KernelError> {
    if scores.is_empty() {
        return Err(KernelError::EmptyScores);
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let value = match f {
        AggregationFn::Max => return Ok(hi),
        AggregationFn::Average => scores.iter().sum::<f64>() / scores.len() as f64,
        AggregationFn::Weighted(weights) => {
            if weights.len() != scores.len() {
                return Err(KernelError::LengthMismatch { expected: weights.len(), actual: scores.len() });
            }
            weights.iter().zip(scores).map(|(w, s)| w * s).sum()
        }
    };
    // rounding can step one ulp outside the hull
    Ok(value.clamp(lo, hi))
}
