use std::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::scalar::density;
use crate::simplex::SimplexShift;

/// Seeded Monte-Carlo settings.
///
/// Samples are drawn in fixed-size chunks, each from its own ChaCha stream
/// derived from `(seed, stream_id, chunk)`, and chunk totals are reduced in
/// chunk order. Results therefore do not depend on the thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSpec {
    pub sample_count: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl McSpec {
    pub fn new(sample_count: usize, seed: u64) -> Self {
        Self {
            sample_count,
            seed,
            stream_id: 0,
        }
    }

    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::Domain("sample_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_err: 0.0 }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_err: self.std_err * factor.abs(),
        }
    }

    /// Whether `target` lies within `k` standard errors (plus `slack`).
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.std_err + slack
    }
}

const CHUNK: usize = 1 << 14;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha generator for one chunk of one stream.
pub(crate) fn stream_rng(seed: u64, stream_id: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(stream_id.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ mix(chunk)));
    rng
}

/// Per-component sums and sums of squares of a vector-valued sampler.
#[derive(Debug, Clone)]
pub(crate) struct ChunkSums {
    pub n: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl ChunkSums {
    fn zeros(k: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.n += other.n;
        for c in 0..self.sum.len() {
            self.sum[c] += other.sum[c];
            self.sum_sq[c] += other.sum_sq[c];
        }
        self
    }

    pub fn estimate(&self, c: usize) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum[c] / n;
        let var = (self.sum_sq[c] / n - mean * mean).max(0.0);
        Estimate {
            value: mean,
            std_err: (var / n).sqrt(),
        }
    }
}

/// Runs `sample` `spec.sample_count` times; each call writes `k` values.
pub(crate) fn chunked_sum<F>(spec: &McSpec, k: usize, sample: F) -> ChunkSums
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let chunks = spec.sample_count.div_ceil(CHUNK);
    let partials: Vec<ChunkSums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(spec.sample_count - c * CHUNK);
            let mut rng = stream_rng(spec.seed, spec.stream_id, c as u64);
            let mut acc = ChunkSums::zeros(k);
            let mut out = vec![0.0; k];
            for _ in 0..len {
                sample(&mut rng, &mut out);
                for (idx, v) in out.iter().enumerate() {
                    acc.sum[idx] += v;
                    acc.sum_sq[idx] += v * v;
                }
            }
            acc.n = len;
            acc
        })
        .collect();
    partials
        .iter()
        .fold(ChunkSums::zeros(k), |acc, p| acc.merge(p))
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Frequency of `argmax_j (G_j - x_j) = i` over iid standard normal `G`.
pub fn mc_model_cell_measure(x: &SimplexShift, i: usize, spec: &McSpec) -> Result<Estimate> {
    spec.validate()?;
    let q = x.q();
    if i >= q {
        return Err(Error::InvalidDimension(format!("cell index {i} out of range for q = {q}")));
    }
    let shift = x.as_slice();
    let sums = chunked_sum(spec, 1, |rng, out| {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (j, xj) in shift.iter().enumerate() {
            let v = normal(rng) - xj;
            if v > best {
                best = v;
                arg = j;
            }
        }
        out[0] = if arg == i { 1.0 } else { 0.0 };
    });
    Ok(sums.estimate(0))
}

/// Conditional-representation estimate of the model interface area `A^m_ij(x)`:
/// sample `s ~ N(0, 1/2)` and the remaining coordinates, average the constraint
/// indicator and multiply by `phi(c0)`.
pub fn mc_model_interface_area(x: &SimplexShift, i: usize, j: usize, spec: &McSpec) -> Result<Estimate> {
    spec.validate()?;
    let q = x.q();
    if i >= q || j >= q || i == j {
        return Err(Error::Domain(format!("invalid interface ({i}, {j}) for q = {q}")));
    }
    let c = x.as_slice();
    let weight = density((c[i] - c[j]) * FRAC_1_SQRT_2);
    if q == 2 {
        return Ok(Estimate::exact(weight));
    }
    let mid = 0.5 * (c[i] + c[j]);
    let offsets: Vec<f64> = (0..q)
        .filter(|&k| k != i && k != j)
        .map(|k| c[k] - mid)
        .collect();
    let sums = chunked_sum(spec, 1, |rng, out| {
        let s = normal(rng) * FRAC_1_SQRT_2;
        let inside = offsets.iter().all(|d| normal(rng) <= s + d);
        out[0] = if inside { 1.0 } else { 0.0 };
    });
    Ok(sums.estimate(0).scaled(weight))
}
