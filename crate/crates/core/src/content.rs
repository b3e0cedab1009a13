//! File catalog, Zipf popularity, cache placement and request generation.
//!
//! Files are labelled `1..=M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::PointSet;
use crate::{Error, Result};

pub type FileId = u32;

/// Normalized Zipf pmf over files `1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfPmf {
    exponent: f64,
    probs: Vec<f64>,
    /// cumulative sums, `cdf[M - 1] == 1`
    cdf: Vec<f64>,
}

impl ZipfPmf {
    pub fn new(exponent: f64, catalog_size: usize) -> Result<Self> {
        if !(exponent >= 0.0 && exponent.is_finite()) {
            return Err(Error::invalid(
                "gamma",
                format!("Zipf exponent must be >= 0, got {exponent}"),
            ));
        }
        if catalog_size == 0 {
            return Err(Error::invalid("catalog_size", "must be >= 1"));
        }
        let weights: Vec<f64> = (1..=catalog_size).map(|n| (n as f64).powf(-exponent)).collect();
        // smallest terms first keeps the normalizer accurate for long tails
        let total: f64 = weights.iter().rev().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Ok(ZipfPmf { exponent, probs, cdf })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn catalog_size(&self) -> usize {
        self.probs.len()
    }

    /// Probability of file `n` (1-based). Zero outside the catalog.
    pub fn prob(&self, n: FileId) -> f64 {
        match n {
            0 => 0.0,
            n => self.probs.get(n as usize - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FileId {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= u);
        (k.min(self.probs.len() - 1) + 1) as FileId
    }
}

pub fn zipf_pmf(gamma: f64, catalog_size: usize) -> Result<ZipfPmf> {
    ZipfPmf::new(gamma, catalog_size)
}

/// Set of distinct files held by one transmitter, in draw order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    files: Vec<FileId>,
}

impl CacheConfig {
    /// Fails on duplicates or file id 0.
    pub fn new(files: Vec<FileId>) -> Result<Self> {
        let mut sorted = files.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("cache", "duplicate file in cache"));
        }
        if sorted.first() == Some(&0) {
            return Err(Error::invalid("cache", "file ids start at 1"));
        }
        Ok(CacheConfig { files })
    }

    pub fn files(&self) -> &[FileId] {
        &self.files
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn contains(&self, file: FileId) -> bool {
        self.files.contains(&file)
    }
}

/// Draws `cache_size` distinct files by successive weighted sampling without
/// replacement, renormalizing the remaining mass after every draw.
///
/// Exactly one uniform variate is consumed per draw, so with a shared stream
/// the cache of size `n` is a prefix of the cache of size `n + 1`.
pub fn sample_cache<R: Rng + ?Sized>(placement: &ZipfPmf, cache_size: usize, rng: &mut R) -> Result<CacheConfig> {
    let m = placement.catalog_size();
    if cache_size >= m {
        return Err(Error::invalid(
            "cache_size",
            format!("N_cache must be < M (N_cache={cache_size}, M={m})"),
        ));
    }
    let mut remaining: Vec<f64> = placement.probs().to_vec();
    let mut mass: f64 = 1.0;
    let mut files = Vec::with_capacity(cache_size);
    for _ in 0..cache_size {
        let target = rng.random::<f64>() * mass;
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, &w) in remaining.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            acc += w;
            chosen = Some(k);
            if target < acc {
                break;
            }
        }
        // rounding can leave `target` just above the final partial sum; the
        // last positive-weight file is then the right answer
        let k = chosen.expect("cache_size < M leaves positive mass");
        files.push(k as FileId + 1);
        mass -= remaining[k];
        remaining[k] = 0.0;
        if mass <= 0.0 {
            mass = remaining.iter().sum();
        }
    }
    Ok(CacheConfig { files })
}

/// Independent caches for `count` transmitters.
///
/// Each transmitter gets its own sub-stream seeded from `rng`, so placements
/// stay coupled across cache sizes under a common seed.
pub fn sample_caches<R: Rng + ?Sized>(
    placement: &ZipfPmf,
    cache_size: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<CacheConfig>> {
    (0..count)
        .map(|_| {
            let mut sub = ChaCha8Rng::seed_from_u64(rng.next_u64());
            sample_cache(placement, cache_size, &mut sub)
        })
        .collect()
}

/// One iid request per receiver.
pub fn sample_requests<R: Rng + ?Sized>(requests: &ZipfPmf, receivers: &PointSet, rng: &mut R) -> Vec<FileId> {
    (0..receivers.len()).map(|_| requests.sample(rng)).collect()
}
