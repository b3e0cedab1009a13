//! Receiver bids on potential transmitters.
//!
//! A receiver bids on every transmitter within the communication radius that
//! caches its requested file. Each bid is the local popularity of the
//! requested file at that transmitter times the receiver's coverage
//! probability, evaluated with the active transmitters approximated by a PPP
//! of intensity `p_A·λ_t`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, CoverageModel};
use crate::content::FileId;
use crate::evaluation::Realization;
use crate::geometry::NeighborIndex;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// `exp(-μTσ²r^α - πλρr²)`.
    #[default]
    Exact,
    /// `max(0, 1 - μTσ²r^α - πλρr²)`.
    Linearized,
}

impl ScoringMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoringMode::Exact => "exact",
            ScoringMode::Linearized => "linearized",
        }
    }
}

/// A receiver eligible to bid on one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bidder {
    pub receiver: usize,
    pub distance: f64,
    pub file: FileId,
}

/// Receivers within `r_d2d` of transmitter `tx` whose request is cached there,
/// ordered by receiver index.
pub fn bidder_set(tx: usize, realization: &Realization, receivers: &NeighborIndex<'_>, r_d2d: f64) -> Vec<Bidder> {
    let cache = &realization.caches[tx];
    let mut out = Vec::new();
    receivers.for_each_within(realization.transmitters.get(tx), r_d2d, |u, d| {
        let file = realization.requests[u];
        if cache.contains(file) {
            out.push(Bidder {
                receiver: u,
                distance: d,
                file,
            });
        }
    });
    out.sort_unstable_by_key(|b| b.receiver);
    out
}

/// Empirical request distribution over the files requested by a
/// transmitter's bidders. Empty when there are no bidders.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalRequestPmf {
    /// `(file, probability)` sorted by file.
    entries: Vec<(FileId, f64)>,
}

impl LocalRequestPmf {
    pub fn prob(&self, file: FileId) -> f64 {
        self.entries
            .binary_search_by_key(&file, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[(FileId, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn local_request_pmf(bidders: &[Bidder]) -> LocalRequestPmf {
    let mut files: Vec<FileId> = bidders.iter().map(|b| b.file).collect();
    files.sort_unstable();
    let total = files.len() as f64;
    let mut entries: Vec<(FileId, f64)> = Vec::new();
    for chunk in files.chunk_by(|a, b| a == b) {
        entries.push((chunk[0], chunk.len() as f64 / total));
    }
    LocalRequestPmf { entries }
}

/// `Σ_u p_x(c_u) · score(r_xu)` over the bidders of one transmitter.
///
/// Terms are summed in `(distance, file)` order so the result does not depend
/// on receiver labels.
pub fn accumulated_bid(
    bidders: &[Bidder],
    pmf: &LocalRequestPmf,
    active_intensity: f64,
    coverage: &CoverageModel,
    mode: ScoringMode,
) -> f64 {
    let mut terms: Vec<(f64, FileId)> = bidders.iter().map(|b| (b.distance, b.file)).collect();
    terms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    terms
        .iter()
        .map(|&(r, file)| {
            let score = match mode {
                ScoringMode::Exact => coverage.probability(r, active_intensity),
                ScoringMode::Linearized => coverage.linearized(r, active_intensity),
            };
            pmf.prob(file) * score
        })
        .sum()
}

/// Accumulated bid for every potential transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct BidTable {
    bids: Vec<f64>,
    mode: ScoringMode,
}

impl BidTable {
    /// Bids supplied directly, e.g. for constant-bid experiments.
    pub fn from_values(bids: Vec<f64>, mode: ScoringMode) -> Result<Self> {
        if let Some(b) = bids.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(Error::invalid("bid", format!("bids must be finite and >= 0, got {b}")));
        }
        Ok(BidTable { bids, mode })
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }

    pub fn get(&self, tx: usize) -> f64 {
        self.bids[tx]
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    pub fn mode(&self) -> ScoringMode {
        self.mode
    }
}

pub fn compute_bid_table(
    realization: &Realization,
    r_d2d: f64,
    active_intensity: f64,
    params: &ChannelParams,
    mode: ScoringMode,
) -> Result<BidTable> {
    let coverage = CoverageModel::new(*params)?;
    Ok(bid_table_with(realization, r_d2d, active_intensity, &coverage, mode))
}

pub(crate) fn bid_table_with(
    realization: &Realization,
    r_d2d: f64,
    active_intensity: f64,
    coverage: &CoverageModel,
    mode: ScoringMode,
) -> BidTable {
    let index = NeighborIndex::new(&realization.receivers, r_d2d);
    let bids = (0..realization.transmitters.len())
        .map(|tx| {
            let bidders = bidder_set(tx, realization, &index, r_d2d);
            let pmf = local_request_pmf(&bidders);
            accumulated_bid(&bidders, &pmf, active_intensity, coverage, mode)
        })
        .collect();
    BidTable { bids, mode }
}
