//! Medium-access policies that select the active transmitters of a snapshot.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bidding::BidTable;
use crate::geometry::{NeighborIndex, PointSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Random,
    Matern,
    BiddingMatern,
    BidOrdering,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::Random,
        Policy::Matern,
        Policy::BiddingMatern,
        Policy::BidOrdering,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Random => "random",
            Policy::Matern => "matern",
            Policy::BiddingMatern => "bidding_matern",
            Policy::BidOrdering => "bid_ordering",
        }
    }

    pub fn needs_bids(self) -> bool {
        matches!(self, Policy::BiddingMatern | Policy::BidOrdering)
    }

    pub fn needs_exclusion(self) -> bool {
        matches!(self, Policy::Matern | Policy::BiddingMatern)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL.into_iter().find(|p| p.as_str() == s.trim()).ok_or_else(|| {
            Error::invalid(
                "policy",
                format!("unknown policy `{s}` (expected random, matern, bidding_matern or bid_ordering)"),
            )
        })
    }
}

/// Iid uniform `[0, 1)` contention marks, one per potential transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkAssignment(Vec<f64>);

impl MarkAssignment {
    pub fn sample<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Self {
        MarkAssignment((0..count).map(|_| rng.random::<f64>()).collect())
    }

    pub fn from_values(marks: Vec<f64>) -> Result<Self> {
        if marks.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::invalid("marks", "marks must lie in [0, 1]"));
        }
        Ok(MarkAssignment(marks))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Medium-access indicator `e_x` for every potential transmitter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetainedSet {
    flags: Vec<bool>,
    policy: Policy,
}

impl RetainedSet {
    pub fn new(flags: Vec<bool>, policy: Policy) -> Self {
        RetainedSet { flags, policy }
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn contains(&self, i: usize) -> bool {
        self.flags[i]
    }

    /// Indices of retained transmitters in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Keep `x` iff `m_x < p_A`.
pub fn thin_random(marks: &MarkAssignment, p_a: f64) -> RetainedSet {
    RetainedSet::new(marks.values().iter().map(|&m| m < p_a).collect(), Policy::Random)
}

fn thin_by_neighbors(
    transmitters: &PointSet,
    exclusion: f64,
    policy: Policy,
    wins: impl Fn(usize, usize) -> bool,
) -> RetainedSet {
    let index = NeighborIndex::new(transmitters, exclusion);
    let flags = (0..transmitters.len())
        .map(|x| {
            let mut keep = true;
            index.for_each_within(transmitters.get(x), exclusion, |y, _| {
                if y != x && !wins(x, y) {
                    keep = false;
                }
            });
            keep
        })
        .collect();
    RetainedSet::new(flags, policy)
}

/// Matérn type-II: keep `x` iff its mark is strictly the lowest among all
/// transmitters within `exclusion`.
pub fn thin_matern(transmitters: &PointSet, marks: &MarkAssignment, exclusion: f64) -> RetainedSet {
    thin_by_neighbors(transmitters, exclusion, Policy::Matern, |x, y| {
        marks.get(x) < marks.get(y)
    })
}

/// `(bid, mark)` lexicographic order; the mark only separates equal bids.
fn bid_order(bids: &BidTable, marks: &MarkAssignment, x: usize, y: usize) -> Ordering {
    bids.get(x)
        .total_cmp(&bids.get(y))
        .then(marks.get(x).total_cmp(&marks.get(y)))
}

/// Keep `x` iff its `(bid, mark)` pair is strictly the highest among all
/// transmitters within `exclusion`.
pub fn thin_bidding_matern(
    transmitters: &PointSet,
    bids: &BidTable,
    tiebreak: &MarkAssignment,
    exclusion: f64,
) -> RetainedSet {
    thin_by_neighbors(transmitters, exclusion, Policy::BiddingMatern, |x, y| {
        bid_order(bids, tiebreak, x, y) == Ordering::Greater
    })
}

/// Keep the `⌊p_A·N⌋` transmitters with the highest `(bid, mark)` pairs.
pub fn thin_bid_ordering(bids: &BidTable, p_a: f64, tiebreak: &MarkAssignment) -> RetainedSet {
    let n = bids.len();
    let quota = retained_quota(p_a, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&x, &y| bid_order(bids, tiebreak, y, x));
    let mut flags = vec![false; n];
    for &x in &order[..quota] {
        flags[x] = true;
    }
    RetainedSet::new(flags, Policy::BidOrdering)
}

/// `⌊p_A·N⌋`, robust to `p_A` values that are not exact binary fractions
/// (`0.29 * 100` evaluates to `28.999…`).
pub fn retained_quota(p_a: f64, n: usize) -> usize {
    let raw = p_a.clamp(0.0, 1.0) * n as f64;
    ((raw + 1e-9 * raw.max(1.0)).floor() as usize).min(n)
}
