//! Monte Carlo evaluation of the scheduling policies.
//!
//! One realization draws transmitters, caches, receivers and requests, applies
//! a policy at a given MAP, associates every receiver with its nearest
//! eligible active transmitter and measures
//! `(W / Ñ)·log2(1 + SINR)·1(SINR ≥ T)` per user, with unserved users counted
//! as zero. Statistics are aggregated over independent realizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bidding::{bid_table_with, BidTable, ScoringMode};
use crate::channel::{
    comm_range, exclusion_radius_from_map, realized_sinr, ChannelParams, CoverageModel, Fading, RangeRegime,
};
use crate::content::{sample_caches, sample_requests, zipf_pmf, CacheConfig, FileId};
use crate::geometry::{sample_ppp, BoundaryMode, NeighborIndex, PointSet, Window};
use crate::scheduling::{
    thin_bid_ordering, thin_bidding_matern, thin_matern, thin_random, MarkAssignment, Policy, RetainedSet,
};
use crate::{Error, Result};

/// One snapshot of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub transmitters: PointSet,
    pub caches: Vec<CacheConfig>,
    pub receivers: PointSet,
    pub requests: Vec<FileId>,
}

impl Realization {
    pub fn new(
        transmitters: PointSet,
        caches: Vec<CacheConfig>,
        receivers: PointSet,
        requests: Vec<FileId>,
    ) -> Result<Self> {
        if caches.len() != transmitters.len() {
            return Err(Error::invalid(
                "caches",
                format!("{} caches for {} transmitters", caches.len(), transmitters.len()),
            ));
        }
        if requests.len() != receivers.len() {
            return Err(Error::invalid(
                "requests",
                format!("{} requests for {} receivers", requests.len(), receivers.len()),
            ));
        }
        if transmitters.window() != receivers.window() {
            return Err(Error::invalid(
                "window",
                "transmitters and receivers use different windows",
            ));
        }
        Ok(Realization {
            transmitters,
            caches,
            receivers,
            requests,
        })
    }

    pub fn window(&self) -> &Window {
        self.transmitters.window()
    }

    pub fn sample(scenario: &Scenario, streams: &Streams) -> Result<Self> {
        let placement = zipf_pmf(scenario.gamma_c, scenario.catalog_size)?;
        let popularity = zipf_pmf(scenario.gamma_r, scenario.catalog_size)?;
        let transmitters = sample_ppp(
            scenario.lambda_t,
            scenario.window,
            &mut streams.rng(Stream::Transmitters),
        )?;
        let caches = sample_caches(
            &placement,
            scenario.cache_size,
            transmitters.len(),
            &mut streams.rng(Stream::Caches),
        )?;
        let receivers = sample_ppp(scenario.lambda_r, scenario.window, &mut streams.rng(Stream::Receivers))?;
        let requests = sample_requests(&popularity, &receivers, &mut streams.rng(Stream::Requests));
        Realization::new(transmitters, caches, receivers, requests)
    }
}

/// How the communication radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RangeSetting {
    #[default]
    NoiseLimited,
    /// Recomputed per MAP from the mean interference of active transmitters
    /// of intensity `p_A·λ_t` outside the exclusion radius.
    InterferenceLimited,
    Fixed(f64),
}

/// Physical parameters of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub window: Window,
    pub lambda_t: f64,
    pub lambda_r: f64,
    pub catalog_size: usize,
    pub cache_size: usize,
    /// Request popularity skew.
    pub gamma_r: f64,
    /// Placement skew.
    pub gamma_c: f64,
    pub channel: ChannelParams,
    pub range: RangeSetting,
    pub scoring: ScoringMode,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            window: Window::centered_square(5.0, BoundaryMode::Plain).expect("valid window"),
            lambda_t: 3.0,
            lambda_r: 3.0,
            catalog_size: 100,
            cache_size: 10,
            gamma_r: 5.0,
            gamma_c: 2.5,
            channel: ChannelParams::default(),
            range: RangeSetting::NoiseLimited,
            scoring: ScoringMode::Exact,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_t > 0.0 && self.lambda_t.is_finite()) {
            return Err(Error::invalid(
                "lambda_t",
                format!("must be > 0, got {}", self.lambda_t),
            ));
        }
        if !(self.lambda_r >= 0.0 && self.lambda_r.is_finite()) {
            return Err(Error::invalid(
                "lambda_r",
                format!("must be >= 0, got {}", self.lambda_r),
            ));
        }
        if self.catalog_size == 0 {
            return Err(Error::invalid("catalog_size", "M must be >= 1"));
        }
        if self.cache_size >= self.catalog_size {
            return Err(Error::invalid(
                "cache_size",
                format!(
                    "N_cache must be < M (cache_size={}, catalog_size={})",
                    self.cache_size, self.catalog_size
                ),
            ));
        }
        if !(self.gamma_r >= 0.0 && self.gamma_r.is_finite()) {
            return Err(Error::invalid("gamma_r", format!("must be >= 0, got {}", self.gamma_r)));
        }
        if !(self.gamma_c >= 0.0 && self.gamma_c.is_finite()) {
            return Err(Error::invalid("gamma_c", format!("must be >= 0, got {}", self.gamma_c)));
        }
        self.channel.validate()?;
        match self.range {
            RangeSetting::NoiseLimited if self.channel.noise <= 0.0 => Err(Error::invalid(
                "range_mode",
                "noise_limited range needs noise_power > 0",
            )),
            RangeSetting::Fixed(r) if !(r > 0.0 && r.is_finite()) => {
                Err(Error::invalid("fixed_range", format!("must be > 0, got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Communication radius at MAP `p_a`; `exclusion` is the Matérn radius
    /// for that MAP (`None` when nothing transmits).
    pub fn comm_range(&self, p_a: f64, exclusion: Option<f64>) -> Result<f64> {
        match self.range {
            RangeSetting::Fixed(r) => Ok(r),
            RangeSetting::NoiseLimited => comm_range(&self.channel, RangeRegime::NoiseLimited, 0.0, 0.0),
            RangeSetting::InterferenceLimited => match exclusion {
                Some(d) if d > 0.0 => {
                    comm_range(&self.channel, RangeRegime::InterferenceLimited, p_a * self.lambda_t, d)
                }
                _ => Err(Error::invalid(
                    "p_A",
                    format!("interference_limited range needs 0 < p_A < 1, got {p_a}"),
                )),
            },
        }
    }
}

/// Purpose-specific random streams of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Transmitters = 1,
    Caches = 2,
    Receivers = 3,
    Requests = 4,
    Marks = 5,
    Fading = 6,
}

/// Derives independent streams from `(seed, realization index, purpose)`.
///
/// Because the streams are split by purpose, two runs with the same seed
/// share geometry, caches and requests even when they differ in policy or in
/// parameters that only affect later stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    key: u64,
}

impl Streams {
    pub fn new(seed: u64, realization: u64) -> Self {
        Streams {
            key: splitmix64(seed ^ splitmix64(realization.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    pub fn rng(&self, purpose: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(purpose as u64);
        rng
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Receiver-to-transmitter association and per-transmitter load `Ñ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    server: Vec<Option<usize>>,
    load: Vec<usize>,
}

impl Association {
    pub fn server(&self, receiver: usize) -> Option<usize> {
        self.server[receiver]
    }

    pub fn servers(&self) -> &[Option<usize>] {
        &self.server
    }

    pub fn load(&self, transmitter: usize) -> usize {
        self.load[transmitter]
    }

    pub fn loads(&self) -> &[usize] {
        &self.load
    }

    pub fn served(&self) -> usize {
        self.server.iter().filter(|s| s.is_some()).count()
    }
}

/// Each receiver picks the nearest retained transmitter within `r_d2d` that
/// caches its file; equal distances go to the lower index.
pub fn associate(realization: &Realization, retained: &RetainedSet, r_d2d: f64) -> Association {
    let index = NeighborIndex::new(&realization.transmitters, r_d2d);
    let mut load = vec![0; realization.transmitters.len()];
    let server = (0..realization.receivers.len())
        .map(|u| {
            let file = realization.requests[u];
            let mut best: Option<(f64, usize)> = None;
            index.for_each_within(realization.receivers.get(u), r_d2d, |x, d| {
                if retained.contains(x) && realization.caches[x].contains(file) {
                    let better = match best {
                        None => true,
                        Some((bd, bx)) => d < bd || (d == bd && x < bx),
                    };
                    if better {
                        best = Some((d, x));
                    }
                }
            });
            let chosen = best.map(|(_, x)| x);
            if let Some(x) = chosen {
                load[x] += 1;
            }
            chosen
        })
        .collect();
    Association { server, load }
}

/// Rate of receiver `u` in bits/s. Draws fresh fades on every link.
pub fn user_rate<R: Rng + ?Sized>(
    u: usize,
    association: &Association,
    retained: &RetainedSet,
    realization: &Realization,
    params: &ChannelParams,
    fading: &Fading,
    rng: &mut R,
) -> f64 {
    let Some(x) = association.server(u) else {
        return 0.0;
    };
    let sinr = realized_sinr(
        realization.receivers.get(u),
        x,
        &realization.transmitters,
        retained,
        params,
        fading,
        rng,
    );
    rate_from_sinr(sinr, association.load(x), params)
}

/// `(W / load)·log2(1 + sinr)` when `sinr ≥ T`, else 0.
pub fn rate_from_sinr(sinr: f64, load: usize, params: &ChannelParams) -> f64 {
    if sinr >= params.threshold && load > 0 {
        params.bandwidth / load as f64 * (1.0 + sinr).log2()
    } else {
        0.0
    }
}

/// Zero-truncated Poisson pmf of the number of users at a transmitter that
/// serves at least one.
pub fn load_pmf(mean_users: f64, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "load pmf is conditioned on at least one user"));
    }
    if !(mean_users > 0.0 && mean_users.is_finite()) {
        return Err(Error::invalid("mean_users", format!("must be > 0, got {mean_users}")));
    }
    // log-space keeps large k finite
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    let ln_num = k as f64 * mean_users.ln() - mean_users - ln_fact;
    Ok(ln_num.exp() / -(-mean_users).exp_m1())
}

/// Everything a policy decides for one realization at one MAP.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub r_d2d: f64,
    /// Matérn exclusion radius for this MAP; `None` when `p_A = 0`.
    pub exclusion: Option<f64>,
    pub bids: Option<BidTable>,
    pub retained: RetainedSet,
    pub association: Association,
}

/// Applies `policy` at MAP `p_a` and associates receivers.
pub fn schedule(
    realization: &Realization,
    marks: &MarkAssignment,
    policy: Policy,
    p_a: f64,
    scenario: &Scenario,
    coverage: &CoverageModel,
) -> Result<Schedule> {
    if !(0.0..=1.0).contains(&p_a) {
        return Err(Error::invalid("p_A", format!("must be in [0, 1], got {p_a}")));
    }
    let n_tx = realization.transmitters.len();
    let exclusion = if p_a > 0.0 {
        Some(exclusion_radius_from_map(p_a, scenario.lambda_t)?)
    } else {
        None
    };
    let r_d2d = scenario.comm_range(p_a, exclusion)?;
    let bids = if policy.needs_bids() {
        Some(bid_table_with(
            realization,
            r_d2d,
            p_a * scenario.lambda_t,
            coverage,
            scenario.scoring,
        ))
    } else {
        None
    };
    let retained = match (policy, exclusion) {
        (_, None) => RetainedSet::new(vec![false; n_tx], policy),
        (Policy::Random, _) => thin_random(marks, p_a),
        (Policy::Matern, Some(d)) => thin_matern(&realization.transmitters, marks, d),
        (Policy::BiddingMatern, Some(d)) => thin_bidding_matern(
            &realization.transmitters,
            bids.as_ref().expect("bids computed"),
            marks,
            d,
        ),
        (Policy::BidOrdering, _) => thin_bid_ordering(bids.as_ref().expect("bids computed"), p_a, marks),
    };
    let association = associate(realization, &retained, r_d2d);
    Ok(Schedule {
        r_d2d,
        exclusion,
        bids,
        retained,
        association,
    })
}

/// Per-realization tallies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealizationOutcome {
    pub transmitters: usize,
    pub retained: usize,
    /// Retained transmitters with at least one associated receiver.
    pub loaded: usize,
    pub receivers: usize,
    pub served: usize,
    pub rate_sum: f64,
}

impl RealizationOutcome {
    /// Mean rate over all receivers; 0 when the realization has none.
    pub fn mean_rate(&self) -> f64 {
        if self.receivers == 0 {
            0.0
        } else {
            self.rate_sum / self.receivers as f64
        }
    }
}

/// Rates for every receiver of a scheduled realization.
pub fn measure<R: Rng + ?Sized>(
    realization: &Realization,
    schedule: &Schedule,
    params: &ChannelParams,
    fading: &Fading,
    rng: &mut R,
) -> RealizationOutcome {
    let rate_sum = (0..realization.receivers.len())
        .map(|u| {
            user_rate(
                u,
                &schedule.association,
                &schedule.retained,
                realization,
                params,
                fading,
                rng,
            )
        })
        .sum();
    RealizationOutcome {
        transmitters: realization.transmitters.len(),
        retained: schedule.retained.count(),
        loaded: schedule.association.loads().iter().filter(|&&l| l > 0).count(),
        receivers: realization.receivers.len(),
        served: schedule.association.served(),
        rate_sum,
    }
}

/// Samples realization `index` under `seed` and evaluates one policy on it.
pub fn run_realization(
    scenario: &Scenario,
    coverage: &CoverageModel,
    policy: Policy,
    p_a: f64,
    seed: u64,
    index: u64,
) -> Result<RealizationOutcome> {
    let streams = Streams::new(seed, index);
    let realization = Realization::sample(scenario, &streams)?;
    let marks = MarkAssignment::sample(realization.transmitters.len(), &mut streams.rng(Stream::Marks));
    let schedule = schedule(&realization, &marks, policy, p_a, scenario, coverage)?;
    let fading = Fading::new(scenario.channel.mu)?;
    Ok(measure(
        &realization,
        &schedule,
        &scenario.channel,
        &fading,
        &mut streams.rng(Stream::Fading),
    ))
}

/// One `(policy, p_A)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub policy: Policy,
    pub p_a: f64,
    /// Mean over realizations of the per-user rate (unserved users count 0).
    pub mean_rate: f64,
    /// Standard error of `mean_rate` across realizations; NaN for one realization.
    pub stderr: f64,
    pub served_fraction: f64,
    /// Mean number of users per transmitter serving at least one user.
    pub mean_load: f64,
    pub retained_fraction: f64,
    pub n_realizations: usize,
    /// Mean rate of served users only.
    pub served_mean_rate: f64,
}

impl MetricsRow {
    /// Aggregates outcomes in the order given.
    pub fn from_outcomes(policy: Policy, p_a: f64, outcomes: &[RealizationOutcome]) -> Self {
        let n = outcomes.len();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let mut tot = RealizationOutcome::default();
        for o in outcomes {
            let m = o.mean_rate();
            sum += m;
            sum_sq += m * m;
            tot.transmitters += o.transmitters;
            tot.retained += o.retained;
            tot.loaded += o.loaded;
            tot.receivers += o.receivers;
            tot.served += o.served;
            tot.rate_sum += o.rate_sum;
        }
        let nf = n as f64;
        let mean = if n > 0 { sum / nf } else { f64::NAN };
        let stderr = if n > 1 {
            let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        } else {
            f64::NAN
        };
        let ratio = |a: f64, b: usize| if b > 0 { a / b as f64 } else { 0.0 };
        MetricsRow {
            policy,
            p_a,
            mean_rate: mean,
            stderr,
            served_fraction: ratio(tot.served as f64, tot.receivers),
            mean_load: ratio(tot.served as f64, tot.loaded),
            retained_fraction: ratio(tot.retained as f64, tot.transmitters),
            n_realizations: n,
            served_mean_rate: ratio(tot.rate_sum, tot.served),
        }
    }
}

/// Evaluates `policy` at `p_a` over `n_realizations` realizations in parallel.
/// The result depends only on the arguments, not on thread scheduling.
pub fn run_experiment(
    scenario: &Scenario,
    policy: Policy,
    p_a: f64,
    n_realizations: usize,
    seed: u64,
) -> Result<MetricsRow> {
    let outcomes = run_outcomes(scenario, policy, p_a, n_realizations, seed)?;
    Ok(MetricsRow::from_outcomes(policy, p_a, &outcomes))
}

/// Per-realization outcomes in realization order.
pub fn run_outcomes(
    scenario: &Scenario,
    policy: Policy,
    p_a: f64,
    n_realizations: usize,
    seed: u64,
) -> Result<Vec<RealizationOutcome>> {
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be >= 1"));
    }
    scenario.validate()?;
    let coverage = CoverageModel::new(scenario.channel)?;
    (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| run_realization(scenario, &coverage, policy, p_a, seed, i))
        .collect()
}

/// Seed of sweep cell `(policy, grid index)`, independent of list order.
pub fn cell_seed(master: u64, policy: Policy, grid_index: usize) -> u64 {
    splitmix64(master ^ splitmix64(((policy as u64) << 32) | grid_index as u64))
}

/// Every `(policy, p_A)` combination, policies outermost.
pub fn sweep(
    scenario: &Scenario,
    policies: &[Policy],
    grid: &[f64],
    n_realizations: usize,
    master_seed: u64,
) -> Result<Vec<MetricsRow>> {
    if grid.is_empty() {
        return Err(Error::invalid("pa_grid", "must not be empty"));
    }
    if policies.is_empty() {
        return Err(Error::invalid("policies", "must not be empty"));
    }
    let mut rows = Vec::with_capacity(policies.len() * grid.len());
    for &policy in policies {
        for (k, &p_a) in grid.iter().enumerate() {
            rows.push(run_experiment(
                scenario,
                policy,
                p_a,
                n_realizations,
                cell_seed(master_seed, policy, k),
            )?);
        }
    }
    Ok(rows)
}
