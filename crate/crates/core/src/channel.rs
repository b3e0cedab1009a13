//! Path loss, Rayleigh fading, realized SINR and the closed-form coverage
//! analytics used for bidding and for sizing the communication and exclusion
//! ranges.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::geometry::{Point, PointSet};
use crate::quad;
use crate::scheduling::RetainedSet;
use crate::{Error, Result};

/// Distances below this are treated as `R_MIN` by [`path_loss`].
pub const R_MIN: f64 = 1e-3;

/// Absolute tolerance for the `rho` integral.
pub const RHO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Path-loss exponent, > 2.
    pub alpha: f64,
    /// Rate of the exponential fading gain (mean `1 / mu`).
    pub mu: f64,
    /// Receiver noise power.
    pub noise: f64,
    /// SINR threshold.
    pub threshold: f64,
    /// Bandwidth in Hz.
    pub bandwidth: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            alpha: 4.0,
            mu: 1.0,
            noise: 10.0,
            threshold: 0.01,
            bandwidth: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be > 2, got {}", self.alpha)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", format!("must be > 0, got {}", self.mu)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(
                "noise_power",
                format!("must be >= 0, got {}", self.noise),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::invalid(
                "threshold",
                format!("must be > 0, got {}", self.threshold),
            ));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be > 0, got {}", self.bandwidth),
            ));
        }
        Ok(())
    }
}

/// `r^-alpha`, with `r` clamped below at [`R_MIN`].
pub fn path_loss(r: f64, alpha: f64) -> f64 {
    r.max(R_MIN).powf(-alpha)
}

/// `T^(2/α) ∫_{T^(-2/α)}^∞ dz / (1 + z^(α/2))`.
pub fn rho(threshold: f64, alpha: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("threshold", format!("must be > 0, got {threshold}")));
    }
    if !(alpha > 2.0) {
        return Err(Error::invalid("alpha", format!("must be > 2, got {alpha}")));
    }
    let scale = threshold.powf(2.0 / alpha);
    let half = alpha / 2.0;
    // the integral is rescaled by `scale` afterwards
    let tol = 1e-3 * RHO_TOLERANCE / scale.max(1.0);
    let integral = quad::integrate_to_infinity(|z| 1.0 / (1.0 + z.powf(half)), 1.0 / scale, tol)?;
    Ok(scale * integral)
}

/// Closed-form coverage analytics for a given parameter set.
///
/// Holds `rho(T, α)` so repeated evaluations skip the quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageModel {
    params: ChannelParams,
    rho: f64,
}

impl CoverageModel {
    pub fn new(params: ChannelParams) -> Result<Self> {
        params.validate()?;
        Ok(CoverageModel {
            params,
            rho: rho(params.threshold, params.alpha)?,
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn noise_term(&self, r: f64) -> f64 {
        let p = &self.params;
        p.mu * p.threshold * p.noise * r.powf(p.alpha)
    }

    fn interference_term(&self, r: f64, intensity: f64) -> f64 {
        PI * intensity * self.rho * r * r
    }

    /// `P[SINR > T]` at link distance `r` with active interferers of
    /// intensity `intensity` beyond `r`.
    pub fn probability(&self, r: f64, intensity: f64) -> f64 {
        (-self.noise_term(r) - self.interference_term(r, intensity)).exp()
    }

    /// First-order expansion of [`Self::probability`], clamped at 0.
    pub fn linearized(&self, r: f64, intensity: f64) -> f64 {
        (1.0 - self.noise_term(r) - self.interference_term(r, intensity)).max(0.0)
    }
}

pub fn coverage_probability(r: f64, intensity: f64, params: &ChannelParams) -> Result<f64> {
    Ok(CoverageModel::new(*params)?.probability(r, intensity))
}

pub fn linearized_coverage(r: f64, intensity: f64, params: &ChannelParams) -> Result<f64> {
    Ok(CoverageModel::new(*params)?.linearized(r, intensity))
}

/// Mean interference from a PPP of intensity `intensity` whose points are
/// kept outside radius `exclusion`: `2πλ D^(2-α) / (α - 2)`.
pub fn mean_interference(intensity: f64, exclusion: f64, alpha: f64) -> Result<f64> {
    if !(intensity >= 0.0) {
        return Err(Error::invalid("intensity", format!("must be >= 0, got {intensity}")));
    }
    if !(exclusion > 0.0) {
        return Err(Error::invalid(
            "exclusion_radius",
            format!("must be > 0, got {exclusion}"),
        ));
    }
    if !(alpha > 2.0) {
        return Err(Error::invalid("alpha", format!("must be > 2, got {alpha}")));
    }
    Ok(2.0 * PI * intensity * exclusion.powf(2.0 - alpha) / (alpha - 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeRegime {
    NoiseLimited,
    InterferenceLimited,
}

/// Communication radius `R_d2d` under either limiting regime.
///
/// `intensity` and `exclusion` are only read in the interference-limited case.
pub fn comm_range(params: &ChannelParams, regime: RangeRegime, intensity: f64, exclusion: f64) -> Result<f64> {
    let budget = match regime {
        RangeRegime::NoiseLimited => {
            if params.noise <= 0.0 {
                return Err(Error::invalid(
                    "noise_power",
                    "noise-limited range is infinite when noise power is 0",
                ));
            }
            params.noise
        }
        RangeRegime::InterferenceLimited => {
            if !(intensity > 0.0) {
                return Err(Error::invalid(
                    "intensity",
                    "interference-limited range needs intensity > 0",
                ));
            }
            mean_interference(intensity, exclusion, params.alpha)?
        }
    };
    Ok((params.mu * params.threshold * budget).powf(-1.0 / params.alpha))
}

/// Fraction of a PPP retained by Matérn type-II thinning when the mean number
/// of points in an exclusion disc is `mean_neighbors`.
pub fn mhc2_retention(mean_neighbors: f64) -> f64 {
    if mean_neighbors < 1e-8 {
        // series 1 - x/2 + x²/6 avoids cancellation
        1.0 - mean_neighbors / 2.0 + mean_neighbors * mean_neighbors / 6.0
    } else {
        -(-mean_neighbors).exp_m1() / mean_neighbors
    }
}

/// Exclusion radius `D` at which Matérn type-II thinning of a PPP with
/// intensity `lambda_t` retains a fraction `p_a` of the points.
pub fn exclusion_radius_from_map(p_a: f64, lambda_t: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a <= 1.0) {
        return Err(Error::invalid("p_A", format!("must be in (0, 1], got {p_a}")));
    }
    if !(lambda_t > 0.0 && lambda_t.is_finite()) {
        return Err(Error::invalid("lambda_t", format!("must be > 0, got {lambda_t}")));
    }
    if p_a == 1.0 {
        return Ok(0.0);
    }
    // retention is strictly decreasing in the mean neighbour count
    let mut lo = 0.0;
    let mut hi = 1.0;
    while mhc2_retention(hi) > p_a {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if mhc2_retention(mid) > p_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mean_neighbors = 0.5 * (lo + hi);
    Ok((mean_neighbors / (lambda_t * PI)).sqrt())
}

/// Draws an exponential fade with rate `mu`.
#[derive(Debug, Clone, Copy)]
pub struct Fading(Exp<f64>);

impl Fading {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid("mu", format!("must be > 0, got {mu}")));
        }
        Exp::new(mu)
            .map(Fading)
            .map_err(|e| Error::invalid("mu", e.to_string()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.0.sample(rng)
    }
}

/// SINR with fresh iid fades on the serving link and every interfering link.
pub fn sample_sinr<R: Rng + ?Sized>(
    serving_distance: f64,
    interferer_distances: impl IntoIterator<Item = f64>,
    params: &ChannelParams,
    fading: &Fading,
    rng: &mut R,
) -> f64 {
    let signal = fading.sample(rng) * path_loss(serving_distance, params.alpha);
    let interference: f64 = interferer_distances
        .into_iter()
        .map(|d| fading.sample(rng) * path_loss(d, params.alpha))
        .sum();
    signal / (params.noise + interference)
}

/// Realized SINR at `receiver` served by transmitter `serving`, with every
/// other retained transmitter interfering.
pub fn realized_sinr<R: Rng + ?Sized>(
    receiver: Point,
    serving: usize,
    transmitters: &PointSet,
    retained: &RetainedSet,
    params: &ChannelParams,
    fading: &Fading,
    rng: &mut R,
) -> f64 {
    let window = transmitters.window();
    let serving_distance = window.distance(receiver, transmitters.get(serving));
    let interferers = retained
        .indices()
        .filter(|&z| z != serving)
        .map(|z| window.distance(receiver, transmitters.get(z)));
    sample_sinr(serving_distance, interferers, params, fading, rng)
}
