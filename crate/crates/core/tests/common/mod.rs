//! Brute-force oracles and small statistics helpers shared by the
//! integration tests. Nothing here calls into the library's own neighbour
//! search or coverage code.

#![allow(dead_code)]

use std::f64::consts::PI;

use d2d_csma::content::{CacheConfig, FileId};
use d2d_csma::evaluation::Realization;
use d2d_csma::geometry::{BoundaryMode, Point, PointSet, Window};
use rand::seq::index::sample;
use rand::Rng;

/// Minimum-image distance computed from scratch.
pub fn brute_distance(w: &Window, a: Point, b: Point) -> f64 {
    let mut dx = (a.x - b.x).abs();
    let mut dy = (a.y - b.y).abs();
    if w.mode() == BoundaryMode::Torus {
        dx = dx.min(w.width() - dx);
        dy = dy.min(w.height() - dy);
    }
    (dx * dx + dy * dy).sqrt()
}

pub fn uniform_points<R: Rng>(n: usize, w: &Window, rng: &mut R) -> Vec<Point> {
    (0..n)
        .map(|_| {
            Point::new(
                w.x_min() + rng.random::<f64>() * w.width(),
                w.y_min() + rng.random::<f64>() * w.height(),
            )
        })
        .collect()
}

/// A small random realization: up to `max_tx` transmitters with caches of
/// `cache_size` distinct files out of `catalog`, up to `max_rx` receivers.
pub fn small_realization<R: Rng>(
    rng: &mut R,
    w: Window,
    max_tx: usize,
    max_rx: usize,
    catalog: usize,
    cache_size: usize,
) -> Realization {
    let n_tx = rng.random_range(0..=max_tx);
    let n_rx = rng.random_range(0..=max_rx);
    let tx = uniform_points(n_tx, &w, rng);
    let rx = uniform_points(n_rx, &w, rng);
    let caches = (0..n_tx)
        .map(|_| {
            let files: Vec<FileId> = sample(rng, catalog, cache_size)
                .into_iter()
                .map(|k| k as FileId + 1)
                .collect();
            CacheConfig::new(files).unwrap()
        })
        .collect();
    let requests = (0..n_rx).map(|_| rng.random_range(1..=catalog as FileId)).collect();
    Realization::new(
        PointSet::new(w, tx).unwrap(),
        caches,
        PointSet::new(w, rx).unwrap(),
        requests,
    )
    .unwrap()
}

/// `ρ(T, 4) = √T·atan(√T)`.
pub fn rho_alpha4(t: f64) -> f64 {
    t.sqrt() * t.sqrt().atan()
}

/// Bid of every transmitter straight from the defining sum, for α = 4.
pub fn brute_bids(
    real: &Realization,
    r_d2d: f64,
    active: f64,
    mu: f64,
    t: f64,
    noise: f64,
    linearized: bool,
) -> Vec<f64> {
    let w = *real.window();
    let rho = rho_alpha4(t);
    (0..real.transmitters.len())
        .map(|x| {
            let xp = real.transmitters.get(x);
            let bidders: Vec<(f64, FileId)> = (0..real.receivers.len())
                .filter_map(|u| {
                    let d = brute_distance(&w, xp, real.receivers.get(u));
                    let c = real.requests[u];
                    (d <= r_d2d && real.caches[x].contains(c)).then_some((d, c))
                })
                .collect();
            let n = bidders.len() as f64;
            let mut terms: Vec<(f64, FileId)> = bidders.clone();
            terms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            terms
                .iter()
                .map(|&(d, c)| {
                    let share = bidders.iter().filter(|b| b.1 == c).count() as f64 / n;
                    let e = mu * t * noise * d.powi(4) + PI * active * rho * d * d;
                    let cov = if linearized { (1.0 - e).max(0.0) } else { (-e).exp() };
                    share * cov
                })
                .sum()
        })
        .collect()
}

/// Keeps `x` iff `beats(x, y)` for every other `y` within `d`, by checking
/// all pairs.
pub fn brute_thin(points: &PointSet, d: f64, beats: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let w = points.window();
    (0..points.len())
        .map(|x| {
            (0..points.len())
                .filter(|&y| y != x && brute_distance(w, points.get(x), points.get(y)) <= d)
                .all(|y| beats(x, y))
        })
        .collect()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level 0.01.
pub fn ks_critical_01(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Pearson χ² statistic; expected counts must be positive.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum()
}

/// Upper 1% point of χ² with `dof` degrees of freedom.
pub fn chi_square_critical_01(dof: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99)
}

pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Conditional Monte Carlo coverage: receiver at the origin, serving
/// transmitter at distance `r`, PPP interferers of intensity `lambda` on the
/// annulus `r < |z| < outer`, iid exponential fades of rate `mu`.
#[allow(clippy::too_many_arguments)]
pub fn coverage_mc<R: Rng>(
    r: f64,
    lambda: f64,
    t: f64,
    alpha: f64,
    noise: f64,
    mu: f64,
    outer: f64,
    trials: usize,
    rng: &mut R,
) -> f64 {
    use rand_distr::{Distribution, Exp, Poisson};
    let fade = Exp::new(mu).unwrap();
    let mean = lambda * PI * (outer * outer - r * r);
    let count = (mean > 0.0).then(|| Poisson::new(mean).unwrap());
    let mut covered = 0usize;
    for _ in 0..trials {
        let signal = fade.sample(rng) * r.powf(-alpha);
        let k = count.as_ref().map_or(0, |p| p.sample(rng) as usize);
        let interference: f64 = (0..k)
            .map(|_| {
                let d2 = r * r + rng.random::<f64>() * (outer * outer - r * r);
                fade.sample(rng) * d2.powf(-alpha / 2.0)
            })
            .sum();
        if signal >= t * (noise + interference) {
            covered += 1;
        }
    }
    covered as f64 / trials as f64
}
