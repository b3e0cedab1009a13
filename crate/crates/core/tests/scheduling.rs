mod common;

use common::{brute_distance, brute_thin, uniform_points};
use d2d_csma::bidding::{BidTable, ScoringMode};
use d2d_csma::geometry::{sample_ppp, BoundaryMode, PointSet, Window};
use d2d_csma::scheduling::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window(torus: bool, half: f64) -> Window {
    let mode = if torus {
        BoundaryMode::Torus
    } else {
        BoundaryMode::Plain
    };
    Window::centered_square(half, mode).unwrap()
}

/// Bids with frequent exact ties so the tiebreak gets exercised.
fn tied_bids<R: Rng>(n: usize, rng: &mut R) -> BidTable {
    BidTable::from_values(
        (0..n).map(|_| rng.random_range(0..4) as f64 * 0.5).collect(),
        ScoringMode::Exact,
    )
    .unwrap()
}

fn assert_hard_core(points: &PointSet, retained: &RetainedSet, d: f64) {
    let kept: Vec<usize> = retained.indices().collect();
    for (a, &x) in kept.iter().enumerate() {
        for &y in &kept[a + 1..] {
            let r = brute_distance(points.window(), points.get(x), points.get(y));
            assert!(r > d, "retained {x} and {y} at distance {r} <= {d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn thinning_matches_brute_force(seed in any::<u64>(), n in 0usize..=10, d in 0.0f64..3.0, torus in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = window(torus, 2.0);
        let pts = PointSet::new(w, uniform_points(n, &w, &mut rng)).unwrap();
        let marks = MarkAssignment::sample(n, &mut rng);
        let bids = tied_bids(n, &mut rng);
        let matern = brute_thin(&pts, d, |x, y| marks.get(x) < marks.get(y));
        prop_assert_eq!(thin_matern(&pts, &marks, d).flags().to_vec(), matern);
        let bidding = brute_thin(&pts, d, |x, y| {
            bids.get(x) > bids.get(y) || (bids.get(x) == bids.get(y) && marks.get(x) > marks.get(y))
        });
        prop_assert_eq!(thin_bidding_matern(&pts, &bids, &marks, d).flags().to_vec(), bidding);
    }

    #[test]
    fn bid_ordering_keeps_exact_quota(seed in any::<u64>(), n in 0usize..60, p_a in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bids = tied_bids(n, &mut rng);
        let marks = MarkAssignment::sample(n, &mut rng);
        let r = thin_bid_ordering(&bids, p_a, &marks);
        let quota = (p_a * n as f64 + 1e-9).floor() as usize;
        prop_assert_eq!(r.count(), quota.min(n));
        // nobody dropped outranks anybody kept
        for x in r.indices() {
            for y in (0..n).filter(|&y| !r.contains(y)) {
                prop_assert!((bids.get(x), marks.get(x)) > (bids.get(y), marks.get(y)));
            }
        }
    }

    #[test]
    fn policies_ignore_transmitter_order(seed in any::<u64>(), torus in any::<bool>(), p_a in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = window(torus, 3.0);
        let n = rng.random_range(0..80);
        let pts = PointSet::new(w, uniform_points(n, &w, &mut rng)).unwrap();
        let marks = MarkAssignment::sample(n, &mut rng);
        let bids = tied_bids(n, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let pts2 = PointSet::new(w, perm.iter().map(|&i| pts.get(i)).collect()).unwrap();
        let marks2 = MarkAssignment::from_values(perm.iter().map(|&i| marks.get(i)).collect()).unwrap();
        let bids2 = BidTable::from_values(perm.iter().map(|&i| bids.get(i)).collect(), ScoringMode::Exact).unwrap();
        let d = 0.6;
        let pairs = [
            (thin_random(&marks, p_a), thin_random(&marks2, p_a)),
            (thin_matern(&pts, &marks, d), thin_matern(&pts2, &marks2, d)),
            (thin_bidding_matern(&pts, &bids, &marks, d), thin_bidding_matern(&pts2, &bids2, &marks2, d)),
            (thin_bid_ordering(&bids, p_a, &marks), thin_bid_ordering(&bids2, p_a, &marks2)),
        ];
        for (a, b) in pairs {
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(b.contains(k), a.contains(i));
            }
        }
    }
}

#[test]
fn retained_points_are_hard_core() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for torus in [false, true] {
        let w = window(torus, 5.0);
        for d in [0.2, 0.5, 0.9] {
            for _ in 0..100 {
                let pts = sample_ppp(3.0, w, &mut rng).unwrap();
                let marks = MarkAssignment::sample(pts.len(), &mut rng);
                let bids = tied_bids(pts.len(), &mut rng);
                assert_hard_core(&pts, &thin_matern(&pts, &marks, d), d);
                assert_hard_core(&pts, &thin_bidding_matern(&pts, &bids, &marks, d), d);
            }
        }
    }
}

#[test]
fn random_policy_retains_map_fraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 50_000;
    let frac = thin_random(&MarkAssignment::sample(n, &mut rng), 0.3).count() as f64 / n as f64;
    assert!((frac - 0.3).abs() < 0.01, "{frac}");
}

#[test]
fn retained_set_is_subset_of_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let w = window(false, 2.0);
    let pts = sample_ppp(3.0, w, &mut rng).unwrap();
    let marks = MarkAssignment::sample(pts.len(), &mut rng);
    let r = thin_matern(&pts, &marks, 0.4);
    assert_eq!(r.len(), pts.len());
    assert!(r.indices().all(|i| i < pts.len()));
    assert_eq!(r.policy(), Policy::Matern);
}

#[test]
fn unknown_policy_name_rejected() {
    let err = "aloha".parse::<Policy>().unwrap_err().to_string();
    assert!(err.contains("policy"), "{err}");
}
