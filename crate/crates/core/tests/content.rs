mod common;

use common::{chi_square, chi_square_critical_01};
use d2d_csma::content::{sample_cache, sample_caches, zipf_pmf, ZipfPmf};
use d2d_csma::geometry::{BoundaryMode, Point, PointSet, Window};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Inclusion probability of every file after `left` more draws without
/// replacement, by recursion over the ordered draw sequence.
fn exact_inclusion(p: &[f64], taken: &mut Vec<bool>, weight: f64, left: usize, out: &mut [f64]) {
    if left == 0 {
        for (k, &t) in taken.iter().enumerate() {
            if t {
                out[k] += weight;
            }
        }
        return;
    }
    let mass: f64 = p.iter().zip(taken.iter()).filter(|(_, &t)| !t).map(|(q, _)| q).sum();
    for k in 0..p.len() {
        if !taken[k] {
            taken[k] = true;
            exact_inclusion(p, taken, weight * p[k] / mass, left - 1, out);
            taken[k] = false;
        }
    }
}

fn inclusion_frequencies(pmf: &ZipfPmf, n: usize, draws: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let caches = sample_caches(pmf, n, draws, &mut rng).unwrap();
    let mut hits = vec![0.0; pmf.catalog_size()];
    for c in &caches {
        for &f in c.files() {
            hits[f as usize - 1] += 1.0;
        }
    }
    hits.iter().map(|h| h / draws as f64).collect()
}

#[test]
fn pmf_is_normalized() {
    for gamma in [0.0, 0.1, 0.5, 1.0, 2.5, 5.0] {
        for m in [1, 2, 10, 100, 1000] {
            let s: f64 = zipf_pmf(gamma, m).unwrap().probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "γ={gamma}, M={m}: {s}");
        }
    }
}

#[test]
fn pmf_is_non_increasing() {
    let p = zipf_pmf(0.7, 50).unwrap();
    assert!(p.probs().windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn uniform_placement_inclusion() {
    let pmf = zipf_pmf(0.0, 100).unwrap();
    for (k, f) in inclusion_frequencies(&pmf, 10, 50_000, 1).iter().enumerate() {
        assert!((f - 0.1).abs() < 0.01, "file {}: {f}", k + 1);
    }
}

#[test]
fn skewed_placement_keeps_the_head() {
    let pmf = zipf_pmf(2.5, 100).unwrap();
    let f = inclusion_frequencies(&pmf, 10, 20_000, 2);
    assert!(f[0] > 0.99, "file 1 in {:.4} of caches", f[0]);
}

#[test]
fn placement_matches_exact_recursion() {
    for (gamma, m, n) in [(1.2, 6, 3), (0.0, 8, 2), (2.5, 12, 2), (0.5, 5, 4)] {
        let pmf = zipf_pmf(gamma, m).unwrap();
        let mut exact = vec![0.0; m];
        exact_inclusion(pmf.probs(), &mut vec![false; m], 1.0, n, &mut exact);
        assert!((exact.iter().sum::<f64>() - n as f64).abs() < 1e-12);
        let draws = 200_000;
        let got = inclusion_frequencies(&pmf, n, draws, 3);
        for k in 0..m {
            let se = (exact[k] * (1.0 - exact[k]) / draws as f64).sqrt();
            assert!(
                (got[k] - exact[k]).abs() <= 5.0 * se + 1e-12,
                "γ={gamma} M={m} N={n} file {}: {} vs {}",
                k + 1,
                got[k],
                exact[k]
            );
        }
    }
}

#[test]
fn caches_never_repeat_a_file() {
    let pmf = zipf_pmf(5.0, 20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100_000 {
        let c = sample_cache(&pmf, 19, &mut rng).unwrap();
        let mut f = c.files().to_vec();
        f.sort_unstable();
        f.dedup();
        assert_eq!(f.len(), 19);
        assert!(f.iter().all(|&x| (1..=20).contains(&x)));
    }
}

#[test]
fn requests_follow_the_pmf() {
    let pmf = zipf_pmf(0.8, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut observed = vec![0.0; 10];
    for _ in 0..n {
        observed[pmf.sample(&mut rng) as usize - 1] += 1.0;
    }
    let expected: Vec<f64> = pmf.probs().iter().map(|p| p * n as f64).collect();
    let stat = chi_square(&observed, &expected);
    assert!(stat < chi_square_critical_01(9), "χ² = {stat}");
}

#[test]
fn steep_requests_concentrate_on_file_one() {
    let pmf = zipf_pmf(5.0, 100).unwrap();
    let w = Window::centered_square(5.0, BoundaryMode::Plain).unwrap();
    let rx = PointSet::new(w, vec![Point::new(0.0, 0.0); 100_000]).unwrap();
    let req = d2d_csma::content::sample_requests(&pmf, &rx, &mut ChaCha8Rng::seed_from_u64(6));
    let share = req.iter().filter(|&&c| c == 1).count() as f64 / req.len() as f64;
    assert!((share - 0.9644).abs() < 0.005, "{share}");
}

#[test]
fn catalog_bounds_rejected() {
    let pmf = zipf_pmf(1.0, 100).unwrap();
    let err = sample_cache(&pmf, 100, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
    assert!(err.to_string().contains("N_cache must be < M"), "{err}");
}

proptest! {
    #[test]
    fn smaller_caches_are_prefixes(seed in any::<u64>(), gamma in 0.0f64..4.0, n in 1usize..30) {
        let pmf = zipf_pmf(gamma, 40).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ChaCha8Rng::seed_from_u64(seed);
        let small = sample_caches(&pmf, n, 20, &mut a).unwrap();
        let large = sample_caches(&pmf, n + 1, 20, &mut b).unwrap();
        for (s, l) in small.iter().zip(&large) {
            prop_assert_eq!(s.files(), &l.files()[..n]);
        }
    }
}
