mod common;

use common::{central_diff, random_point, random_similarity, relative_error};
use hyphc::geometry::{lca_depth, DiskPoint};
use hyphc::loss::{
    hyphc_loss, hyphc_loss_grad, sample_triplets, scaled_softmax, Embedding, Temperature,
    TripletBatch, TripletStrategy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_embedding(n: usize, max_r: f64, rng: &mut ChaCha8Rng) -> Embedding<f64> {
    Embedding::from_points((0..n).map(|_| random_point(rng, max_r)).collect()).unwrap()
}

/// Embedding whose pairwise LCAs all fall strictly inside their geodesics,
/// where the loss is smooth.
fn regular_embedding(n: usize, rng: &mut ChaCha8Rng) -> Embedding<f64> {
    loop {
        let pts: Vec<DiskPoint<f64>> = (0..n)
            .map(|_| {
                DiskPoint::from_polar(
                    rng.gen_range(0.4..0.9),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
                .unwrap()
            })
            .collect();
        let regular = (0..n).all(|i| {
            (i + 1..n).all(|j| {
                let r = lca_depth(&pts[i], &pts[j]);
                r.is_regular() && r.alpha > 1e-3 && r.alpha < angle_between(&pts[i], &pts[j]) - 1e-3
            })
        });
        if regular {
            return Embedding::from_points(pts).unwrap();
        }
    }
}

fn angle_between(x: &DiskPoint<f64>, y: &DiskPoint<f64>) -> f64 {
    let [a, b] = x.coords();
    let [c, d] = y.coords();
    (a * d - b * c).abs().atan2(a * c + b * d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn softmax_is_a_distribution(a in prop::array::uniform3(-50.0..50.0f64), tau in 0.01..2.0f64) {
        let s = scaled_softmax(a, Temperature::new(tau).unwrap());
        prop_assert!(s.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariant(a in prop::array::uniform3(-5.0..5.0f64), c in -100.0..100.0f64, tau in 0.05..2.0f64) {
        let tau = Temperature::new(tau).unwrap();
        let s = scaled_softmax(a, tau);
        let t = scaled_softmax(a.map(|v| v + c), tau);
        for m in 0..3 {
            prop_assert!((s[m] - t[m]).abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_matches_naive(a in prop::array::uniform3(-3.0..3.0f64), tau in 0.2..2.0f64) {
        let e = a.map(|v| (v / tau).exp());
        let total: f64 = e.iter().sum();
        let s = scaled_softmax(a, Temperature::new(tau).unwrap());
        for m in 0..3 {
            prop_assert!((s[m] - e[m] / total).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_rotation_invariant(seed in any::<u64>(), angle in 0.0..std::f64::consts::TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..10);
        let w = random_similarity(n, &mut rng);
        let z = random_embedding(n, 0.95, &mut rng);
        let rotated = Embedding::from_points(z.points().iter().map(|p| p.rotated(angle)).collect()).unwrap();
        let all = sample_triplets(n, TripletStrategy::All).unwrap();
        let tau = Temperature::new(0.1).unwrap();
        let a = hyphc_loss(&z, &w, &all, tau, true).unwrap();
        let b = hyphc_loss(&rotated, &w, &all, tau, true).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn loss_bounded_by_weights(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..10);
        let w = random_similarity(n, &mut rng);
        let z = random_embedding(n, 0.95, &mut rng);
        let all = sample_triplets(n, TripletStrategy::All).unwrap();
        let tau = Temperature::new(0.1).unwrap();
        let value = hyphc_loss(&z, &w, &all, tau, false).unwrap();
        let upper: f64 = all.triplets().iter().map(|&[i, j, k]| w.get(i, j) + w.get(i, k) + w.get(j, k)).sum();
        let lower: f64 = all
            .triplets()
            .iter()
            .map(|&[i, j, k]| {
                let ws = [w.get(i, j), w.get(i, k), w.get(j, k)];
                ws.iter().sum::<f64>() - ws.iter().cloned().fold(f64::MIN, f64::max)
            })
            .sum();
        prop_assert!(value >= lower - 1e-9 && value <= upper + 1e-9);
    }
}

#[test]
fn triplet_orientation_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = random_similarity(6, &mut rng);
    let z = random_embedding(6, 0.9, &mut rng);
    let tau = Temperature::new(0.2).unwrap();
    let value = |t: [usize; 3]| {
        hyphc_loss(&z, &w, &TripletBatch::new(6, vec![t]).unwrap(), tau, false).unwrap()
    };
    let base = value([1, 3, 5]);
    for t in [[1, 5, 3], [3, 5, 1]] {
        assert!((value(t) - base).abs() < 1e-12);
    }
}

/// Averaging the quadratic-sampling loss over the third leaf gives
/// `3 / (n - 2)` times the full triplet loss.
#[test]
fn quadratic_sampling_expectation_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [4, 7, 12] {
        let w = random_similarity(n, &mut rng);
        let z = random_embedding(n, 0.9, &mut rng);
        let tau = Temperature::new(0.1).unwrap();
        let all = hyphc_loss(
            &z,
            &w,
            &sample_triplets(n, TripletStrategy::All).unwrap(),
            tau,
            false,
        )
        .unwrap();
        let mut mean = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let ks: Vec<[usize; 3]> = (0..n)
                    .filter(|&k| k != i && k != j)
                    .map(|k| [i, j, k])
                    .collect();
                let batch = TripletBatch::new(n, ks).unwrap();
                mean += hyphc_loss(&z, &w, &batch, tau, false).unwrap() / (n - 2) as f64;
            }
        }
        let expected = 3.0 / (n - 2) as f64 * all;
        assert!(
            (mean - expected).abs() < 1e-10 * expected,
            "n={n}: {mean} vs {expected}"
        );
    }
}

#[test]
fn quadratic_sampling_expectation_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 10;
    let w = random_similarity(n, &mut rng);
    let z = random_embedding(n, 0.9, &mut rng);
    let tau = Temperature::new(0.1).unwrap();
    let all = hyphc_loss(
        &z,
        &w,
        &sample_triplets(n, TripletStrategy::All).unwrap(),
        tau,
        false,
    )
    .unwrap();
    let draws: Vec<f64> = (0..2000)
        .map(|seed| {
            let batch = sample_triplets(n, TripletStrategy::Quadratic { seed }).unwrap();
            assert_eq!(batch.len(), n * (n - 1) / 2);
            hyphc_loss(&z, &w, &batch, tau, false).unwrap() * (n - 2) as f64 / 3.0
        })
        .collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    let se = (var / draws.len() as f64).sqrt();
    assert!((m - all).abs() < 3.0 * se, "{m} vs {all} (se {se})");
}

#[test]
fn fixed_count_triplets_are_valid() {
    let b = sample_triplets(9, TripletStrategy::FixedCount { m: 500, seed: 1 }).unwrap();
    assert_eq!(b.len(), 500);
    assert!(b
        .triplets()
        .iter()
        .all(|&[i, j, k]| i < j && k != i && k != j && k < 9));
    assert_eq!(
        b,
        sample_triplets(9, TripletStrategy::FixedCount { m: 500, seed: 1 }).unwrap()
    );
    assert!(sample_triplets(2, TripletStrategy::All).is_err());
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..200 {
        let n = rng.gen_range(3..8);
        let w = random_similarity(n, &mut rng);
        let z = regular_embedding(n, &mut rng);
        let tau = Temperature::new([0.5, 0.2, 0.1][trial % 3]).unwrap();
        let batch = sample_triplets(n, TripletStrategy::All).unwrap();
        let (value, grad) = hyphc_loss_grad(&z, &w, &batch, tau).unwrap();
        assert!(
            (value - hyphc_loss(&z, &w, &batch, tau, false).unwrap()).abs()
                < 1e-10 * value.abs().max(1.0)
        );
        let flat: Vec<f64> = z.coords().into_iter().flatten().collect();
        let numeric = central_diff(&flat, 1e-6, |x| {
            let pts = x
                .chunks(2)
                .map(|c| DiskPoint::new(c[0], c[1]).unwrap())
                .collect();
            hyphc_loss(
                &Embedding::from_points(pts).unwrap(),
                &w,
                &batch,
                tau,
                false,
            )
            .unwrap()
        });
        let analytic: Vec<f64> = grad.into_iter().flatten().collect();
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "trial {trial}: relative error {err}");
    }
}

#[test]
fn size_mismatch_rejected() {
    let w = random_similarity(4, &mut ChaCha8Rng::seed_from_u64(0));
    let z = random_embedding(5, 0.5, &mut ChaCha8Rng::seed_from_u64(0));
    let batch = sample_triplets(5, TripletStrategy::All).unwrap();
    let tau = Temperature::new(0.1).unwrap();
    assert!(hyphc_loss(&z, &w, &batch, tau, false).is_err());
    assert!(Temperature::new(0.0).is_err());
    assert!(TripletBatch::new(4, vec![[2, 1, 0]]).is_err());
}
