mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rankmed_core::compensation::{apply_zscore, class_balanced_stats, plain_stats};
use rankmed_core::ingest::LabelVector;
use rankmed_core::matrix::FeatureMatrix;
use rankmed_core::relevance::{rank_features, score_relevance, solve_l21, SolverConfig};

fn random_labeled(rng: &mut rand_chacha::ChaCha8Rng) -> (FeatureMatrix<f64>, LabelVector) {
    let c = rng.gen_range(2..=3);
    let counts: Vec<usize> = (0..c).map(|_| rng.gen_range(2..=7)).collect();
    let labels = labels_with_counts(rng, &counts);
    let m = rng.gen_range(1..=4);
    (random_features(rng, m, labels.n()), labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balanced_statistics_are_plain(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let c = rng.gen_range(1..=4);
        let per = rng.gen_range(2..=6);
        let labels = labels_with_counts(&mut rng, &vec![per; c]);
        let f = random_features(&mut rng, 3, labels.n());
        let a = class_balanced_stats(&f, &labels).unwrap();
        let b = plain_stats(&f).unwrap();
        for j in 0..3 {
            prop_assert!((a.mu[j] - b.mu[j]).abs() <= 1e-14);
            prop_assert!((a.sigma[j] - b.sigma[j]).abs() <= 1e-14);
        }
        prop_assert!(a.scale.iter().all(|&s| (s - 1.0).abs() <= 1e-15));
    }

    #[test]
    fn compensated_zscores_are_balanced(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (f, labels) = random_labeled(&mut rng);
        let stats = class_balanced_stats(&f, &labels).unwrap();
        let z = apply_zscore(&f, &stats).unwrap();
        let again = class_balanced_stats(&z, &labels).unwrap();
        for j in 0..f.m() {
            prop_assert!(again.mu[j].abs() <= 1e-12);
            prop_assert!((again.sigma[j] - 1.0).abs() <= 1e-12);
        }
        // each class carries total scale n / c
        let target = labels.n() as f64 / labels.c() as f64;
        for l in 0..labels.c() {
            let total: f64 = (0..labels.n()).filter(|&i| labels.code(i) == l).map(|i| stats.scale[i]).sum();
            prop_assert!((total - target).abs() <= 1e-12 * target);
        }
    }

    #[test]
    fn statistics_ignore_instance_order(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (f, labels) = random_labeled(&mut rng);
        let mut perm: Vec<usize> = (0..labels.n()).collect();
        perm.shuffle(&mut rng);
        let labels2 = labels.select(&perm).unwrap();
        let f2 = f.select_columns(&perm).unwrap();
        let a = class_balanced_stats(&f, &labels).unwrap();
        let b = class_balanced_stats(&f2, &labels2).unwrap();
        for j in 0..f.m() {
            prop_assert!((a.mu[j] - b.mu[j]).abs() <= 1e-13);
            prop_assert!((a.sigma[j] - b.sigma[j]).abs() <= 1e-13);
        }
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(a.scale[i], b.scale[k]);
        }
    }

    #[test]
    fn trace_is_monotone(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (x, y, gamma) = random_problem(&mut rng, 0);
        let (_, report) = solve_l21(x.view(), y.view(), &SolverConfig::with_gamma(gamma)).unwrap();
        prop_assert!(report.objective_trace.len() == report.iterations + 1 + usize::from(report.polished));
        for w in report.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn penalty_shrinks_as_gamma_grows(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (x, y, gamma) = random_problem(&mut rng, 1);
        let penalty = |g: f64| {
            let (w, _) = solve_l21(x.view(), y.view(), &SolverConfig::with_gamma(g)).unwrap();
            w.w_hat().rows().into_iter().map(|r| r.dot(&r).sqrt()).sum::<f64>()
        };
        let (lo, hi) = (penalty(gamma), penalty(2.0 * gamma));
        prop_assert!(hi <= lo + 1e-6 * lo.max(1.0), "{} > {}", hi, lo);
    }

    #[test]
    fn weights_follow_feature_permutation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (f, labels) = random_labeled(&mut rng);
        let mut perm: Vec<usize> = (0..f.m()).collect();
        perm.shuffle(&mut rng);
        let config = SolverConfig::default();
        let a = score_relevance(&f, &labels, &config, true).unwrap();
        let b = score_relevance(&f.select_rows(&perm).unwrap(), &labels, &config, true).unwrap();
        let (wa, wb) = (a.weights.w_hat(), b.weights.w_hat());
        for (k, &j) in perm.iter().enumerate() {
            for l in 0..labels.c() {
                prop_assert!((wa[[j, l]] - wb[[k, l]]).abs() <= 1e-6);
            }
        }
        let bias = f.m();
        for l in 0..labels.c() {
            prop_assert!((wa[[bias, l]] - wb[[bias, l]]).abs() <= 1e-6);
        }
    }
}

#[test]
fn planted_discriminative_feature_ranks_first() {
    let mut rng = rng(11);
    for _ in 0..10 {
        let (f, labels, disc) = planted_redundancy_dataset(&mut rng);
        // drop the scaled copy so the planted feature stands alone
        let copy = (0..f.m())
            .find(|&j| j != disc && (0..f.n()).all(|i| (f.row(j)[i] - 3.0 * f.row(disc)[i]).abs() < 1e-9))
            .unwrap();
        let keep: Vec<usize> = (0..f.m()).filter(|&j| j != copy).collect();
        let sub = f.select_rows(&keep).unwrap();
        let result = score_relevance(&sub, &labels, &SolverConfig::default(), true).unwrap();
        let order = rank_features(&result.weights.total());
        assert_eq!(keep[order[0].0], disc);
    }
}

/// Three large classes, two of them marked by their own feature, and a small
/// class marked by the last feature. Compensation should lift the last one.
#[test]
fn compensation_lifts_minority_feature() {
    let mut rng = rng(12);
    let labels = labels_with_counts(&mut rng, &[40, 40, 40, 4]);
    let marker = |class: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        labels.codes().iter().map(|&l| f64::from(u8::from(l == class)) + rng.gen_range(-0.1..0.1)).collect()
    };
    let rows = vec![
        marker(0, &mut rng),
        marker(1, &mut rng),
        (0..labels.n()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        marker(3, &mut rng),
    ];
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    for gamma in [0.5, 1.0, 4.0, 16.0] {
        let config = SolverConfig::with_gamma(gamma);
        let on = score_relevance(&f, &labels, &config, true).unwrap().weights.total();
        let off = score_relevance(&f, &labels, &config, false).unwrap().weights.total();
        let share = |t: &[f64]| t[3] / t.iter().copied().fold(0.0, f64::max);
        // a two-fold gain in share against the strongest majority marker
        assert!(share(&on) > 2.0 * share(&off), "gamma {gamma}: on {on:?} off {off:?}");
    }
}

#[test]
fn single_precision_solve() {
    let labels = LabelVector::from_plain_codes(vec![0, 0, 1, 1, 0, 1]).unwrap();
    let f = rankmed_core::FeatureMatrix32::from_rows(&[
        vec![0.1, -0.2, 1.0, 1.2, 0.0, 0.9],
        vec![0.5, 0.1, -0.3, 0.2, -0.4, 0.3],
    ])
    .unwrap();
    let r = score_relevance(&f, &labels, &rankmed_core::SolverConfig32::default(), true).unwrap();
    let total = r.weights.total();
    assert!(total[0] > total[1]);
}
