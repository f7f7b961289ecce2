mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rankmed_core::exact::integer_rank;
use rankmed_core::matrix::FeatureMatrix;
use rankmed_core::rank::{eigen_spectrum, numerical_rank, RankTracker, Verdict};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn svd_and_tracker_match_exact_rank(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (rows, _) = random_planted(&mut rng, true);
        let exact = integer_rank(&rows);
        let f = to_matrix(&rows);
        prop_assert_eq!(numerical_rank(f.values(), 0.0).unwrap(), exact);
        let mut t = RankTracker::new(f.n(), 0.0).unwrap();
        for row in to_f64(&rows) {
            t.try_extend(&row).unwrap();
        }
        prop_assert_eq!(t.rank(), exact);
    }

    #[test]
    fn tracker_rank_ignores_row_order(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (rows, _) = random_planted(&mut rng, true);
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        let rank_of = |rows: &[Vec<i64>]| {
            let mut t = RankTracker::new(rows[0].len(), 0.0).unwrap();
            for row in to_f64(rows) {
                t.try_extend(&row).unwrap();
            }
            t.rank()
        };
        prop_assert_eq!(rank_of(&rows), rank_of(&shuffled));
    }

    #[test]
    fn dependent_rows_leave_tracker_unchanged(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (rows, _) = random_planted(&mut rng, true);
        let mut t = RankTracker::new(rows[0].len(), 0.0).unwrap();
        for row in to_f64(&rows) {
            let before = t.clone();
            let probe = t.test(&row).unwrap();
            prop_assert_eq!(&t, &before);
            let verdict = t.try_extend(&row).unwrap();
            prop_assert_eq!(verdict, probe);
            if verdict == Verdict::Dependent {
                prop_assert_eq!(&t, &before);
            } else {
                prop_assert_eq!(t.rank(), before.rank() + 1);
            }
        }
    }

    #[test]
    fn spectrum_invariant_under_instance_permutation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (rows, _) = random_planted(&mut rng, false);
        let f = to_matrix(&rows);
        let mut cols: Vec<usize> = (0..f.n()).collect();
        cols.shuffle(&mut rng);
        let a = eigen_spectrum(&f, 0.0).unwrap();
        let b = eigen_spectrum(&f.select_columns(&cols).unwrap(), 0.0).unwrap();
        let top = a.eigenvalues[0];
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-12 * top);
        }
        prop_assert_eq!(a.effective_rank, b.effective_rank);
    }

    #[test]
    fn effective_rank_agrees_with_numerical_rank(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (rows, _) = random_planted(&mut rng, false);
        let f = to_matrix(&rows);
        let s = eigen_spectrum(&f, 0.0).unwrap();
        prop_assert_eq!(s.effective_rank, numerical_rank(f.values(), 0.0).unwrap());
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.eigenvalues.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn single_precision_rank() {
    let f = FeatureMatrix::<f32>::from_rows(&[
        vec![1.0, 2.0, 3.0],
        vec![2.0, 4.0, 6.0],
        vec![0.0, 1.0, -1.0],
    ])
    .unwrap();
    assert_eq!(numerical_rank(f.values(), 0.0).unwrap(), 2);
    let mut t = rankmed_core::RankTracker32::new(3, 0.0).unwrap();
    for j in 0..3 {
        t.try_extend(&f.row(j).to_vec()).unwrap();
    }
    assert_eq!(t.rank(), 2);
}
