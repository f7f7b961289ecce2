#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rankmed_core::exact::integer_rank;
use rankmed_core::ingest::LabelVector;
use rankmed_core::matrix::FeatureMatrix;
use rankmed_core::relevance::objective;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer matrix with entries in -9..=9 whose rows span exactly `rank`
/// dimensions. Dependent rows are small integer combinations of the basis
/// rows; combinations leaving the entry range are redrawn, falling back to a
/// signed copy of one basis row.
pub fn planted_integer_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, rank: usize) -> Vec<Vec<i64>> {
    assert!(rank <= m.min(n));
    let basis = loop {
        let rows: Vec<Vec<i64>> = (0..rank)
            .map(|_| (0..n).map(|_| rng.gen_range(-9..=9)).collect())
            .collect();
        if integer_rank(&rows) == rank {
            break rows;
        }
    };
    let mut rows = basis.clone();
    for _ in rank..m {
        if rank == 0 {
            rows.push(vec![0; n]);
            continue;
        }
        let mut row = None;
        for _ in 0..20 {
            let coef: Vec<i64> = (0..rank).map(|_| rng.gen_range(-2..=2)).collect();
            let cand: Vec<i64> = (0..n)
                .map(|k| coef.iter().zip(&basis).map(|(c, b)| c * b[k]).sum())
                .collect();
            if cand.iter().all(|v| (-9..=9).contains(v)) {
                row = Some(cand);
                break;
            }
        }
        let row = row.unwrap_or_else(|| {
            let b = &basis[rng.gen_range(0..rank)];
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            b.iter().map(|v| sign * v).collect()
        });
        rows.push(row);
    }
    rows.shuffle(rng);
    rows
}

/// Random shape (at most 10x10) and planted rank; rank 0 only if `allow_zero`.
pub fn random_planted(rng: &mut ChaCha8Rng, allow_zero: bool) -> (Vec<Vec<i64>>, usize) {
    let m = rng.gen_range(1..=10);
    let n = rng.gen_range(1..=10);
    let lo = usize::from(!allow_zero);
    let rank = rng.gen_range(lo..=m.min(n));
    (planted_integer_matrix(rng, m, n, rank), rank)
}

pub fn to_f64(rows: &[Vec<i64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect()
}

pub fn to_matrix(rows: &[Vec<i64>]) -> FeatureMatrix<f64> {
    FeatureMatrix::from_rows(&to_f64(rows)).unwrap()
}

/// Normalized subgradient descent on the l2,1 objective, started at zero.
/// Each epoch restarts from the best point seen with half the step length.
pub fn subgradient_oracle(x: ArrayView2<f64>, y: ArrayView2<f64>, gamma: f64, iters: usize, epochs: usize) -> f64 {
    let (d, n) = x.dim();
    let c = y.nrows();
    let xs: Vec<f64> = x.iter().copied().collect();
    let ys: Vec<f64> = y.iter().copied().collect();
    let mut r = vec![0.0; c * n];
    // fills the residual columns W^T x_i - y_i and returns the objective
    let eval = |w: &[f64], r: &mut [f64]| -> f64 {
        let mut loss = 0.0;
        for i in 0..n {
            let mut sq = 0.0;
            for b in 0..c {
                let mut v = -ys[b * n + i];
                for a in 0..d {
                    v += w[a * c + b] * xs[a * n + i];
                }
                r[b * n + i] = v;
                sq += v * v;
            }
            loss += sq.sqrt();
        }
        let pen: f64 = w.chunks(c).map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt()).sum();
        loss + gamma * pen
    };
    let mut best_w = vec![0.0; d * c];
    let mut best = eval(&best_w, &mut r);
    let mut w = best_w.clone();
    let mut grad = vec![0.0; d * c];
    let mut h = 1.0;
    for _ in 0..epochs {
        w.copy_from_slice(&best_w);
        eval(&w, &mut r);
        for _ in 0..iters {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..n {
                let nr = (0..c).map(|b| r[b * n + i] * r[b * n + i]).sum::<f64>().sqrt();
                if nr > 0.0 {
                    for a in 0..d {
                        for b in 0..c {
                            grad[a * c + b] += xs[a * n + i] * r[b * n + i] / nr;
                        }
                    }
                }
            }
            for a in 0..d {
                let nw = w[a * c..(a + 1) * c].iter().map(|v| v * v).sum::<f64>().sqrt();
                if nw > 0.0 {
                    for b in 0..c {
                        grad[a * c + b] += gamma * w[a * c + b] / nw;
                    }
                }
            }
            let gn = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn == 0.0 {
                break;
            }
            for (wv, g) in w.iter_mut().zip(&grad) {
                *wv -= g * h / gn;
            }
            let f = eval(&w, &mut r);
            if f < best {
                best = f;
                best_w.copy_from_slice(&w);
            }
        }
        h *= 0.5;
    }
    let check = objective(Array2::from_shape_vec((d, c), best_w).unwrap().view(), x, y, gamma).unwrap();
    assert!((check - best).abs() <= 1e-9 * best.max(1.0));
    best
}

/// Random design (last row all ones) and cyclic one-hot targets.
pub fn random_problem(rng: &mut ChaCha8Rng, offset: usize) -> (Array2<f64>, Array2<f64>, f64) {
    let d = rng.gen_range(2..=6);
    let c = rng.gen_range(1..=3);
    let n = rng.gen_range(2..=12);
    let mut x = Array2::from_shape_fn((d, n), |_| rng.gen_range(-1.0..1.0));
    x.row_mut(d - 1).fill(1.0);
    let y = Array2::from_shape_fn((c, n), |(l, i)| if (i + offset) % c == l { 1.0 } else { 0.0 });
    let gamma = rng.gen_range(0.1..2.0);
    (x, y, gamma)
}

/// Labels with the given per-class counts, interleaved then shuffled.
pub fn labels_with_counts(rng: &mut ChaCha8Rng, counts: &[usize]) -> LabelVector {
    let mut codes: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(l, &k)| std::iter::repeat(l).take(k))
        .collect();
    codes.shuffle(rng);
    LabelVector::from_plain_codes(codes).unwrap()
}

/// Gaussian-free random features in [-1, 1), one row per feature.
pub fn random_features(rng: &mut ChaCha8Rng, m: usize, n: usize) -> FeatureMatrix<f64> {
    FeatureMatrix::unnamed(Array2::from_shape_fn((m, n), |_| rng.gen_range(-1.0..1.0))).unwrap()
}

pub fn max_abs_diff(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Labeled dataset with one discriminative feature, a scaled copy of it,
/// independent noise features and exact integer combinations of the noise
/// features. Returns the matrix, labels and the row of the discriminative
/// feature.
pub fn planted_redundancy_dataset(rng: &mut ChaCha8Rng) -> (FeatureMatrix<f64>, LabelVector, usize) {
    let counts: Vec<usize> = (0..3).map(|_| rng.gen_range(20..=40)).collect();
    let labels = labels_with_counts(rng, &counts);
    let n = labels.n();
    let q = rng.gen_range(3..=5);
    let r = rng.gen_range(3..=6);

    let disc: Vec<f64> = labels
        .codes()
        .iter()
        .map(|&l| 10.0 * l as f64 + rng.gen_range(-1.0..1.0))
        .collect();
    let noise: Vec<Vec<f64>> = (0..q)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut rows = vec![disc.clone(), disc.iter().map(|v| 3.0 * v).collect()];
    rows.extend(noise.iter().cloned());
    for _ in 0..r {
        let coef: Vec<f64> = (0..q)
            .map(|_| [-2.0, -1.0, 1.0, 2.0][rng.gen_range(0..4)])
            .collect();
        rows.push(
            (0..n)
                .map(|i| coef.iter().zip(&noise).map(|(a, row)| a * row[i]).sum())
                .collect(),
        );
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let shuffled: Vec<Vec<f64>> = order.iter().map(|&k| rows[k].clone()).collect();
    let disc_row = order.iter().position(|&k| k == 0).unwrap();
    (FeatureMatrix::from_rows(&shuffled).unwrap(), labels, disc_row)
}
