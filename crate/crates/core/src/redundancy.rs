//! Rank-preserving k-medoids over features.
//!
//! Phase 1 grows clusters around seeds. A single [`RankTracker`] holds the
//! span of all seeds chosen so far and is never reset. In each pass the
//! lowest-index unassigned feature becomes the seed of a new cluster, and every
//! other unassigned feature that is dependent on the current span joins that
//! cluster. Features that are independent wait for a later pass. Every seed
//! raises the span by one dimension, so the number of clusters equals the rank
//! of the feature matrix.
//!
//! Phase 2 picks one medoid per cluster, the member with the smallest sum of
//! Euclidean distances to the other members.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::rank::{numerical_rank, RankTracker, Verdict};
use crate::scalar::Real;

/// Disjoint clusters covering every feature, optionally with medoids.
///
/// Feature indices are zero-based rows of the clustered matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterPartition {
    /// Members of each cluster, ascending.
    pub clusters: Vec<Vec<usize>>,
    /// One medoid per cluster once Phase 2 has run.
    pub medoids: Option<Vec<usize>>,
    /// Seed of each cluster, in discovery order.
    pub seed_order: Vec<usize>,
    /// Dependency tests performed in Phase 1.
    pub rank_checks: usize,
}

impl ClusterPartition {
    /// Cluster count `k`.
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster index of every feature.
    pub fn assignment(&self, m: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; m];
        for (c, members) in self.clusters.iter().enumerate() {
            for &j in members {
                out[j] = c;
            }
        }
        out
    }
}

/// Upper bound on Phase-1 dependency tests for `m` features.
pub fn rank_check_bound(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Phase 1: partitions the rows of `f` into rank-preserving clusters.
///
/// Rows are visited in ascending index order. `tol` is the relative residual
/// tolerance handed to the [`RankTracker`] (`0` selects its default) and must
/// be below 1.
pub fn cluster_features<T: Real>(f: &FeatureMatrix<T>, tol: T) -> Result<ClusterPartition> {
    let (m, n) = (f.m(), f.n());
    let mut tracker = RankTracker::new(n, tol)?;
    let rows: Vec<Vec<T>> = (0..m).map(|j| f.row(j).to_vec()).collect();
    let is_zero = |j: usize| rows[j].iter().all(|&v| v == T::zero());

    let mut unassigned: Vec<usize> = (0..m).collect();
    let mut clusters = Vec::new();
    let mut seed_order = Vec::new();
    let mut rank_checks = 0usize;

    while !unassigned.is_empty() {
        // A zero row spans nothing and cannot seed. Zero rows are absorbed by
        // the first cluster, since they depend on any span.
        let Some(pos) = unassigned.iter().position(|&j| !is_zero(j)) else {
            return Err(Error::InvalidParameter {
                name: "features",
                reason: "every feature row is zero; the matrix has rank 0".into(),
            });
        };
        let seed = unassigned.remove(pos);
        let verdict = tracker.try_extend(&rows[seed])?;
        debug_assert_eq!(verdict, Verdict::Independent, "seed {seed} must extend the span");

        let mut members = vec![seed];
        let mut waiting = Vec::with_capacity(unassigned.len());
        for &j in &unassigned {
            rank_checks += 1;
            match tracker.test(&rows[j])? {
                Verdict::Dependent => members.push(j),
                Verdict::Independent => waiting.push(j),
            }
        }
        unassigned = waiting;
        members.sort_unstable();
        clusters.push(members);
        seed_order.push(seed);
    }

    assert!(
        rank_checks <= rank_check_bound(m),
        "Phase-1 performed {rank_checks} rank checks, above the bound {} for m = {m}",
        rank_check_bound(m)
    );
    Ok(ClusterPartition {
        clusters,
        medoids: None,
        seed_order,
        rank_checks,
    })
}

/// Euclidean distance between feature rows `i` and `j`.
pub fn pairwise_distance<T: Real>(f: &FeatureMatrix<T>, i: usize, j: usize) -> Result<T> {
    let m = f.m();
    for index in [i, j] {
        if index >= m {
            return Err(Error::IndexOutOfRange { index, m });
        }
    }
    Ok(row_distance(f, i, j))
}

fn row_distance<T: Real>(f: &FeatureMatrix<T>, i: usize, j: usize) -> T {
    let diff = f.row(i).iter().zip(f.row(j)).map(|(&a, &b)| a - b).collect::<Vec<_>>();
    crate::scalar::norm2(diff)
}

fn cluster_medoid<T: Real>(f: &FeatureMatrix<T>, members: &[usize]) -> usize {
    match members {
        [only] => *only,
        // two members: the lower index, deterministically
        [a, b] => (*a).min(*b),
        _ => {
            let mut best: Option<(T, usize)> = None;
            for &cand in members {
                let total: T = members
                    .iter()
                    .filter(|&&o| o != cand)
                    .map(|&o| row_distance(f, cand, o))
                    .sum();
                let better = match best {
                    None => true,
                    Some((t, idx)) => total < t || (total == t && cand < idx),
                };
                if better {
                    best = Some((total, cand));
                }
            }
            best.expect("cluster is nonempty").1
        }
    }
}

/// Phase 2: one medoid per cluster.
///
/// `f` should be the Z-score normalized matrix, with rows indexed as in the
/// partition. Clusters of three or more members take the member with the
/// smallest distance sum, ties to the lowest index. Pairs take the lower index.
pub fn select_medoids<T: Real>(
    partition: &ClusterPartition,
    f: &FeatureMatrix<T>,
) -> Result<ClusterPartition> {
    if partition.clusters.is_empty() || partition.clusters.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter {
            name: "partition",
            reason: "clusters are unset or empty".into(),
        });
    }
    let m = f.m();
    if let Some(&index) = partition.clusters.iter().flatten().find(|&&j| j >= m) {
        return Err(Error::IndexOutOfRange { index, m });
    }
    let medoids = partition
        .clusters
        .par_iter()
        .map(|members| cluster_medoid(f, members))
        .collect();
    Ok(ClusterPartition {
        medoids: Some(medoids),
        ..partition.clone()
    })
}

/// Medoid feature indices, ascending.
pub fn select_features(partition: &ClusterPartition) -> Result<Vec<usize>> {
    let mut out = partition
        .medoids
        .clone()
        .ok_or_else(|| Error::InvalidParameter {
            name: "partition",
            reason: "medoids have not been selected".into(),
        })?;
    out.sort_unstable();
    Ok(out)
}

/// Numerical rank of the medoid rows of `f`. Below `k` means the chosen
/// medoids do not span what the seeds spanned.
pub fn medoid_rank<T: Real>(partition: &ClusterPartition, f: &FeatureMatrix<T>, tol: T) -> Result<usize> {
    let medoids = select_features(partition)?;
    let sub = f.select_rows(&medoids)?;
    numerical_rank(sub.values(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: &[Vec<f64>]) -> FeatureMatrix<f64> {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn scalar_multiple_pair_forms_one_cluster() {
        let f = fm(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        let p = cluster_features(&f, 0.0).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1]]);
        assert_eq!(p.k(), 1);
        assert_eq!(p.rank_checks, 1);
    }

    #[test]
    fn sum_feature_joins_second_cluster() {
        // f3 = f1 + f2 is independent of f1 alone, so it waits for pass 2
        let f = fm(&[
            vec![1.0, 0.0, 2.0, 1.0],
            vec![0.0, 1.0, 1.0, -1.0],
            vec![1.0, 1.0, 3.0, 0.0],
            vec![5.0, -2.0, 0.0, 7.0],
        ]);
        let p = cluster_features(&f, 0.0).unwrap();
        assert_eq!(p.clusters, vec![vec![0], vec![1, 2], vec![3]]);
        assert_eq!(p.seed_order, vec![0, 1, 3]);
        assert_eq!(p.rank_checks, 3 + 2 + 0);
    }

    #[test]
    fn zero_rows_join_first_cluster() {
        let f = fm(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 1.0]]);
        let p = cluster_features(&f, 0.0).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1], vec![2]]);
        assert_eq!(p.seed_order, vec![1, 2]);
        assert!(cluster_features(&fm(&[vec![0.0, 0.0]]), 0.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let f = fm(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(pairwise_distance(&f, 0, 0).unwrap(), 0.0);
        assert!((pairwise_distance(&f, 0, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            pairwise_distance(&f, 0, 1).unwrap(),
            pairwise_distance(&f, 1, 0).unwrap()
        );
        assert!(matches!(
            pairwise_distance(&f, 0, 2),
            Err(Error::IndexOutOfRange { index: 2, m: 2 })
        ));
    }

    fn partition(clusters: Vec<Vec<usize>>) -> ClusterPartition {
        ClusterPartition {
            seed_order: clusters.iter().map(|c| c[0]).collect(),
            clusters,
            medoids: None,
            rank_checks: 0,
        }
    }

    #[test]
    fn medoid_rules_by_cluster_size() {
        let f = fm(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.9, 0.1],
            vec![5.0, 5.0],
            vec![1.1, 0.0],
            vec![3.0, 3.0],
        ]);
        let p = select_medoids(&partition(vec![vec![5], vec![0, 3], vec![1, 2, 4]]), &f).unwrap();
        assert_eq!(p.medoids, Some(vec![5, 0, 1]));
        assert_eq!(select_features(&p).unwrap(), vec![0, 1, 5]);
    }

    #[test]
    fn medoid_tie_goes_to_lowest_index() {
        // three collinear equally spaced points: middle wins; four symmetric
        // points on a square: all sums tie
        let f = fm(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]);
        let p = select_medoids(&partition(vec![vec![0, 1, 2, 3]]), &f).unwrap();
        assert_eq!(p.medoids, Some(vec![0]));
    }

    #[test]
    fn medoids_require_clusters() {
        let f = fm(&[vec![1.0]]);
        assert!(select_medoids(&partition(vec![]), &f).is_err());
        assert!(select_features(&partition(vec![vec![0]])).is_err());
    }
}
