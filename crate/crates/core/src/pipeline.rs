//! End-to-end steps shared by the command-line tools.

use serde::Serialize;

use crate::compensation::{apply_zscore, plain_stats};
use crate::error::{Error, Result};
use crate::ingest::LabelVector;
use crate::matrix::FeatureMatrix;
use crate::rank::{eigen_spectrum, numerical_rank, EigenSpectrum};
use crate::redundancy::{cluster_features, medoid_rank, select_features, select_medoids, ClusterPartition};
use crate::relevance::{rank_features, score_relevance, RelevanceResult, SolverConfig};
use crate::scalar::Real;

/// Relative eigenvalue threshold matching a singular-value tolerance.
pub fn eigen_threshold<T: Real>(tol: T) -> T {
    tol * tol
}

/// Matrix the rank analysis runs on: the raw features, or their plain
/// Z-scores when `standardize` is set (turns affine relations into linear
/// ones).
pub fn rank_input<T: Real>(f: &FeatureMatrix<T>, standardize: bool) -> Result<FeatureMatrix<T>> {
    if standardize {
        apply_zscore(f, &plain_stats(f)?)
    } else {
        Ok(f.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RedundancyResult<T> {
    pub partition: ClusterPartition,
    pub spectrum: EigenSpectrum<T>,
    /// Rank of the matrix at the user tolerance, from the SVD.
    pub matrix_rank: usize,
    pub medoid_rank: usize,
    pub warnings: Vec<String>,
}

/// Spectrum, Phase-1 clustering and Phase-2 medoids.
///
/// Medoid distances are always taken between plain Z-scored rows.
pub fn analyze_redundancy<T: Real>(
    f: &FeatureMatrix<T>,
    tol: T,
    standardize: bool,
) -> Result<RedundancyResult<T>> {
    let ranked = rank_input(f, standardize)?;
    let spectrum = eigen_spectrum(&ranked, eigen_threshold(tol))?;
    let matrix_rank = numerical_rank(ranked.values(), tol)?;
    let partition = cluster_features(&ranked, tol)?;
    let normalized = apply_zscore(f, &plain_stats(f)?)?;
    let partition = select_medoids(&partition, &normalized)?;
    let medoid_rank = medoid_rank(&partition, &ranked, tol)?;

    let mut warnings = Vec::new();
    if partition.k() != matrix_rank {
        warnings.push(format!(
            "cluster count k = {} differs from the numerical rank {matrix_rank}; consider adjusting the tolerance",
            partition.k()
        ));
    }
    if medoid_rank < partition.k() {
        warnings.push(format!(
            "selected medoids span rank {medoid_rank}, below k = {}",
            partition.k()
        ));
    }
    Ok(RedundancyResult {
        partition,
        spectrum,
        matrix_rank,
        medoid_rank,
        warnings,
    })
}

/// Relevance restricted to `features` (zero-based rows of `f`).
pub fn relevance_on<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
    features: &[usize],
    config: &SolverConfig<T>,
    compensate: bool,
) -> Result<RelevanceResult<T>> {
    let sub = f.select_rows(features)?;
    score_relevance(&sub, labels, config, compensate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection<T> {
    /// Surviving features, ascending, as rows of the input matrix.
    pub selected: Vec<usize>,
    /// Dropped medoids, lowest relevance first.
    pub dropped: Vec<usize>,
    /// Medoids with their total relevance, highest first.
    pub ranking: Vec<(usize, T)>,
}

/// Medoids minus the `drop_bottom` medoids of lowest total relevance.
/// Relevance is scored on the medoid rows alone.
pub fn select_subset<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
    partition: &ClusterPartition,
    config: &SolverConfig<T>,
    drop_bottom: usize,
) -> Result<Selection<T>> {
    let medoids = select_features(partition)?;
    if drop_bottom >= medoids.len() {
        return Err(Error::InvalidParameter {
            name: "drop_bottom",
            reason: format!("must be below k = {}, got {drop_bottom}", medoids.len()),
        });
    }
    let result = relevance_on(f, labels, &medoids, config, true)?;
    let ranking: Vec<(usize, T)> = rank_features(&result.weights.total())
        .into_iter()
        .map(|(pos, score)| (medoids[pos], score))
        .collect();
    let keep = ranking.len() - drop_bottom;
    let mut selected: Vec<usize> = ranking[..keep].iter().map(|p| p.0).collect();
    selected.sort_unstable();
    let dropped = ranking[keep..].iter().rev().map(|p| p.0).collect();
    Ok(Selection {
        selected,
        dropped,
        ranking,
    })
}
