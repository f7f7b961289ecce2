//! Class-occurrence compensation.
//!
//! Every class contributes equally to the normalization statistics and to the
//! regression loss, whatever its instance count. Statistics are averages of
//! per-class moments, and each instance of class `l` is scaled by
//! `n / (c · n_l)` before the regression.

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{one_hot, LabelVector};
use crate::matrix::FeatureMatrix;
use crate::scalar::{norm2, Real};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensationStats<T> {
    /// Class-balanced mean per feature.
    pub mu: Vec<T>,
    /// Class-balanced standard deviation per feature.
    pub sigma: Vec<T>,
    /// Per-instance factor `n / (c · n_l)`.
    pub scale: Vec<T>,
}

fn check_instances<T: Real>(f: &FeatureMatrix<T>, labels: &LabelVector) -> Result<()> {
    if f.n() != labels.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", f.n()),
            found: format!("{}", labels.n()),
        });
    }
    Ok(())
}

/// Class-balanced Z-score statistics and instance scale factors.
///
/// `μ_j` is the mean of the per-class means of feature `j`; `σ_j` is the
/// square root of the mean over classes of the per-class mean of
/// `(f_{j,i} − μ_j)²`. Per-class moments divide by `n_l`.
pub fn class_balanced_stats<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
) -> Result<CompensationStats<T>> {
    check_instances(f, labels)?;
    let c = labels.c();
    let n = f.n();
    let counts: Vec<T> = labels
        .class_counts()
        .iter()
        .map(|&k| T::from_count(k))
        .collect();
    let c_t = T::from_count(c);

    let mut mu = Vec::with_capacity(f.m());
    let mut sigma = Vec::with_capacity(f.m());
    let mut acc = vec![T::zero(); c];
    for j in 0..f.m() {
        let row = f.row(j);

        acc.iter_mut().for_each(|a| *a = T::zero());
        for (&v, &l) in row.iter().zip(labels.codes()) {
            acc[l] += v;
        }
        let mean = acc.iter().zip(&counts).map(|(&s, &k)| s / k).sum::<T>() / c_t;

        acc.iter_mut().for_each(|a| *a = T::zero());
        for (&v, &l) in row.iter().zip(labels.codes()) {
            acc[l] += (v - mean) * (v - mean);
        }
        let var = acc.iter().zip(&counts).map(|(&s, &k)| s / k).sum::<T>() / c_t;
        let dev = var.sqrt();
        if !(dev > T::zero()) {
            return Err(Error::ZeroDeviation(f.name(j).to_owned()));
        }
        mu.push(mean);
        sigma.push(dev);
    }

    let n_t = T::from_count(n);
    let scale = labels
        .codes()
        .iter()
        .map(|&l| n_t / (c_t * counts[l]))
        .collect();
    Ok(CompensationStats { mu, sigma, scale })
}

/// Ordinary per-feature mean and population standard deviation, with unit
/// instance scales. This is the uncompensated baseline.
pub fn plain_stats<T: Real>(f: &FeatureMatrix<T>) -> Result<CompensationStats<T>> {
    let single = LabelVector::from_codes(vec![0; f.n()], vec!["all".into()])?;
    class_balanced_stats(f, &single)
}

/// `f_{j,i} ← (f_{j,i} − μ_j) / σ_j`.
pub fn apply_zscore<T: Real>(
    f: &FeatureMatrix<T>,
    stats: &CompensationStats<T>,
) -> Result<FeatureMatrix<T>> {
    if stats.mu.len() != f.m() || stats.sigma.len() != f.m() {
        return Err(Error::DimensionMismatch {
            expected: format!("statistics for {} features", f.m()),
            found: format!("{}", stats.mu.len()),
        });
    }
    f.map_rows(|j, v| (v - stats.mu[j]) / stats.sigma[j])
}

/// Design matrix `X` (features with an all-one row appended) and one-hot `Y`.
pub fn build_design<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
) -> Result<(Array2<T>, Array2<T>)> {
    check_instances(f, labels)?;
    let (m, n) = (f.m(), f.n());
    let mut x = Array2::ones((m + 1, n));
    x.slice_mut(s![..m, ..]).assign(&f.values());
    Ok((x, one_hot(labels)))
}

/// `(X̃, Ỹ)`: columns of the design and of `Y` multiplied by the instance
/// scale. The bias row is scaled as well.
pub fn build_compensated_design<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
    stats: &CompensationStats<T>,
) -> Result<(Array2<T>, Array2<T>)> {
    if stats.scale.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} instance scales", f.n()),
            found: format!("{}", stats.scale.len()),
        });
    }
    let (mut x, mut y) = build_design(f, labels)?;
    for (i, &s) in stats.scale.iter().enumerate() {
        x.column_mut(i).mapv_inplace(|v| v * s);
        y.column_mut(i).mapv_inplace(|v| v * s);
    }
    Ok((x, y))
}

/// The class-weighted objective on the unscaled design, evaluated term by term:
/// `(n/c) Σ_l (1/n_l) Σ_{i∈l} ‖Ŵᵀx_i − y_i‖ + γ Σ_j ‖ŵ_j‖`.
pub fn compensated_objective<T: Real>(
    w_hat: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    labels: &LabelVector,
    gamma: T,
) -> Result<T> {
    let (d, c) = w_hat.dim();
    if x.nrows() != d || y.nrows() != c || x.ncols() != y.ncols() || x.ncols() != labels.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("X {d}×n, Y {c}×n, n = {}", labels.n()),
            found: format!("X {:?}, Y {:?}", x.dim(), y.dim()),
        });
    }
    let n = T::from_count(labels.n());
    let c_t = T::from_count(labels.c());
    let mut per_class = vec![T::zero(); labels.c()];
    for (i, &l) in labels.codes().iter().enumerate() {
        let xi = x.column(i);
        let r = (0..c).map(|k| w_hat.column(k).dot(&xi) - y[[k, i]]);
        per_class[l] += norm2(r.collect::<Vec<_>>());
    }
    let data: T = per_class
        .iter()
        .zip(labels.class_counts())
        .map(|(&s, &k)| s / T::from_count(k))
        .sum::<T>()
        * n
        / c_t;
    let reg: T = w_hat
        .axis_iter(Axis(0))
        .map(|row| norm2(row.iter().copied()))
        .sum();
    Ok(data + gamma * reg)
}
