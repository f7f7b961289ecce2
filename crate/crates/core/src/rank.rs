//! Numerical rank, incremental rank tracking and the covariance eigen spectrum.

use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::matrix::FeatureMatrix;
use crate::scalar::{norm2, Real};

/// Relative tolerance used when the caller passes `0`: `max(rows, cols) · ε`.
pub fn default_tolerance<T: Real>(rows: usize, cols: usize) -> T {
    T::from_count(rows.max(cols)) * T::epsilon()
}

/// Relative residual tolerance a [`RankTracker`] uses when the caller passes
/// `0`: `√ε`.
///
/// Gram-Schmidt residuals of exactly dependent rows carry roundoff that grows
/// with the conditioning of the accepted rows, so the `σ_max`-relative cut of
/// [`default_tolerance`] is too tight for the incremental test.
pub fn default_tracker_tolerance<T: Real>() -> T {
    T::epsilon().sqrt()
}

fn resolve_tolerance<T: Real>(tol: T, rows: usize, cols: usize) -> Result<T> {
    if !(tol >= T::zero()) || !tol.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be finite and nonnegative, got {tol}"),
        });
    }
    Ok(if tol == T::zero() {
        default_tolerance(rows, cols)
    } else {
        tol
    })
}

fn count_above<T: Real>(sv: &[T], rel: T) -> usize {
    let Some(&top) = sv.first() else { return 0 };
    if top == T::zero() {
        return 0;
    }
    let cut = rel * top;
    sv.iter().take_while(|&&s| s > cut).count()
}

/// Number of singular values of `m` strictly above `tol · σ_max`.
///
/// `tol = 0` selects [`default_tolerance`].
pub fn numerical_rank<T: Real>(m: ArrayView2<'_, T>, tol: T) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    if let Some(((row, col), _)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, col });
    }
    let tol = resolve_tolerance(tol, rows, cols)?;
    Ok(count_above(&singular_values(m), tol))
}

/// Outcome of offering a row to a [`RankTracker`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// The row enlarged the span; the tracker's rank went up by one.
    Independent,
    /// The row lies in the current span (within tolerance). Nothing changed.
    Dependent,
}

/// Orthonormal basis of the rows accepted so far.
///
/// Each [`try_extend`](RankTracker::try_extend) runs modified Gram-Schmidt
/// against the basis twice (one reorthogonalization pass), so one test costs
/// `O(rank · n)` instead of a fresh factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTracker<T> {
    dim: usize,
    tol: T,
    basis: Vec<Vec<T>>,
}

impl<T: Real> RankTracker<T> {
    /// Empty tracker over `R^dim`. A row is dependent when its residual after
    /// projection is at most `tol · ‖row‖`; `tol = 0` selects
    /// [`default_tracker_tolerance`].
    pub fn new(dim: usize, tol: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        if !(tol >= T::zero()) || !tol.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: format!("must be finite and nonnegative, got {tol}"),
            });
        }
        if tol >= T::one() {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: format!("must be below 1, got {tol}"),
            });
        }
        let tol = if tol == T::zero() {
            default_tracker_tolerance()
        } else {
            tol
        };
        Ok(Self {
            dim,
            tol,
            basis: Vec::new(),
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    /// Residual of `row` after removing its projection onto the basis.
    fn residual(&self, row: &[T]) -> Vec<T> {
        let mut r = row.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let coef: T = q.iter().zip(&r).map(|(&a, &b)| a * b).sum();
                for (ri, &qi) in r.iter_mut().zip(q) {
                    *ri -= coef * qi;
                }
            }
        }
        r
    }

    /// Classifies `row` against the current span without changing the tracker.
    pub fn test(&self, row: &[T]) -> Result<Verdict> {
        self.classify(row).map(|(verdict, _)| verdict)
    }

    /// Adds `row` to the span if it is independent of it.
    pub fn try_extend(&mut self, row: &[T]) -> Result<Verdict> {
        let (verdict, residual) = self.classify(row)?;
        if let Some((r, res)) = residual {
            self.basis.push(r.into_iter().map(|v| v / res).collect());
        }
        Ok(verdict)
    }

    fn classify(&self, row: &[T]) -> Result<(Verdict, Option<(Vec<T>, T)>)> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: format!("row of length {}", self.dim),
                found: format!("{}", row.len()),
            });
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col });
        }
        let row_norm = norm2(row.iter().copied());
        if row_norm == T::zero() || self.rank() == self.dim {
            return Ok((Verdict::Dependent, None));
        }
        let r = self.residual(row);
        let res = norm2(r.iter().copied());
        if res <= self.tol * row_norm {
            return Ok((Verdict::Dependent, None));
        }
        Ok((Verdict::Independent, Some((r, res))))
    }
}

/// Eigenvalues of `F·Fᵀ/n`, descending, plus the count above a relative
/// threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSpectrum<T> {
    pub eigenvalues: Vec<T>,
    pub effective_rank: usize,
    /// Relative eigenvalue threshold actually applied.
    pub threshold: T,
}

/// Eigen spectrum of the feature covariance `F·Fᵀ/n`.
///
/// Computed as squared singular values of `F/√n`; `F·Fᵀ` is never formed.
/// `threshold` is relative to the largest eigenvalue; `0` selects the square
/// of [`default_tolerance`], so that `effective_rank` agrees with
/// [`numerical_rank`] at the default.
pub fn eigen_spectrum<T: Real>(f: &FeatureMatrix<T>, threshold: T) -> Result<EigenSpectrum<T>> {
    if !(threshold >= T::zero()) || threshold >= T::one() {
        return Err(Error::InvalidParameter {
            name: "threshold",
            reason: format!("must lie in [0, 1), got {threshold}"),
        });
    }
    let (m, n) = (f.m(), f.n());
    let threshold = if threshold == T::zero() {
        let t: T = default_tolerance(m, n);
        t * t
    } else {
        threshold
    };
    let scaled = f.values().mapv(|v| v / T::from_count(n).sqrt());
    let sv = singular_values(scaled.view());
    let effective_rank = count_above(&sv, threshold.sqrt());
    let eigenvalues = sv.iter().map(|&s| (s * s).max(T::zero())).collect();
    Ok(EigenSpectrum {
        eigenvalues,
        effective_rank,
        threshold,
    })
}
