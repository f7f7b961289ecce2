//! Small dense kernels: one-sided Jacobi singular values and Cholesky solves.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Singular values of `a`, sorted descending. Length is `min(rows, cols)`.
///
/// One-sided (Hestenes) Jacobi on the orientation with fewer columns. The
/// matrix is never squared, so small singular values keep their relative
/// accuracy as far as the data allows.
pub fn singular_values<T: Real>(a: ArrayView2<'_, T>) -> Vec<T> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // columns of the working matrix, each of length `len`
    let mut work: Vec<Vec<T>> = if cols <= rows {
        (0..cols).map(|j| a.column(j).to_vec()).collect()
    } else {
        (0..rows).map(|i| a.row(i).to_vec()).collect()
    };
    let k = work.len();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&work[p], &work[q]);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = T::zero();
                    for (&x, &y) in cp.iter().zip(cq.iter()) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = work.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let xp = *x;
                    let yq = *y;
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<T> = work
        .iter()
        .map(|col| crate::scalar::norm2(col.iter().copied()))
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Raised when a matrix handed to [`cholesky_solve`] is not numerically
/// positive definite.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("matrix is not positive definite (pivot {pivot})")]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

/// Solves `a · x = b` for symmetric positive-definite `a` (d×d), `b` (d×k).
pub fn cholesky_solve<T: Real>(
    a: ArrayView2<'_, T>,
    b: ArrayView2<'_, T>,
) -> Result<Array2<T>, NotPositiveDefinite> {
    let d = a.nrows();
    assert_eq!(a.ncols(), d, "cholesky_solve needs a square matrix");
    assert_eq!(b.nrows(), d, "right-hand side row count mismatch");

    // lower factor, row-major
    let mut l = Array2::<T>::zeros((d, d));
    for j in 0..d {
        let mut diag = a[[j, j]];
        for p in 0..j {
            diag -= l[[j, p]] * l[[j, p]];
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return Err(NotPositiveDefinite { pivot: j });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..d {
            let mut v = a[[i, j]];
            for p in 0..j {
                v -= l[[i, p]] * l[[j, p]];
            }
            l[[i, j]] = v / ljj;
        }
    }

    let mut x = b.to_owned();
    for col in 0..x.ncols() {
        // forward: L y = b
        for i in 0..d {
            let mut v = x[[i, col]];
            for p in 0..i {
                v -= l[[i, p]] * x[[p, col]];
            }
            x[[i, col]] = v / l[[i, i]];
        }
        // backward: Lᵀ x = y
        for i in (0..d).rev() {
            let mut v = x[[i, col]];
            for p in (i + 1)..d {
                v -= l[[p, i]] * x[[p, col]];
            }
            x[[i, col]] = v / l[[i, i]];
        }
    }
    Ok(x)
}
