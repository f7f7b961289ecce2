//! Exact rank by Gaussian elimination over a field.
//!
//! Used as the rounding-free reference for rank decisions on integer data.

use std::ops::{Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Arbitrary-precision rational scalar.
pub type Rational = BigRational;

/// Field operations needed by [`exact_rank`].
pub trait Field:
    Clone + PartialEq + Zero + One + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> Field for T where
    T: Clone + PartialEq + Zero + One + Sub<Output = T> + Mul<Output = T> + Div<Output = T>
{
}

/// Rank of the matrix whose rows are `rows`. Ragged input is rejected by
/// panicking, since every caller builds the rows itself.
pub fn exact_rank<T: Field>(mut rows: Vec<Vec<T>>) -> usize {
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    assert!(rows.iter().all(|r| r.len() == width), "ragged matrix");
    let height = rows.len();
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..height).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let head = rows[rank].clone();
        for r in (rank + 1)..height {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone() / head[col].clone();
            for c in col..width {
                let v = rows[r][c].clone() - factor.clone() * head[c].clone();
                rows[r][c] = v;
            }
        }
        rank += 1;
        if rank == height {
            break;
        }
    }
    rank
}

/// Lifts an integer matrix into exact rationals.
pub fn rationals_from_ints(rows: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|&v| Rational::from_integer(BigInt::from(v)))
                .collect()
        })
        .collect()
}

/// Exact rank of an integer matrix.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    exact_rank(rationals_from_ints(rows))
}
