//! The feature matrix: one row per feature, one column per instance.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense `m × n` matrix whose rows are features and whose columns are
/// instances, carrying one unique name per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    values: Array2<T>,
    names: Vec<String>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(values: Array2<T>, names: Vec<String>) -> Result<Self> {
        let (m, n) = values.dim();
        if m == 0 || n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if names.len() != m {
            return Err(Error::DimensionMismatch {
                expected: format!("{m} feature names"),
                found: format!("{}", names.len()),
            });
        }
        let mut seen = HashSet::with_capacity(m);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeatureName(name.clone()));
            }
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { values, names })
    }

    /// Builds a matrix with generated names `f1..fm`.
    pub fn unnamed(values: Array2<T>) -> Result<Self> {
        let names = (1..=values.nrows()).map(|j| format!("f{j}")).collect();
        Self::new(values, names)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {n}"),
                found: format!("row of length {}", bad.len()),
            });
        }
        let flat: Vec<T> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((m, n), flat).map_err(|_| Error::EmptyMatrix)?;
        Self::unnamed(values)
    }

    /// Feature count.
    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    /// Instance count.
    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, feature: usize) -> &str {
        &self.names[feature]
    }

    pub fn row(&self, feature: usize) -> ArrayView1<'_, T> {
        self.values.row(feature)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Keeps the listed features, in the given order.
    pub fn select_rows(&self, features: &[usize]) -> Result<Self> {
        let m = self.m();
        if let Some(&index) = features.iter().find(|&&j| j >= m) {
            return Err(Error::IndexOutOfRange { index, m });
        }
        let values = self.values.select(Axis(0), features);
        let names = features.iter().map(|&j| self.names[j].clone()).collect();
        Self::new(values, names)
    }

    /// Keeps the listed instances, in the given order.
    pub fn select_columns(&self, instances: &[usize]) -> Result<Self> {
        let n = self.n();
        if let Some(&index) = instances.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index, m: n });
        }
        Self::new(self.values.select(Axis(1), instances), self.names.clone())
    }

    /// Applies `f(feature, value)` to every entry.
    pub fn map_rows(&self, mut f: impl FnMut(usize, T) -> T) -> Result<Self> {
        let mut values = self.values.clone();
        for (j, mut row) in values.axis_iter_mut(Axis(0)).enumerate() {
            row.mapv_inplace(|v| f(j, v));
        }
        Self::new(values, self.names.clone())
    }
}
