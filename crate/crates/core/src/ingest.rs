//! Loading labeled CSV data into a [`FeatureMatrix`] and [`LabelVector`].
//!
//! The CSV layout is the usual one: header row, one instance per line, one
//! column holding the class label. The matrix is stored transposed, with
//! features as rows. Features whose population variance does not exceed the
//! variance floor are dropped and recorded.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::scalar::Real;

/// Per-instance class codes `0..c`, assigned in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelVector {
    codes: Vec<usize>,
    class_names: Vec<String>,
    class_counts: Vec<usize>,
}

impl LabelVector {
    /// Encodes label strings by first appearance.
    pub fn from_names<S: AsRef<str>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut class_names = Vec::new();
        let mut class_counts = Vec::new();
        let mut codes = Vec::new();
        for label in labels {
            let label = label.as_ref();
            let code = *index.entry(label.to_owned()).or_insert_with(|| {
                class_names.push(label.to_owned());
                class_counts.push(0);
                class_names.len() - 1
            });
            class_counts[code] += 1;
            codes.push(code);
        }
        if codes.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self {
            codes,
            class_names,
            class_counts,
        })
    }

    /// Wraps precomputed codes. Every class in `0..c` must occur at least once.
    pub fn from_codes(codes: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let c = class_names.len();
        if codes.is_empty() || c == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut class_counts = vec![0; c];
        for &code in &codes {
            if code >= c {
                return Err(Error::InvalidParameter {
                    name: "labels",
                    reason: format!("code {code} outside 0..{c}"),
                });
            }
            class_counts[code] += 1;
        }
        if let Some(l) = class_counts.iter().position(|&k| k == 0) {
            return Err(Error::InvalidParameter {
                name: "labels",
                reason: format!("class `{}` has no instances", class_names[l]),
            });
        }
        Ok(Self {
            codes,
            class_names,
            class_counts,
        })
    }

    /// Codes with generated class names `"0".."c-1"`.
    pub fn from_plain_codes(codes: Vec<usize>) -> Result<Self> {
        let c = codes.iter().max().map_or(0, |&k| k + 1);
        Self::from_codes(codes, (0..c).map(|l| l.to_string()).collect())
    }

    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn code(&self, instance: usize) -> usize {
        self.codes[instance]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Class count `c`.
    pub fn c(&self) -> usize {
        self.class_names.len()
    }

    /// Instance count `n`.
    pub fn n(&self) -> usize {
        self.codes.len()
    }

    /// Keeps the listed instances. Classes that vanish are removed and the
    /// remaining codes compacted, preserving order.
    pub fn select(&self, instances: &[usize]) -> Result<Self> {
        let kept: Vec<&str> = instances
            .iter()
            .map(|&i| self.class_names[self.codes[i]].as_str())
            .collect();
        let present: Vec<String> = self
            .class_names
            .iter()
            .filter(|name| kept.contains(&name.as_str()))
            .cloned()
            .collect();
        let codes = kept
            .iter()
            .map(|name| present.iter().position(|p| p == name).unwrap())
            .collect();
        Self::from_codes(codes, present)
    }
}

/// One-hot class matrix `Y ∈ R^{c×n}`: column `i` is the unit vector of the
/// class of instance `i`.
pub fn one_hot<T: Real>(labels: &LabelVector) -> Array2<T> {
    let mut y = Array2::zeros((labels.c(), labels.n()));
    for (i, &l) in labels.codes().iter().enumerate() {
        y[[l, i]] = T::one();
    }
    y
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Source {
    pub path: PathBuf,
    /// SHA-256 of the raw file bytes, lowercase hex.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: FeatureMatrix<T>,
    pub labels: LabelVector,
    pub label_column: String,
    pub dropped_features: Vec<String>,
    pub source: Option<Source>,
}

impl<T: Real> Dataset<T> {
    pub fn new(features: FeatureMatrix<T>, labels: LabelVector) -> Result<Self> {
        if features.n() != labels.n() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", features.n()),
                found: format!("{}", labels.n()),
            });
        }
        Ok(Self {
            features,
            labels,
            label_column: "label".into(),
            dropped_features: Vec::new(),
            source: None,
        })
    }

    /// Writes the dataset back in the layout [`load_csv`] reads. Values use
    /// the shortest decimal form that parses back to the same scalar.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let to_csv = |source: csv::Error| Error::Csv {
            path: PathBuf::from("<output>"),
            source,
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.features.names().iter().map(String::as_str).collect();
        header.push(&self.label_column);
        w.write_record(&header).map_err(to_csv)?;
        let values = self.features.values();
        for i in 0..self.features.n() {
            let mut record: Vec<String> = values.column(i).iter().map(|v| v.to_string()).collect();
            record.push(self.labels.class_names()[self.labels.code(i)].clone());
            w.write_record(&record).map_err(to_csv)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: PathBuf::from("<output>"),
            source,
        })?;
        Ok(())
    }
}

fn population_variance<T: Real>(xs: &[T]) -> T {
    let n = T::from_count(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n
}

/// Parses CSV bytes. `path` is used only for error messages and provenance.
pub fn parse_csv<T: Real>(
    bytes: &[u8],
    path: &Path,
    label_column: &str,
    variance_floor: T,
) -> Result<Dataset<T>> {
    if !(variance_floor >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "variance_floor",
            reason: format!("must be nonnegative, got {variance_floor}"),
        });
    }
    let csv_err = |source: csv::Error| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_owned()))?;
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != label_idx).collect();

    let mut columns: Vec<Vec<T>> = vec![Vec::new(); feature_cols.len()];
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        for (slot, &j) in feature_cols.iter().enumerate() {
            let cell = record.get(j).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    line,
                    column: header[j].clone(),
                });
            }
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .and_then(T::from_f64)
                .ok_or_else(|| Error::NonNumericCell {
                    line,
                    column: header[j].clone(),
                    value: cell.to_owned(),
                })?;
            columns[slot].push(value);
        }
        let label = record.get(label_idx).unwrap_or("");
        if label.is_empty() {
            return Err(Error::MissingValue {
                line,
                column: label_column.to_owned(),
            });
        }
        labels.push(label.to_owned());
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }

    let mut kept_names = Vec::new();
    let mut kept_rows: Vec<T> = Vec::new();
    let mut dropped = Vec::new();
    for (slot, &j) in feature_cols.iter().enumerate() {
        let column = &columns[slot];
        // squared deviations of tiny values underflow, so a zero floor
        // means an exact constant check
        let constant = column.iter().all(|&v| v == column[0]);
        let low = variance_floor > T::zero() && population_variance(column) <= variance_floor;
        if constant || low {
            dropped.push(header[j].clone());
        } else {
            kept_names.push(header[j].clone());
            kept_rows.extend_from_slice(&columns[slot]);
        }
    }
    if kept_names.is_empty() {
        return Err(Error::NoFeatures);
    }
    let values = Array2::from_shape_vec((kept_names.len(), n), kept_rows)
        .expect("row-major buffer matches shape");
    let features = FeatureMatrix::new(values, kept_names)?;
    let labels = LabelVector::from_names(labels)?;

    Ok(Dataset {
        features,
        labels,
        label_column: label_column.to_owned(),
        dropped_features: dropped,
        source: Some(Source {
            path: path.to_owned(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }),
    })
}

/// Reads and parses a labeled CSV file.
pub fn load_csv<T: Real>(
    path: impl AsRef<Path>,
    label_column: &str,
    variance_floor: T,
) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_csv(&bytes, path, label_column, variance_floor)
}
