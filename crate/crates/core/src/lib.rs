//! Feature selection by matrix rank and class-compensated sparse regression.
//!
//! Two independent analyses over a labeled feature matrix (features as rows,
//! instances as columns):
//!
//! * **Redundancy.** [`redundancy::cluster_features`] groups features so that
//!   every cluster adds exactly one dimension to the span of the features seen
//!   so far; the number of clusters equals the numerical rank. One medoid per
//!   cluster is kept and the rest are redundant.
//! * **Relevance.** [`relevance::solve_l21`] fits a row-sparse linear map from
//!   features to one-hot classes under an ℓ2,1 penalty. The row norms of the
//!   weights score each feature. [`compensation`] reweights instances so that
//!   rare classes count as much as common ones.
//!
//! All numeric code is generic over [`Real`] (`f32`, `f64`); the aliases below
//! fix the scalar to `f64`.

pub mod compensation;
pub mod error;
pub mod evaluate;
pub mod exact;
pub mod ingest;
pub mod linalg;
pub mod matrix;
pub mod pipeline;
pub mod rank;
pub mod redundancy;
pub mod relevance;
pub mod scalar;

pub use error::{Error, Result};
pub use ingest::LabelVector;
pub use rank::Verdict;
pub use redundancy::ClusterPartition;
pub use scalar::Real;

pub type FeatureMatrix = matrix::FeatureMatrix<f64>;
pub type Dataset = ingest::Dataset<f64>;
pub type RankTracker = rank::RankTracker<f64>;
pub type EigenSpectrum = rank::EigenSpectrum<f64>;
pub type CompensationStats = compensation::CompensationStats<f64>;
pub type WeightMatrix = relevance::WeightMatrix<f64>;
pub type SolverConfig = relevance::SolverConfig<f64>;
pub type SolveReport = relevance::SolveReport<f64>;

pub type FeatureMatrix32 = matrix::FeatureMatrix<f32>;
pub type RankTracker32 = rank::RankTracker<f32>;
pub type SolverConfig32 = relevance::SolverConfig<f32>;

/// Tool version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
