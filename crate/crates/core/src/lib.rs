//! Exemplar-free class-incremental learning over fixed feature embeddings,
//! and the regression machinery used to analyze what drives incremental
//! accuracy and forgetting.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the scalar for the common cases.

pub mod datagen;
pub mod error;
pub mod lab;
pub mod learners;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_rational::Ratio;

pub type Matrix = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type FeatureDataset = datagen::FeatureDataset<f64>;
pub type FeatureDataset32 = datagen::FeatureDataset<f32>;
pub type AccuracyMatrix = learners::AccuracyMatrix<f64>;
pub type AccuracyMatrix32 = learners::AccuracyMatrix<f32>;
pub type MetricSet = metrics::MetricSet<f64>;
pub type DesignMatrix = stats::DesignMatrix<f64>;
pub type RegressionFit = stats::RegressionFit<f64>;
pub type AnovaTable = stats::AnovaTable<f64>;
pub type PairwiseMatrix = stats::PairwiseMatrix<f64>;
/// Exact class fraction `b` of the initial step.
pub type Fraction = Ratio<u64>;
