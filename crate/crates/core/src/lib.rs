//! Fully unsupervised transfer over fixed embedding spaces.
//!
//! Given `K` precomputed embedding matrices of one dataset, [`train`]
//! searches for a `C`-class labeling whose linear classifiers fit well in
//! every space at once, [`selection`] picks among hyperparameter runs
//! without ground truth, and [`margin`] checks the max-margin behaviour
//! that motivates the objective on small binary problems.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the element type for callers who do not
//! care.

pub mod embedding;
pub mod encoder;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod margin;
pub mod optim;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EmbeddingMatrixF64 = embedding::EmbeddingMatrix<f64>;
pub type EmbeddingMatrixF32 = embedding::EmbeddingMatrix<f32>;
pub type MultiViewDatasetF64 = embedding::MultiViewDataset<f64>;
pub type MultiViewDatasetF32 = embedding::MultiViewDataset<f32>;
pub type TaskEncoderF64 = encoder::TaskEncoder<f64>;
pub type TaskEncoderF32 = encoder::TaskEncoder<f32>;
pub type SoftLabelingF64 = encoder::SoftLabeling<f64>;
pub type SoftLabelingF32 = encoder::SoftLabeling<f32>;
pub type InnerClassifierF64 = inner::InnerClassifier<f64>;
pub type InnerClassifierF32 = inner::InnerClassifier<f32>;
pub type TrainConfigF64 = train::TrainConfig<f64>;
pub type TrainConfigF32 = train::TrainConfig<f32>;
pub type TrainReportF64 = train::TrainReport<f64>;
pub type TrainReportF32 = train::TrainReport<f32>;
pub type KMeansResultF64 = selection::KMeansResult<f64>;
pub type KMeansResultF32 = selection::KMeansResult<f32>;
pub type LogisticModelF64 = selection::LogisticModel<f64>;
pub type LogisticModelF32 = selection::LogisticModel<f32>;
pub type GridRunF64 = train::GridRun<f64>;
pub type GridRunF32 = train::GridRun<f32>;
