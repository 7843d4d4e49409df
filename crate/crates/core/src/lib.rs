//! Advertorial detection and disclosure auditing.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

pub mod corpus;
pub mod darkpattern;
pub mod features;
pub mod forest;
pub mod net;
pub mod normalize;
pub mod page;
pub mod pipeline;
pub mod scalar;
pub mod selector;
pub mod structure;
pub mod textmetrics;

pub use scalar::Scalar;

pub type Forest = forest::ForestModel<f64>;
pub type Forest32 = forest::ForestModel<f32>;
pub type Dataset = forest::Dataset<f64>;
pub type Dataset32 = forest::Dataset<f32>;
pub type Vector = features::FeatureVector<f64>;
pub type Vector32 = features::FeatureVector<f32>;
pub type Image = corpus::GrayImage<f64>;
pub type Image32 = corpus::GrayImage<f32>;
