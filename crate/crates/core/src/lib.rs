//! Seven-way vaccine narrative classification.
//!
//! The crate covers the full desk-scale pipeline: corpus handling and
//! stratified folds, tweet-style preprocessing, keyword/hashtag candidate
//! collection for data augmentation, text encoders, a classification-aware
//! neural topic model (stacked asymmetric VAE with a joint classifier) plus
//! baseline models, explanation extraction, and the evaluation protocols.

pub mod augment;
pub mod checkpoint;
pub mod corpus;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod explain;
pub mod model;
pub mod preprocess;
pub mod synthetic;
pub mod cantm;
pub mod baselines;

pub(crate) mod nn;

pub use error::{Error, Result};
