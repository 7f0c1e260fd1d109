//! Self-adaptation of a per-pixel classifier to a single video.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation. File formats, the external segmenter protocol and the
//! command-line driver live in the `vidadapt` crate.
//!
//! The pipeline has three stages:
//!
//! 1. [`select`] turns per-frame class probabilities into pseudo-label maps,
//!    keeping only confidently estimated regions and background.
//! 2. [`batch`] and [`online`] collect those maps into a training set and
//!    fine-tune the model on it, either once after scanning the whole video
//!    or periodically while streaming.
//! 3. [`combine`] picks, per frame, the batch or online result so that the
//!    chosen sequence is most consistent under optical flow.
//!
//! [`eval`] provides morphological refinement and IoU scoring, [`synth`]
//! renders deterministic test videos with ground truth.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod batch;
pub mod catalog;
pub mod combine;
pub mod error;
pub mod eval;
pub mod image;
pub mod label;
pub mod model;
pub mod online;
pub mod prob;
pub mod select;
pub mod synth;

pub use catalog::{ClassCatalog, BACKGROUND, IGNORE};
pub use error::{Error, Result};
pub use image::Image;
pub use label::LabelMap;
pub use model::{ModelParameters, ReferenceSegmenter, Segmenter, TrainConfig, TrainingExample};
pub use prob::ProbabilityVolume;
