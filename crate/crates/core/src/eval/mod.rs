//! Label-map post-processing and scoring.

mod metrics;
mod morph;

pub use metrics::{class_iou, evaluate_video, ClassIou, GroundTruth, IoUReport};
pub use morph::{close_mask, refine_morphological};
