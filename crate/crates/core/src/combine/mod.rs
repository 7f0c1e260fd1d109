//! Motion-consistent fusion of the batch and online label sequences.
//!
//! For each consecutive frame pair, the labels of frame `f` are warped onto
//! frame `f + 1` with backward optical flow and compared with the labels of
//! `f + 1`. A two-state dynamic program then picks, per frame, the batch or
//! online result maximizing the summed agreement, with a small bonus for
//! staying on the batch result.

mod dp;
mod flow;
mod warp;

pub use dp::{
    combine_labels, consistency_score, overlap_tables, select_from_overlaps, select_models,
    sequence_objective, Choice, CombineConfig, OverlapTable, SelectionSequence,
};
pub use flow::{estimate_flow, FlowField};
pub use warp::{object_overlap, warp_labels};
