use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::flow::FlowField;
use super::warp::{object_overlap, warp_labels};
use crate::error::{Error, Result};
use crate::label::LabelMap;

/// Which result sequence a frame takes its labels from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Batch = 0,
    Online = 1,
}

impl Choice {
    pub const ALL: [Choice; 2] = [Choice::Batch, Choice::Online];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombineConfig {
    /// Bonus for a batch-to-batch transition.
    pub epsilon: f64,
}

impl Default for CombineConfig {
    fn default() -> Self {
        Self { epsilon: 0.02 }
    }
}

/// Overlaps of one frame pair, indexed `[choice at f][choice at f + 1]`.
pub type OverlapTable = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSequence {
    pub choices: Vec<Choice>,
    pub objective: f64,
}

/// Consistency of a transition: the overlap, plus `epsilon` when both frames
/// take the batch result.
pub fn consistency_score(
    current: Choice,
    next: Choice,
    overlap: f64,
    config: &CombineConfig,
) -> f64 {
    if current == Choice::Batch && next == Choice::Batch {
        overlap + config.epsilon
    } else {
        overlap
    }
}

/// Sum of transition scores of a choice sequence, accumulated front to back.
pub fn sequence_objective(
    choices: &[Choice],
    overlaps: &[OverlapTable],
    config: &CombineConfig,
) -> Result<f64> {
    if choices.len() != overlaps.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: overlaps.len() + 1,
            found: choices.len(),
        });
    }
    Ok(choices
        .windows(2)
        .zip(overlaps)
        .fold(0.0, |acc, (pair, table)| {
            acc + consistency_score(
                pair[0],
                pair[1],
                table[pair[0].index()][pair[1].index()],
                config,
            )
        }))
}

/// Exact maximizer of the summed transition scores over all choice sequences.
///
/// `overlaps` has one table per frame pair, so the result has
/// `overlaps.len() + 1` choices. Ties prefer batch at every step; a single
/// frame takes batch.
pub fn select_from_overlaps(
    overlaps: &[OverlapTable],
    config: &CombineConfig,
) -> SelectionSequence {
    let n = overlaps.len() + 1;
    // score[s]: best prefix sum ending in state s; back[f][s]: predecessor.
    let mut score = [0.0f64; 2];
    let mut back: Vec<[Choice; 2]> = Vec::with_capacity(n - 1);
    for table in overlaps {
        let mut next = [0.0; 2];
        let mut from = [Choice::Batch; 2];
        for to in Choice::ALL {
            let via = |prev: Choice| {
                score[prev.index()]
                    + consistency_score(prev, to, table[prev.index()][to.index()], config)
            };
            let (b, o) = (via(Choice::Batch), via(Choice::Online));
            if b >= o {
                next[to.index()] = b;
                from[to.index()] = Choice::Batch;
            } else {
                next[to.index()] = o;
                from[to.index()] = Choice::Online;
            }
        }
        score = next;
        back.push(from);
    }

    let mut state = if score[0] >= score[1] {
        Choice::Batch
    } else {
        Choice::Online
    };
    let objective = score[state.index()];
    let mut choices = alloc::vec![Choice::Batch; n];
    choices[n - 1] = state;
    for f in (0..n - 1).rev() {
        state = back[f][state.index()];
        choices[f] = state;
    }
    SelectionSequence { choices, objective }
}

/// Overlap tables for every consecutive frame pair of the two sequences.
///
/// `flows[f]` is the backward flow from frame `f + 1` to frame `f`.
pub fn overlap_tables(
    batch: &[LabelMap],
    online: &[LabelMap],
    flows: &[FlowField],
) -> Result<Vec<OverlapTable>> {
    if batch.len() != online.len() {
        return Err(Error::LengthMismatch {
            expected: batch.len(),
            found: online.len(),
        });
    }
    if batch.is_empty() {
        return Err(Error::Invalid("cannot combine empty sequences".into()));
    }
    if flows.len() != batch.len() - 1 {
        return Err(Error::LengthMismatch {
            expected: batch.len() - 1,
            found: flows.len(),
        });
    }
    let seqs = [batch, online];
    let mut tables = Vec::with_capacity(flows.len());
    for (f, flow) in flows.iter().enumerate() {
        let warped = [
            warp_labels(&batch[f], flow)?,
            warp_labels(&online[f], flow)?,
        ];
        let mut table = [[0.0; 2]; 2];
        for from in Choice::ALL {
            for to in Choice::ALL {
                table[from.index()][to.index()] =
                    object_overlap(&warped[from.index()], &seqs[to.index()][f + 1])?;
            }
        }
        tables.push(table);
    }
    Ok(tables)
}

/// Picks batch or online labels per frame for the most motion-consistent sequence.
pub fn select_models(
    batch: &[LabelMap],
    online: &[LabelMap],
    flows: &[FlowField],
    config: &CombineConfig,
) -> Result<SelectionSequence> {
    if !(config.epsilon >= 0.0) {
        return Err(Error::Config(alloc::format!(
            "epsilon must be >= 0, got {}",
            config.epsilon
        )));
    }
    let tables = overlap_tables(batch, online, flows)?;
    Ok(select_from_overlaps(&tables, config))
}

/// The label sequence a selection describes.
pub fn combine_labels(
    batch: &[LabelMap],
    online: &[LabelMap],
    selection: &SelectionSequence,
) -> Result<Vec<LabelMap>> {
    if batch.len() != selection.choices.len() || online.len() != selection.choices.len() {
        return Err(Error::LengthMismatch {
            expected: selection.choices.len(),
            found: batch.len().min(online.len()),
        });
    }
    Ok(selection
        .choices
        .iter()
        .enumerate()
        .map(|(f, c)| match c {
            Choice::Batch => batch[f].clone(),
            Choice::Online => online[f].clone(),
        })
        .collect())
}
