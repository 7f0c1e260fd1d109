//! Batch self-adaptation.
//!
//! All frames are scanned with the original model. Every frame whose global
//! map holds a confident object region joins the training set. Within each
//! window of `window_length` frames, the frame with the highest local-map
//! confidence also joins (as its local map) unless it already contributed a
//! global map. The model is fine-tuned once on the collected set and then
//! re-applied to every frame.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::image::Image;
use crate::label::LabelMap;
use crate::model::{Segmenter, TrainConfig, TrainingExample};
use crate::select::{build_candidate_maps, CandidateMaps, SelectionThresholds, WeakLabelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub frame: usize,
    pub kind: EntryKind,
    pub confidence: f64,
    pub labels: LabelMap,
}

/// Pseudo-labeled frames collected for fine-tuning, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelfAdaptingDataset {
    entries: Vec<DatasetEntry>,
    global_frames: BTreeSet<usize>,
    local_frames: BTreeSet<usize>,
}

impl SelfAdaptingDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a frame's global map. Returns false if the frame already has one.
    pub fn push_global(&mut self, frame: usize, labels: LabelMap, confidence: f64) -> bool {
        if !self.global_frames.insert(frame) {
            return false;
        }
        self.entries.push(DatasetEntry {
            frame,
            kind: EntryKind::Global,
            confidence,
            labels,
        });
        true
    }

    /// Adds a frame's local map unless the frame already has any entry.
    pub fn push_local(&mut self, frame: usize, labels: LabelMap, confidence: f64) -> bool {
        if self.global_frames.contains(&frame) || !self.local_frames.insert(frame) {
            return false;
        }
        self.entries.push(DatasetEntry {
            frame,
            kind: EntryKind::Local,
            confidence,
            labels,
        });
        true
    }

    pub fn has_global(&self, frame: usize) -> bool {
        self.global_frames.contains(&frame)
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Training examples pairing each entry with its frame image.
    pub fn examples<'a>(&'a self, frames: &'a [Image]) -> Vec<TrainingExample<'a>> {
        self.entries
            .iter()
            .map(|e| TrainingExample::new(e.frame, &frames[e.frame], &e.labels))
            .collect()
    }
}

/// Best local candidate of the current window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowState {
    pub best_confidence: f64,
    pub best_frame: Option<usize>,
    best_map: Option<LabelMap>,
    pub window_length: usize,
}

impl WindowState {
    pub fn new(window_length: usize) -> Self {
        Self {
            best_confidence: 0.0,
            best_frame: None,
            best_map: None,
            window_length,
        }
    }

    /// Keeps `local_map` if its confidence strictly beats the current best.
    pub fn offer(&mut self, frame: usize, local_map: &LabelMap, confidence: f64) {
        if confidence > self.best_confidence {
            self.best_confidence = confidence;
            self.best_frame = Some(frame);
            self.best_map = Some(local_map.clone());
        }
    }

    pub fn best_map(&self) -> Option<&LabelMap> {
        self.best_map.as_ref()
    }

    /// True when the 0-based `frame` ends a window (1-based index divisible
    /// by the window length).
    pub fn is_boundary(&self, frame: usize) -> bool {
        (frame + 1).is_multiple_of(self.window_length)
    }

    /// Clears the best confidence. The best frame is kept, as in a literal
    /// reading of the selection loop, but is only acted on while the
    /// confidence is positive.
    pub fn reset(&mut self) {
        self.best_confidence = 0.0;
    }
}

/// Outcome of closing one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub end_frame: usize,
    pub best_frame: Option<usize>,
    pub best_confidence: f64,
    pub added: bool,
}

/// Closes a window: adds the best local map when its frame has no global
/// entry and some candidate was seen, then resets the best confidence.
pub fn flush_window(
    state: &mut WindowState,
    dataset: &mut SelfAdaptingDataset,
    end_frame: usize,
) -> WindowRecord {
    let mut record = WindowRecord {
        end_frame,
        best_frame: None,
        best_confidence: state.best_confidence,
        added: false,
    };
    if state.best_confidence > 0.0 {
        record.best_frame = state.best_frame;
        if let (Some(frame), Some(map)) = (state.best_frame, state.best_map.take()) {
            if !dataset.has_global(frame) {
                record.added = dataset.push_local(frame, map, state.best_confidence);
            }
        }
    }
    state.reset();
    state.best_map = None;
    record
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub thresholds: SelectionThresholds,
    pub train: TrainConfig,
    pub window_length: usize,
    /// Also close a trailing window shorter than `window_length`.
    pub flush_tail: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            thresholds: SelectionThresholds::default(),
            train: TrainConfig::default(),
            window_length: 30,
            flush_tail: false,
        }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> crate::Result<()> {
        self.thresholds.validate()?;
        self.train.validate()?;
        if self.window_length == 0 {
            return Err(Error::Config("window length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Confidences of one frame's candidate maps under the original model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame: usize,
    pub global_confidence: f64,
    pub local_confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub frame: usize,
    pub kind: EntryKind,
    pub confidence: f64,
}

/// What the selection pass did, for auditing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub entries: Vec<EntryRecord>,
    pub windows: Vec<WindowRecord>,
    pub frames: Vec<FrameScore>,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// Argmax labels of the adapted model.
    pub labels: Vec<LabelMap>,
    /// Argmax labels of the original model.
    pub baseline: Vec<LabelMap>,
    pub dataset: SelfAdaptingDataset,
    pub report: DatasetReport,
}

/// Runs one frame through the model and the candidate-map builder.
pub(crate) fn score_frame<S: Segmenter>(
    segmenter: &mut S,
    frame: usize,
    image: &Image,
    weak: &WeakLabelSet,
    thresholds: &SelectionThresholds,
) -> Result<(LabelMap, CandidateMaps), S::Error> {
    let prob = segmenter.predict(frame, image)?;
    prob.ensure_dims(image.dims()).map_err(S::Error::from)?;
    let labels = prob.argmax_labels();
    let maps = build_candidate_maps(&prob, &labels, weak, thresholds)?;
    Ok((labels, maps))
}

/// Selects the self-adapting dataset with the current model, fine-tunes once
/// and relabels every frame.
///
/// When nothing is selected the model is left untouched and the output labels
/// are the baseline labels.
pub fn run_batch<S: Segmenter>(
    segmenter: &mut S,
    frames: &[Image],
    weak: &WeakLabelSet,
    config: &BatchConfig,
) -> Result<BatchOutcome, S::Error> {
    config.validate()?;
    if frames.is_empty() {
        return Err(Error::Invalid("video has no frames".into()).into());
    }

    let mut dataset = SelfAdaptingDataset::new();
    let mut window = WindowState::new(config.window_length);
    let mut report = DatasetReport::default();
    let mut baseline = Vec::with_capacity(frames.len());

    for (frame, image) in frames.iter().enumerate() {
        let (labels, maps) = score_frame(segmenter, frame, image, weak, &config.thresholds)?;
        baseline.push(labels);
        report.frames.push(FrameScore {
            frame,
            global_confidence: maps.global_confidence,
            local_confidence: maps.local_confidence,
        });
        if maps.global_confidence > 0.0 {
            dataset.push_global(frame, maps.global_map, maps.global_confidence);
        }
        window.offer(frame, &maps.local_map, maps.local_confidence);
        if window.is_boundary(frame) {
            report
                .windows
                .push(flush_window(&mut window, &mut dataset, frame));
        }
    }
    if config.flush_tail && !frames.len().is_multiple_of(config.window_length) {
        report
            .windows
            .push(flush_window(&mut window, &mut dataset, frames.len() - 1));
    }

    report.entries = dataset
        .entries()
        .iter()
        .map(|e| EntryRecord {
            frame: e.frame,
            kind: e.kind,
            confidence: e.confidence,
        })
        .collect();

    let labels = if dataset.is_empty() {
        baseline.clone()
    } else {
        segmenter.fine_tune(&dataset.examples(frames), &config.train)?;
        let mut out = Vec::with_capacity(frames.len());
        for (frame, image) in frames.iter().enumerate() {
            out.push(segmenter.predict(frame, image)?.argmax_labels());
        }
        out
    };

    Ok(BatchOutcome {
        labels,
        baseline,
        dataset,
        report,
    })
}
