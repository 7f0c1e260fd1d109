//! Online self-adaptation.
//!
//! Frames are processed in order with the current model. Globally confident
//! maps go into a long-term memory that keeps the highest-confidence entries;
//! the best local map of every short window goes into a FIFO short-term
//! memory. Every `update_period` frames the model is fine-tuned on both
//! memories and the updated model is used from the next frame on.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::batch::{score_frame, FrameScore, WindowState};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::label::LabelMap;
use crate::model::{Segmenter, TrainConfig, TrainingExample};
use crate::select::{SelectionThresholds, WeakLabelSet};

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub frame: usize,
    pub confidence: f64,
    pub labels: LabelMap,
}

/// Long-term (confidence-ranked) and short-term (FIFO) pseudo-label memories.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineMemory {
    // Insertion order.
    long_term: Vec<MemoryEntry>,
    short_term: VecDeque<MemoryEntry>,
    long_capacity: usize,
    short_capacity: usize,
}

impl OnlineMemory {
    pub fn new(long_capacity: usize, short_capacity: usize) -> Result<Self> {
        if long_capacity == 0 || short_capacity == 0 {
            return Err(Error::Config("memory capacities must be at least 1".into()));
        }
        Ok(Self {
            long_term: Vec::new(),
            short_term: VecDeque::new(),
            long_capacity,
            short_capacity,
        })
    }

    /// Inserts a global map and returns the entry evicted to stay within
    /// capacity, if any.
    ///
    /// The evicted entry has the lowest confidence; among equal lowest
    /// confidences the most recently inserted one goes, so the memory always
    /// holds the top entries of a stable sort by confidence.
    pub fn insert_global(
        &mut self,
        frame: usize,
        labels: LabelMap,
        confidence: f64,
    ) -> Result<Option<MemoryEntry>> {
        if !(confidence > 0.0) {
            return Err(Error::Invalid(alloc::format!(
                "long-term entries need positive confidence, got {confidence}"
            )));
        }
        self.long_term.push(MemoryEntry {
            frame,
            confidence,
            labels,
        });
        if self.long_term.len() <= self.long_capacity {
            return Ok(None);
        }
        let mut victim = 0;
        for (i, e) in self.long_term.iter().enumerate() {
            if e.confidence <= self.long_term[victim].confidence {
                victim = i;
            }
        }
        Ok(Some(self.long_term.remove(victim)))
    }

    /// Appends a local map unless `frame` is already in long-term memory.
    /// Returns whether it was inserted.
    pub fn insert_local(&mut self, frame: usize, labels: LabelMap, confidence: f64) -> bool {
        if self.contains_long(frame) {
            return false;
        }
        self.short_term.push_back(MemoryEntry {
            frame,
            confidence,
            labels,
        });
        while self.short_term.len() > self.short_capacity {
            self.short_term.pop_front();
        }
        true
    }

    pub fn contains_long(&self, frame: usize) -> bool {
        self.long_term.iter().any(|e| e.frame == frame)
    }

    pub fn long_term(&self) -> &[MemoryEntry] {
        &self.long_term
    }

    pub fn short_term(&self) -> impl ExactSizeIterator<Item = &MemoryEntry> {
        self.short_term.iter()
    }

    pub fn len(&self) -> usize {
        self.long_term.len() + self.short_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Long-term entries, then short-term entries, each in insertion order.
    pub fn examples<'a>(&'a self, frames: &'a [Image]) -> Vec<TrainingExample<'a>> {
        self.long_term
            .iter()
            .chain(self.short_term.iter())
            .map(|e| TrainingExample::new(e.frame, &frames[e.frame], &e.labels))
            .collect()
    }

    fn snapshot(&self, frame: usize, updated: bool) -> MemorySnapshot {
        let rec = |e: &MemoryEntry| MemoryRecord {
            frame: e.frame,
            confidence: e.confidence,
        };
        MemorySnapshot {
            frame,
            long_term: self.long_term.iter().map(rec).collect(),
            short_term: self.short_term.iter().map(rec).collect(),
            updated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    pub thresholds: SelectionThresholds,
    pub train: TrainConfig,
    pub long_capacity: usize,
    pub short_capacity: usize,
    /// Length of the windows over which the best local map is picked.
    pub local_window: usize,
    /// Fine-tune every this many frames.
    pub update_period: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            thresholds: SelectionThresholds::default(),
            train: TrainConfig::default(),
            long_capacity: 10,
            short_capacity: 5,
            local_window: 5,
            update_period: 30,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.train.validate()?;
        if self.local_window == 0 || self.update_period == 0 {
            return Err(Error::Config(
                "window and update periods must be at least 1".into(),
            ));
        }
        if self.long_capacity == 0 || self.short_capacity == 0 {
            return Err(Error::Config("memory capacities must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub frame: usize,
    pub confidence: f64,
}

/// Memory contents after a window or update boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySnapshot {
    pub frame: usize,
    pub long_term: Vec<MemoryRecord>,
    pub short_term: Vec<MemoryRecord>,
    /// Whether an update was due at this frame.
    pub updated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OnlineReport {
    pub frames: Vec<FrameScore>,
    pub snapshots: Vec<MemorySnapshot>,
    /// Frames at which an update was due, with the number of training examples.
    pub updates: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    /// Labels as predicted when each frame arrived.
    pub labels: Vec<LabelMap>,
    pub memory: OnlineMemory,
    pub report: OnlineReport,
}

/// Streams the video through the segmenter, adapting it as it goes.
pub fn run_online<S: Segmenter>(
    segmenter: &mut S,
    frames: &[Image],
    weak: &WeakLabelSet,
    config: &OnlineConfig,
) -> core::result::Result<OnlineOutcome, S::Error> {
    config.validate()?;
    if frames.is_empty() {
        return Err(Error::Invalid("video has no frames".into()).into());
    }
    let mut memory = OnlineMemory::new(config.long_capacity, config.short_capacity)?;
    let mut window = WindowState::new(config.local_window);
    let mut report = OnlineReport::default();
    let mut labels = Vec::with_capacity(frames.len());

    for (frame, image) in frames.iter().enumerate() {
        let (argmax, maps) = score_frame(segmenter, frame, image, weak, &config.thresholds)?;
        labels.push(argmax);
        report.frames.push(FrameScore {
            frame,
            global_confidence: maps.global_confidence,
            local_confidence: maps.local_confidence,
        });

        if maps.global_confidence > 0.0 {
            memory.insert_global(frame, maps.global_map, maps.global_confidence)?;
        }
        window.offer(frame, &maps.local_map, maps.local_confidence);

        let ordinal = frame + 1;
        let window_end = ordinal.is_multiple_of(config.local_window);
        let update_due = ordinal.is_multiple_of(config.update_period);

        if window_end {
            if window.best_confidence > 0.0 {
                if let (Some(best), Some(map)) = (window.best_frame, window.best_map()) {
                    memory.insert_local(best, map.clone(), window.best_confidence);
                }
            }
            window = WindowState::new(config.local_window);
        }
        if update_due {
            let examples = memory.examples(frames);
            if !examples.is_empty() {
                segmenter.fine_tune(&examples, &config.train)?;
            }
            report.updates.push((frame, examples.len()));
        }
        if window_end || update_due {
            report.snapshots.push(memory.snapshot(frame, update_due));
        }
    }

    Ok(OnlineOutcome {
        labels,
        memory,
        report,
    })
}
