use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::{ClassCatalog, IGNORE};
use crate::error::{Error, Result};
use crate::label::{is_object, LabelMap};

/// Annotations for a subset of frames, keyed by 0-based frame index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    frames: BTreeMap<usize, LabelMap>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frame: usize, labels: LabelMap) -> Option<LabelMap> {
        self.frames.insert(frame, labels)
    }

    pub fn get(&self, frame: usize) -> Option<&LabelMap> {
        self.frames.get(&frame)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &LabelMap)> {
        self.frames.iter().map(|(&f, m)| (f, m))
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Keeps every `step`-th frame starting at frame 0.
    pub fn subsample(&self, step: usize) -> Self {
        let step = step.max(1);
        Self {
            frames: self
                .frames
                .iter()
                .filter(|(&f, _)| f % step == 0)
                .map(|(&f, m)| (f, m.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(usize, LabelMap)> for GroundTruth {
    fn from_iter<T: IntoIterator<Item = (usize, LabelMap)>>(iter: T) -> Self {
        Self {
            frames: iter.into_iter().collect(),
        }
    }
}

/// Intersection and union pixel counts of one class, IGNORE ground truth excluded.
fn class_counts(pred: &LabelMap, gt: &LabelMap, class_id: u8) -> (usize, usize) {
    let mut inter = 0;
    let mut union = 0;
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        if g == IGNORE {
            continue;
        }
        let (in_p, in_g) = (p == class_id, g == class_id);
        inter += usize::from(in_p && in_g);
        union += usize::from(in_p || in_g);
    }
    (inter, union)
}

/// IoU of one class's pixel sets; 1 when neither map contains the class.
pub fn class_iou(pred: &LabelMap, gt: &LabelMap, class_id: u8) -> Result<f64> {
    gt.ensure_dims(pred.dims())?;
    let (inter, union) = class_counts(pred, gt, class_id);
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassIou {
    pub class_id: u8,
    pub name: String,
    pub iou: f64,
    pub intersection: usize,
    pub union: usize,
}

/// Per-class IoU pooled over annotated frames, and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoUReport {
    pub classes: Vec<ClassIou>,
    /// Mean over the reported classes; `None` when no object class is annotated.
    pub mean: Option<f64>,
    pub frames_evaluated: usize,
}

/// Scores a predicted sequence against sparse ground truth.
///
/// Each object class that appears in the ground truth gets the ratio of its
/// intersection and union pixel counts summed over all annotated frames.
pub fn evaluate_video(
    preds: &[LabelMap],
    gt: &GroundTruth,
    catalog: &ClassCatalog,
) -> Result<IoUReport> {
    let mut present = BTreeSet::new();
    for (frame, map) in gt.iter() {
        let pred = preds.get(frame).ok_or(Error::MissingPrediction { frame })?;
        map.ensure_dims(pred.dims())?;
        map.validate(catalog.len())?;
        present.extend(map.as_slice().iter().copied().filter(|&l| is_object(l)));
    }

    let mut classes = Vec::with_capacity(present.len());
    for class_id in present {
        let (mut inter, mut union) = (0, 0);
        for (frame, map) in gt.iter() {
            let (i, u) = class_counts(&preds[frame], map, class_id);
            inter += i;
            union += u;
        }
        classes.push(ClassIou {
            class_id,
            name: catalog.name(class_id).unwrap_or_default().into(),
            iou: inter as f64 / union as f64,
            intersection: inter,
            union,
        });
    }
    let mean = (!classes.is_empty())
        .then(|| classes.iter().map(|c| c.iou).sum::<f64>() / classes.len() as f64);
    Ok(IoUReport {
        classes,
        mean,
        frames_evaluated: gt.len(),
    })
}
