//! Confident-region selection and pseudo-label map construction.
//!
//! A frame's argmax labels are split into 8-connected same-class regions.
//! Regions whose class is allowed by the video's weak labels are copied into
//! a *local* candidate map; those whose mean class probability also exceeds
//! the object threshold go into the *global* map. Pixels that are confidently
//! background are then written into both maps, overriding object labels.
//! Everything else stays [`IGNORE`](crate::IGNORE).

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::BACKGROUND;
use crate::error::{Error, Result};
use crate::label::{is_object, LabelMap};
use crate::prob::ProbabilityVolume;

/// A maximal 8-connected set of pixels sharing one object class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub class_id: u8,
    /// Row-major pixel indices, ascending.
    pub pixels: Vec<usize>,
}

/// Object classes known to appear in a video.
///
/// In unsupervised mode every class passes the membership test.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WeakLabelSet {
    classes: BTreeSet<u8>,
    unsupervised: bool,
}

impl WeakLabelSet {
    pub fn new(classes: impl IntoIterator<Item = u8>) -> Result<Self> {
        let classes: BTreeSet<u8> = classes.into_iter().collect();
        if let Some(&bad) = classes.iter().find(|&&c| !is_object(c)) {
            return Err(Error::Invalid(alloc::format!(
                "weak label {bad} is not an object class"
            )));
        }
        Ok(Self {
            classes,
            unsupervised: false,
        })
    }

    pub fn unsupervised() -> Self {
        Self {
            classes: BTreeSet::new(),
            unsupervised: true,
        }
    }

    pub fn is_unsupervised(&self) -> bool {
        self.unsupervised
    }

    pub fn classes(&self) -> impl Iterator<Item = u8> + '_ {
        self.classes.iter().copied()
    }

    pub fn contains(&self, class_id: u8) -> bool {
        self.unsupervised || self.classes.contains(&class_id)
    }

    /// Checks the classes against a catalog size.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        match self.classes.iter().find(|&&c| c as usize >= num_classes) {
            Some(c) => Err(Error::Invalid(alloc::format!(
                "weak label {c} is outside a {num_classes}-class catalog"
            ))),
            None => Ok(()),
        }
    }
}

/// Object (`t_o`) and background (`t_b`) confidence thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionThresholds {
    pub object: f64,
    pub background: f64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        Self {
            object: 0.75,
            background: 0.8,
        }
    }
}

impl SelectionThresholds {
    /// Both thresholds must lie in `(0, 1]`. A threshold of 1 is accepted and
    /// can never be exceeded, which disables selection.
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("object", self.object), ("background", self.background)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(alloc::format!(
                    "{name} threshold must be in (0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Pseudo-label maps for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMaps {
    pub global_map: LabelMap,
    pub local_map: LabelMap,
    pub global_confidence: f64,
    pub local_confidence: f64,
}

/// Disjoint-set forest over pixel indices.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root so roots are first-in-scan-order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// 8-connected components of every object class.
///
/// Regions come out ordered by their first pixel in raster order. Background
/// and IGNORE pixels belong to no region.
pub fn connected_components(labels: &LabelMap) -> Vec<Region> {
    let (w, h) = labels.dims();
    let lab = labels.as_slice();
    let mut uf = UnionFind::new(lab.len());

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let c = lab[i];
            if !is_object(c) {
                continue;
            }
            // Previously scanned neighbors: W, NW, N, NE.
            if x > 0 && lab[i - 1] == c {
                uf.union(i, i - 1);
            }
            if y > 0 {
                let up = i - w;
                if lab[up] == c {
                    uf.union(i, up);
                }
                if x > 0 && lab[up - 1] == c {
                    uf.union(i, up - 1);
                }
                if x + 1 < w && lab[up + 1] == c {
                    uf.union(i, up + 1);
                }
            }
        }
    }

    let mut slot_of_root = vec![usize::MAX; lab.len()];
    let mut regions: Vec<Region> = Vec::new();
    for (i, &c) in lab.iter().enumerate() {
        if !is_object(c) {
            continue;
        }
        let root = uf.find(i);
        if slot_of_root[root] == usize::MAX {
            slot_of_root[root] = regions.len();
            regions.push(Region {
                class_id: c,
                pixels: Vec::new(),
            });
        }
        regions[slot_of_root[root]].pixels.push(i);
    }
    regions
}

/// Mean probability of the region's class over its pixels.
pub fn region_confidence(prob: &ProbabilityVolume, region: &Region) -> Result<f64> {
    if region.pixels.is_empty() {
        return Err(Error::Invalid("region has no pixels".into()));
    }
    if let Some(&i) = region.pixels.iter().find(|&&i| i >= prob.num_pixels()) {
        return Err(Error::Invalid(alloc::format!(
            "region pixel {i} outside a {}-pixel volume",
            prob.num_pixels()
        )));
    }
    let sum: f64 = region
        .pixels
        .iter()
        .map(|&i| prob.prob(i, region.class_id))
        .sum();
    Ok(sum / region.pixels.len() as f64)
}

/// Mean probability of the assigned class over object-labeled pixels, or 0
/// when the map has none.
pub fn map_confidence(prob: &ProbabilityVolume, labels: &LabelMap) -> Result<f64> {
    labels.ensure_dims(prob.dims())?;
    labels.validate(prob.num_classes())?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &l) in labels.as_slice().iter().enumerate() {
        if is_object(l) {
            sum += prob.prob(i, l);
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Builds the global and local pseudo-label maps of one frame.
///
/// `labels` is the frame's argmax map of `prob`.
pub fn build_candidate_maps(
    prob: &ProbabilityVolume,
    labels: &LabelMap,
    weak: &WeakLabelSet,
    thresholds: &SelectionThresholds,
) -> Result<CandidateMaps> {
    labels.ensure_dims(prob.dims())?;
    labels.validate(prob.num_classes())?;
    let (w, h) = labels.dims();
    let mut global_map = LabelMap::ignored(w, h);
    let mut local_map = LabelMap::ignored(w, h);

    for region in connected_components(labels) {
        if !weak.contains(region.class_id) {
            continue;
        }
        let confident = region_confidence(prob, &region)? > thresholds.object;
        for &i in &region.pixels {
            local_map.as_mut_slice()[i] = region.class_id;
            if confident {
                global_map.as_mut_slice()[i] = region.class_id;
            }
        }
    }

    for i in 0..prob.num_pixels() {
        if prob.prob(i, BACKGROUND) > thresholds.background {
            global_map.as_mut_slice()[i] = BACKGROUND;
            local_map.as_mut_slice()[i] = BACKGROUND;
        }
    }

    let global_confidence = map_confidence(prob, &global_map)?;
    let local_confidence = map_confidence(prob, &local_map)?;
    Ok(CandidateMaps {
        global_map,
        local_map,
        global_confidence,
        local_confidence,
    })
}
