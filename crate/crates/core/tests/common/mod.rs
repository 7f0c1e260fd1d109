//! Independent reference implementations and instance generators.
//!
//! Each `check_*` function runs a batch of randomized comparisons between the
//! library and a straightforward oracle and returns a short summary, or a
//! description of the first mismatch.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vidadapt_core::batch::{run_batch, BatchConfig, EntryKind};
use vidadapt_core::combine::{select_from_overlaps, CombineConfig, OverlapTable};
use vidadapt_core::model::{
    masked_cross_entropy, masked_cross_entropy_gradient, predict, FEATURE_DIM,
};
use vidadapt_core::online::{run_online, OnlineConfig, OnlineMemory};
use vidadapt_core::select::{connected_components, SelectionThresholds, WeakLabelSet};
use vidadapt_core::{
    Error, Image, LabelMap, ModelParameters, ProbabilityVolume, Segmenter, TrainConfig,
    TrainingExample,
};

pub const BG: u8 = 0;
pub const IGN: u8 = 255;

pub type Check = Result<String, String>;

// ---------------------------------------------------------------------------
// Connected components

/// Partition of object pixels into 8-connected same-class groups, by
/// depth-first flood fill.
pub fn flood_fill_partition(labels: &[u8], w: usize, h: usize) -> BTreeSet<(u8, Vec<usize>)> {
    let mut seen = vec![false; labels.len()];
    let mut out = BTreeSet::new();
    for start in 0..labels.len() {
        let class = labels[start];
        if seen[start] || class == BG || class == IGN {
            continue;
        }
        let mut group = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            group.push(i);
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && labels[j] == class {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        group.sort_unstable();
        out.insert((class, group));
    }
    out
}

pub fn library_partition(map: &LabelMap) -> BTreeSet<(u8, Vec<usize>)> {
    connected_components(map)
        .into_iter()
        .map(|r| {
            let mut px = r.pixels.clone();
            px.sort_unstable();
            (r.class_id, px)
        })
        .collect()
}

/// Random map of `classes` labels (0 = background) with some IGNORE pixels
/// and blob structure from a smoothing pass.
pub fn random_label_map(rng: &mut ChaCha8Rng, w: usize, h: usize, classes: u8) -> Vec<u8> {
    let mut labels: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..classes)).collect();
    // Copy a random neighbor a few times to grow blobs of mixed shapes.
    for _ in 0..w * h {
        let i = rng.random_range(0..w * h);
        let (x, y) = (i % w, i / w);
        let nx = (x + rng.random_range(0..3)).saturating_sub(1).min(w - 1);
        let ny = (y + rng.random_range(0..3)).saturating_sub(1).min(h - 1);
        labels[i] = labels[ny * w + nx];
    }
    for l in labels.iter_mut() {
        if rng.random_bool(0.02) {
            *l = IGN;
        }
    }
    labels
}

pub fn check_components(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut regions = 0;
    for n in 0..instances {
        let classes = rng.random_range(2..=4);
        let labels = random_label_map(&mut rng, 32, 32, classes);
        let oracle = flood_fill_partition(&labels, 32, 32);
        let map = LabelMap::from_vec(32, 32, labels).map_err(|e| e.to_string())?;
        let lib = library_partition(&map);
        if lib != oracle {
            return Err(format!(
                "instance {n}: library found {} regions, flood fill {}",
                lib.len(),
                oracle.len()
            ));
        }
        regions += oracle.len();
    }
    Ok(format!("{instances} maps, {regions} regions identical"))
}

// ---------------------------------------------------------------------------
// Model selection

/// Sum of transition scores of one assignment, accumulated left to right.
pub fn assignment_score(bits: &[usize], overlaps: &[OverlapTable], epsilon: f64) -> f64 {
    let mut total = 0.0;
    for (f, table) in overlaps.iter().enumerate() {
        let (a, b) = (bits[f], bits[f + 1]);
        let bonus = if a == 0 && b == 0 { epsilon } else { 0.0 };
        total += table[a][b] + bonus;
    }
    total
}

/// Maximum objective over all 2^n assignments.
pub fn brute_force_objective(overlaps: &[OverlapTable], epsilon: f64) -> f64 {
    let n = overlaps.len() + 1;
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        let bits: Vec<usize> = (0..n).map(|f| ((mask >> f) & 1) as usize).collect();
        best = best.max(assignment_score(&bits, overlaps, epsilon));
    }
    best
}

pub fn random_overlaps(rng: &mut ChaCha8Rng, frames: usize) -> Vec<OverlapTable> {
    (1..frames)
        .map(|_| {
            let mut t = [[0.0; 2]; 2];
            for row in t.iter_mut() {
                for v in row.iter_mut() {
                    // Mix continuous values with a few exact ties.
                    *v = if rng.random_bool(0.2) {
                        [0.0, 0.5, 1.0][rng.random_range(0..3)]
                    } else {
                        rng.random::<f64>()
                    };
                }
            }
            t
        })
        .collect()
}

pub fn check_dp_exactness(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = std::time::Instant::now();
    for n in 0..instances {
        let frames = rng.random_range(1..=12);
        let overlaps = random_overlaps(&mut rng, frames);
        let config = CombineConfig { epsilon: 0.02 };
        let sel = select_from_overlaps(&overlaps, &config);
        let oracle = brute_force_objective(&overlaps, config.epsilon);
        if sel.objective != oracle {
            return Err(format!(
                "instance {n} ({frames} frames): dp {} vs brute force {oracle}",
                sel.objective
            ));
        }
        let bits: Vec<usize> = sel.choices.iter().map(|c| *c as usize).collect();
        if assignment_score(&bits, &overlaps, config.epsilon) != sel.objective {
            return Err(format!(
                "instance {n}: returned choices do not score the reported objective"
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 1.0 {
        return Err(format!("{instances} instances took {elapsed:?}"));
    }
    Ok(format!("{instances} instances exact in {elapsed:?}"))
}

pub fn check_dp_dominance(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..instances {
        let frames = rng.random_range(1..=12);
        let overlaps = random_overlaps(&mut rng, frames);
        let epsilon = 0.02;
        let sel = select_from_overlaps(&overlaps, &CombineConfig { epsilon });
        let all_batch = assignment_score(&vec![0; frames], &overlaps, epsilon);
        let all_online = assignment_score(&vec![1; frames], &overlaps, epsilon);
        if !(sel.objective >= all_batch && sel.objective >= all_online) {
            return Err(format!(
                "instance {n}: objective {} below all-batch {all_batch} or all-online {all_online}",
                sel.objective
            ));
        }
    }
    Ok(format!(
        "{instances} instances dominate both constant assignments"
    ))
}

// ---------------------------------------------------------------------------
// Loss gradient

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> ModelParameters {
    let weights = (0..k * FEATURE_DIM)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    ModelParameters::from_weights(k, weights).unwrap()
}

fn loss_at(k: usize, weights: Vec<f64>, image: &Image, target: &LabelMap) -> f64 {
    let params = ModelParameters::from_weights(k, weights).unwrap();
    masked_cross_entropy(&predict(&params, image).unwrap(), target).unwrap()
}

pub fn check_gradient(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < instances {
        let k = rng.random_range(2..=4);
        let (w, h) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let image = random_image(&mut rng, w, h);
        let params = random_params(&mut rng, k, 1.5);
        let labels: Vec<u8> = (0..w * h)
            .map(|_| {
                if rng.random_bool(0.2) {
                    IGN
                } else {
                    rng.random_range(0..k as u8)
                }
            })
            .collect();
        if labels.iter().all(|&l| l == IGN) {
            continue;
        }
        let target = LabelMap::from_vec(w, h, labels).unwrap();
        let (_, analytic) = masked_cross_entropy_gradient(&params, &image, &target, None)
            .map_err(|e| e.to_string())?;
        let base = params.weights().to_vec();
        let numeric: Vec<f64> = (0..base.len())
            .map(|j| {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[j] += step;
                minus[j] -= step;
                (loss_at(k, plus, &image, &target) - loss_at(k, minus, &image, &target))
                    / (2.0 * step)
            })
            .collect();
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        let rel = if norm == 0.0 { diff } else { diff / norm };
        if rel.is_nan() || rel >= 1e-4 {
            return Err(format!("instance {n}: relative error {rel:e}"));
        }
        worst = worst.max(rel);
        n += 1;
    }
    Ok(format!(
        "{instances} instances, worst relative error {worst:.2e}"
    ))
}

// ---------------------------------------------------------------------------
// IGNORE semantics

pub fn check_ignore_semantics(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..instances {
        let k = rng.random_range(2..=4);
        let (w, h) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let images: Vec<Image> = (0..3).map(|_| random_image(&mut rng, w, h)).collect();
        let ignored = LabelMap::ignored(w, h);
        let dataset: Vec<TrainingExample<'_>> = images
            .iter()
            .enumerate()
            .map(|(f, img)| TrainingExample::new(f, img, &ignored))
            .collect();
        let before = random_params(&mut rng, k, 1.0);
        let config = TrainConfig {
            learning_rate: 0.5,
            iterations: Some(7),
            seed: n as u64,
            ..TrainConfig::default()
        };
        let params = vidadapt_core::model::sgd_fine_tune(&before, &dataset, &config)
            .map_err(|e| e.to_string())?;
        let bitwise_equal = |a: &ModelParameters, b: &ModelParameters| {
            a.weights()
                .iter()
                .zip(b.weights())
                .chain(a.momentum().iter().zip(b.momentum()))
                .all(|(x, y)| x.to_bits() == y.to_bits())
        };
        let same = bitwise_equal(&params, &before);

        // Control: one labeled pixel is enough to move the parameters.
        let mut one = LabelMap::ignored(w, h);
        one.set(0, 0, 0);
        let control = [TrainingExample::new(0, &images[0], &one)];
        let moved = vidadapt_core::model::sgd_fine_tune(&before, &control, &config)
            .map_err(|e| e.to_string())?;
        if bitwise_equal(&moved, &before) {
            return Err(format!(
                "instance {n}: a labeled pixel left the parameters unchanged"
            ));
        }
        if !same {
            return Err(format!(
                "instance {n}: all-IGNORE fine-tuning changed the parameters"
            ));
        }

        // Loss ignores whatever sits at IGNORE pixels.
        let labels: Vec<u8> = (0..w * h)
            .map(|i| {
                if i == 0 || rng.random_bool(0.4) {
                    IGN
                } else {
                    rng.random_range(0..k as u8)
                }
            })
            .collect();
        let target = LabelMap::from_vec(w, h, labels.clone()).unwrap();
        let prob = predict(&before, &images[0]).unwrap();
        let mut perturbed = prob.as_slice().to_vec();
        for (i, &l) in labels.iter().enumerate() {
            if l == IGN {
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = raw.iter().sum();
                for c in 0..k {
                    perturbed[i * k + c] = raw[c] / s;
                }
            }
        }
        let perturbed = ProbabilityVolume::from_vec(w, h, k, perturbed).unwrap();
        let a = masked_cross_entropy(&prob, &target).unwrap();
        let b = masked_cross_entropy(&perturbed, &target).unwrap();
        if a.to_bits() != b.to_bits() {
            return Err(format!(
                "instance {n}: loss {a} changed to {b} under IGNORE-pixel perturbation"
            ));
        }
    }
    Ok(format!(
        "{instances} instances: parameters bitwise unchanged, loss exact"
    ))
}

// ---------------------------------------------------------------------------
// Memory queues

pub fn check_queues(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dummy = LabelMap::ignored(1, 1);
    let mut total = 0;
    for n in 0..instances {
        let long_cap = rng.random_range(1..=6);
        let short_cap = rng.random_range(1..=4);
        let mut mem = OnlineMemory::new(long_cap, short_cap).unwrap();
        let mut globals: Vec<(usize, f64)> = Vec::new();
        let mut locals: Vec<usize> = Vec::new();
        let steps = rng.random_range(1..=40);
        for frame in 0..steps {
            if rng.random_bool(0.6) {
                // Coarse confidence grid so ties are common.
                let conf = rng.random_range(1..=8) as f64 / 8.0;
                mem.insert_global(frame, dummy.clone(), conf)
                    .map_err(|e| e.to_string())?;
                globals.push((frame, conf));
            } else {
                let in_long = mem.contains_long(frame);
                let inserted = mem.insert_local(frame, dummy.clone(), 0.5);
                if inserted == in_long {
                    return Err(format!(
                        "instance {n}: local insertion guard wrong at frame {frame}"
                    ));
                }
                if inserted {
                    locals.push(frame);
                }
            }
            total += 1;

            let mut ranked = globals.clone();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            ranked.truncate(long_cap);
            let keep: BTreeSet<usize> = ranked.iter().map(|e| e.0).collect();
            let expected_long: Vec<(usize, f64)> = globals
                .iter()
                .copied()
                .filter(|e| keep.contains(&e.0))
                .collect();
            let actual_long: Vec<(usize, f64)> = mem
                .long_term()
                .iter()
                .map(|e| (e.frame, e.confidence))
                .collect();
            if actual_long != expected_long {
                return Err(format!(
                    "instance {n} step {frame}: long-term {actual_long:?} != {expected_long:?}"
                ));
            }
            let expected_short = &locals[locals.len().saturating_sub(short_cap)..];
            let actual_short: Vec<usize> = mem.short_term().map(|e| e.frame).collect();
            if actual_short != expected_short {
                return Err(format!(
                    "instance {n} step {frame}: short-term {actual_short:?} != {expected_short:?}"
                ));
            }
        }
    }
    Ok(format!("{instances} sequences, {total} insertions matched"))
}

// ---------------------------------------------------------------------------
// Scripted segmenter and algorithm replay

/// Serves predetermined probability volumes. After the n-th fine-tuning call
/// it serves `scripts[n]` (the last script once they run out).
pub struct ScriptedSegmenter {
    pub width: usize,
    pub height: usize,
    pub classes: usize,
    pub scripts: Vec<Vec<Vec<f64>>>,
    pub version: usize,
    pub tuned_on: Vec<Vec<usize>>,
}

impl ScriptedSegmenter {
    pub fn new(video: &ScriptedVideo) -> Self {
        Self {
            width: video.width,
            height: video.height,
            classes: video.classes,
            scripts: video.scripts.clone(),
            version: 0,
            tuned_on: Vec::new(),
        }
    }
}

impl Segmenter for ScriptedSegmenter {
    type Error = Error;

    fn predict(&mut self, frame: usize, _image: &Image) -> Result<ProbabilityVolume, Error> {
        let script = &self.scripts[self.version.min(self.scripts.len() - 1)];
        ProbabilityVolume::from_vec(self.width, self.height, self.classes, script[frame].clone())
    }

    fn fine_tune(
        &mut self,
        dataset: &[TrainingExample<'_>],
        _config: &TrainConfig,
    ) -> Result<(), Error> {
        self.tuned_on
            .push(dataset.iter().map(|e| e.frame).collect());
        self.version += 1;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedVideo {
    pub width: usize,
    pub height: usize,
    pub classes: usize,
    pub frames: Vec<Image>,
    /// `scripts[version][frame]`, pixel-major probabilities.
    pub scripts: Vec<Vec<Vec<f64>>>,
}

fn random_volume(rng: &mut ChaCha8Rng, w: usize, h: usize, k: usize) -> Vec<f64> {
    let mut layout = vec![0u8; w * h];
    let mut strength = vec![rng.random_range(0.2..6.0); w * h];
    for _ in 0..rng.random_range(0..=3) {
        let class = rng.random_range(1..k as u8);
        let s: f64 = [0.3, 1.0, 3.0, 12.0, 40.0][rng.random_range(0..5)];
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (x1, y1) = (rng.random_range(x0..w) + 1, rng.random_range(y0..h) + 1);
        for y in y0..y1 {
            for x in x0..x1 {
                layout[y * w + x] = class;
                strength[y * w + x] = s;
            }
        }
    }
    let mut data = Vec::with_capacity(w * h * k);
    for i in 0..w * h {
        let mut raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        raw[layout[i] as usize] += strength[i] * rng.random_range(0.5..1.0);
        let sum: f64 = raw.iter().sum();
        data.extend(raw.iter().map(|v| v / sum));
    }
    data
}

pub fn random_scripted_video(
    rng: &mut ChaCha8Rng,
    frames: usize,
    versions: usize,
) -> ScriptedVideo {
    let (w, h) = (rng.random_range(3..=7), rng.random_range(3..=6));
    let k = rng.random_range(2..=4);
    let scripts = (0..versions)
        .map(|_| {
            // Repeated volumes produce exact confidence ties.
            let mut script: Vec<Vec<f64>> = Vec::with_capacity(frames);
            for f in 0..frames {
                let v = if f > 0 && rng.random_bool(0.3) {
                    script[rng.random_range(0..f)].clone()
                } else {
                    random_volume(rng, w, h, k)
                };
                script.push(v);
            }
            script
        })
        .collect();
    ScriptedVideo {
        width: w,
        height: h,
        classes: k,
        frames: (0..frames)
            .map(|_| Image::filled(w, h, [0.0; 3]).unwrap())
            .collect(),
        scripts,
    }
}

pub fn random_weak_set(rng: &mut ChaCha8Rng, classes: usize) -> Option<BTreeSet<u8>> {
    if rng.random_bool(0.2) {
        return None;
    }
    let mut set: BTreeSet<u8> = (1..classes as u8)
        .filter(|_| rng.random_bool(0.5))
        .collect();
    if set.is_empty() {
        set.insert(1);
    }
    Some(set)
}

pub fn weak_label_set(weak: &Option<BTreeSet<u8>>) -> WeakLabelSet {
    match weak {
        Some(set) => WeakLabelSet::new(set.iter().copied()).unwrap(),
        None => WeakLabelSet::unsupervised(),
    }
}

pub struct OracleMaps {
    pub argmax: Vec<u8>,
    pub global: Vec<u8>,
    pub global_conf: f64,
    pub local: Vec<u8>,
    pub local_conf: f64,
}

/// Candidate maps built by following the selection pseudocode directly.
pub fn oracle_maps(
    probs: &[f64],
    w: usize,
    h: usize,
    k: usize,
    weak: &Option<BTreeSet<u8>>,
    t_o: f64,
    t_b: f64,
) -> OracleMaps {
    let p = |i: usize, c: u8| probs[i * k + c as usize];
    let argmax: Vec<u8> = (0..w * h)
        .map(|i| {
            let mut best = 0u8;
            for c in 1..k as u8 {
                if p(i, c) > p(i, best) {
                    best = c;
                }
            }
            best
        })
        .collect();
    let mut global = vec![IGN; w * h];
    let mut local = vec![IGN; w * h];
    for (class, pixels) in flood_fill_partition(&argmax, w, h) {
        let allowed = weak.as_ref().is_none_or(|s| s.contains(&class));
        if !allowed {
            continue;
        }
        let conf = pixels.iter().map(|&i| p(i, class)).sum::<f64>() / pixels.len() as f64;
        for &i in &pixels {
            local[i] = class;
            if conf > t_o {
                global[i] = class;
            }
        }
    }
    for i in 0..w * h {
        if p(i, BG) > t_b {
            global[i] = BG;
            local[i] = BG;
        }
    }
    let confidence = |map: &[u8]| {
        let (mut sum, mut count) = (0.0, 0usize);
        for (i, &l) in map.iter().enumerate() {
            if l != BG && l != IGN {
                sum += p(i, l);
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    };
    let global_conf = confidence(&global);
    let local_conf = confidence(&local);
    OracleMaps {
        argmax,
        global,
        global_conf,
        local,
        local_conf,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub frame: usize,
    pub global: bool,
    pub confidence: f64,
    pub labels: Vec<u8>,
}

pub struct BatchReplay {
    pub dataset: Vec<OracleEntry>,
    pub labels: Vec<Vec<u8>>,
}

/// Batch selection loop with 1-based frame counter `f`.
pub fn replay_batch(
    video: &ScriptedVideo,
    weak: &Option<BTreeSet<u8>>,
    t_o: f64,
    t_b: f64,
    tau_b: usize,
    flush_tail: bool,
) -> BatchReplay {
    let (w, h, k) = (video.width, video.height, video.classes);
    let n = video.frames.len();
    let mut g: Vec<OracleEntry> = Vec::new();
    let mut baseline = Vec::new();
    let mut d = 0.0;
    let mut t = 0usize;
    let mut best_local: Vec<u8> = Vec::new();
    let flush = |g: &mut Vec<OracleEntry>, d: f64, t: usize, map: &Vec<u8>| {
        let has_global = g.iter().any(|e| e.frame == t && e.global);
        if d > 0.0 && !has_global {
            g.push(OracleEntry {
                frame: t,
                global: false,
                confidence: d,
                labels: map.clone(),
            });
        }
    };
    for f in 1..=n {
        let m = oracle_maps(&video.scripts[0][f - 1], w, h, k, weak, t_o, t_b);
        baseline.push(m.argmax.clone());
        if m.global_conf > 0.0 {
            g.push(OracleEntry {
                frame: f - 1,
                global: true,
                confidence: m.global_conf,
                labels: m.global.clone(),
            });
        }
        if m.local_conf > d {
            d = m.local_conf;
            t = f - 1;
            best_local = m.local.clone();
        }
        if f.is_multiple_of(tau_b) {
            flush(&mut g, d, t, &best_local);
            d = 0.0;
        }
    }
    if flush_tail && !n.is_multiple_of(tau_b) {
        flush(&mut g, d, t, &best_local);
    }
    let labels = if g.is_empty() {
        baseline
    } else {
        let adapted = &video.scripts[1.min(video.scripts.len() - 1)];
        adapted
            .iter()
            .map(|probs| oracle_maps(probs, w, h, k, weak, t_o, t_b).argmax)
            .collect()
    };
    BatchReplay { dataset: g, labels }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSnapshot {
    pub frame: usize,
    pub long_term: Vec<(usize, f64)>,
    pub short_term: Vec<(usize, f64)>,
    pub updated: bool,
}

pub struct OnlineReplay {
    pub snapshots: Vec<OracleSnapshot>,
    pub tuned_on: Vec<Vec<usize>>,
    pub labels: Vec<Vec<u8>>,
}

pub struct OnlineParams {
    pub t_o: f64,
    pub t_b: f64,
    pub tau_l: usize,
    pub tau_s: usize,
    pub local_window: usize,
    pub tau_b: usize,
}

/// Streaming loop: long-term memory kept as the top-`tau_l` of a stable
/// confidence sort, short-term memory as the last `tau_s` accepted locals.
pub fn replay_online(
    video: &ScriptedVideo,
    weak: &Option<BTreeSet<u8>>,
    p: &OnlineParams,
) -> OnlineReplay {
    let (w, h, k) = (video.width, video.height, video.classes);
    let mut long: Vec<(usize, f64)> = Vec::new();
    let mut short: VecDeque<(usize, f64)> = VecDeque::new();
    let mut version = 0;
    let mut d = 0.0;
    let mut t = 0usize;
    let mut out = OnlineReplay {
        snapshots: Vec::new(),
        tuned_on: Vec::new(),
        labels: Vec::new(),
    };
    for f in 1..=video.frames.len() {
        let script = &video.scripts[version.min(video.scripts.len() - 1)];
        let m = oracle_maps(&script[f - 1], w, h, k, weak, p.t_o, p.t_b);
        out.labels.push(m.argmax.clone());
        if m.global_conf > 0.0 {
            long.push((f - 1, m.global_conf));
            let mut ranked = long.clone();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            ranked.truncate(p.tau_l);
            long.retain(|e| ranked.contains(e));
        }
        if m.local_conf > d {
            d = m.local_conf;
            t = f - 1;
        }
        let window_end = f % p.local_window == 0;
        let update = f % p.tau_b == 0;
        if window_end {
            if d > 0.0 && !long.iter().any(|e| e.0 == t) {
                short.push_back((t, d));
                if short.len() > p.tau_s {
                    short.pop_front();
                }
            }
            d = 0.0;
        }
        if update {
            let frames: Vec<usize> = long
                .iter()
                .map(|e| e.0)
                .chain(short.iter().map(|e| e.0))
                .collect();
            if !frames.is_empty() {
                out.tuned_on.push(frames);
                version += 1;
            }
        }
        if window_end || update {
            out.snapshots.push(OracleSnapshot {
                frame: f - 1,
                long_term: long.clone(),
                short_term: short.iter().copied().collect(),
                updated: update,
            });
        }
    }
    out
}

pub fn check_batch_traces(videos: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = 0;
    for n in 0..videos {
        let frames = rng.random_range(1..=70);
        let video = random_scripted_video(&mut rng, frames, 2);
        let weak = random_weak_set(&mut rng, video.classes);
        let mut config = BatchConfig::default();
        if rng.random_bool(0.5) {
            config.thresholds = SelectionThresholds {
                object: rng.random_range(0.4..0.95),
                background: rng.random_range(0.4..0.95),
            };
        }
        config.window_length = [30, rng.random_range(1..=12)][rng.random_range(0..2)];
        config.flush_tail = rng.random_bool(0.3);
        let t = &config.thresholds;
        let oracle = replay_batch(
            &video,
            &weak,
            t.object,
            t.background,
            config.window_length,
            config.flush_tail,
        );

        let mut seg = ScriptedSegmenter::new(&video);
        let outcome = run_batch(&mut seg, &video.frames, &weak_label_set(&weak), &config)
            .map_err(|e| e.to_string())?;
        let lib: Vec<OracleEntry> = outcome
            .dataset
            .entries()
            .iter()
            .map(|e| OracleEntry {
                frame: e.frame,
                global: e.kind == EntryKind::Global,
                confidence: e.confidence,
                labels: e.labels.as_slice().to_vec(),
            })
            .collect();
        if lib != oracle.dataset {
            let brief =
                |v: &[OracleEntry]| v.iter().map(|e| (e.frame, e.global)).collect::<Vec<_>>();
            return Err(format!(
                "video {n}: dataset {:?} != oracle {:?}",
                brief(&lib),
                brief(&oracle.dataset)
            ));
        }
        let expected_tuning: Vec<Vec<usize>> = if oracle.dataset.is_empty() {
            vec![]
        } else {
            vec![oracle.dataset.iter().map(|e| e.frame).collect()]
        };
        if seg.tuned_on != expected_tuning {
            return Err(format!(
                "video {n}: fine-tuned on {:?}, expected {expected_tuning:?}",
                seg.tuned_on
            ));
        }
        let labels: Vec<Vec<u8>> = outcome
            .labels
            .iter()
            .map(|l| l.as_slice().to_vec())
            .collect();
        if labels != oracle.labels {
            return Err(format!("video {n}: final labels differ from the oracle"));
        }
        entries += lib.len();
    }
    Ok(format!(
        "{videos} videos, {entries} dataset entries identical"
    ))
}

pub fn check_online_traces(videos: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snapshots = 0;
    for n in 0..videos {
        let frames = rng.random_range(1..=70);
        let video = random_scripted_video(&mut rng, frames, 8);
        let weak = random_weak_set(&mut rng, video.classes);
        let mut config = OnlineConfig::default();
        if rng.random_bool(0.5) {
            config.long_capacity = rng.random_range(1..=5);
            config.short_capacity = rng.random_range(1..=4);
            config.local_window = rng.random_range(1..=7);
            config.update_period = rng.random_range(1..=15);
        }
        let params = OnlineParams {
            t_o: config.thresholds.object,
            t_b: config.thresholds.background,
            tau_l: config.long_capacity,
            tau_s: config.short_capacity,
            local_window: config.local_window,
            tau_b: config.update_period,
        };
        let oracle = replay_online(&video, &weak, &params);
        let mut seg = ScriptedSegmenter::new(&video);
        let outcome = run_online(&mut seg, &video.frames, &weak_label_set(&weak), &config)
            .map_err(|e| e.to_string())?;
        let lib: Vec<OracleSnapshot> = outcome
            .report
            .snapshots
            .iter()
            .map(|s| OracleSnapshot {
                frame: s.frame,
                long_term: s
                    .long_term
                    .iter()
                    .map(|r| (r.frame, r.confidence))
                    .collect(),
                short_term: s
                    .short_term
                    .iter()
                    .map(|r| (r.frame, r.confidence))
                    .collect(),
                updated: s.updated,
            })
            .collect();
        if lib != oracle.snapshots {
            let first = lib.iter().zip(&oracle.snapshots).position(|(a, b)| a != b);
            return Err(format!(
                "video {n}: snapshots differ (first at {first:?}; {} vs {})",
                lib.len(),
                oracle.snapshots.len()
            ));
        }
        if seg.tuned_on != oracle.tuned_on {
            return Err(format!(
                "video {n}: fine-tuned on {:?}, oracle {:?}",
                seg.tuned_on, oracle.tuned_on
            ));
        }
        let labels: Vec<Vec<u8>> = outcome
            .labels
            .iter()
            .map(|l| l.as_slice().to_vec())
            .collect();
        if labels != oracle.labels {
            return Err(format!(
                "video {n}: as-you-go labels differ from the oracle"
            ));
        }
        snapshots += lib.len();
    }
    Ok(format!(
        "{videos} videos, {snapshots} memory snapshots identical"
    ))
}
