//! Subcommand implementations. Each reads its inputs from disk, runs the
//! corresponding stage and writes label maps plus a JSON report.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use vidadapt_core::batch::{run_batch, DatasetReport};
use vidadapt_core::combine::{combine_labels, estimate_flow, select_models, Choice, FlowField};
use vidadapt_core::eval::{evaluate_video, refine_morphological, IoUReport};
use vidadapt_core::online::{run_online, OnlineReport};
use vidadapt_core::synth::{generate_video, SceneSpec, BENCHMARK_SHARPNESS};
use vidadapt_core::{
    ClassCatalog, Image, LabelMap, ModelParameters, ProbabilityVolume, ReferenceSegmenter,
    Segmenter, TrainConfig, TrainingExample,
};

use crate::config::{FlowSource, ModelSource, PipelineConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::protocol::ExternalSegmenter;

pub const FRAMES_DIR: &str = "frames";
pub const CATALOG_FILE: &str = "catalog.txt";
pub const MODEL_FILE: &str = "model.vapm";
pub const LABELS_DIR: &str = "labels";

/// The segmenter selected by the configuration.
#[derive(Debug)]
pub enum Backend {
    Reference(ReferenceSegmenter),
    External(ExternalSegmenter),
}

impl Backend {
    pub fn open(config: &PipelineConfig, video_dir: &Path, catalog: &ClassCatalog) -> Result<Self> {
        match &config.model {
            ModelSource::Reference(path) => {
                let path = path.clone().unwrap_or_else(|| video_dir.join(MODEL_FILE));
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "model file {} not found; pass --model or --external",
                        path.display()
                    )));
                }
                let params = io::read_params(&path)?;
                if params.num_classes() != catalog.len() {
                    return Err(Error::Config(format!(
                        "model has {} classes, catalog has {}",
                        params.num_classes(),
                        catalog.len()
                    )));
                }
                Ok(Backend::Reference(ReferenceSegmenter::new(params)))
            }
            ModelSource::External(dir) => Ok(Backend::External(
                ExternalSegmenter::new(dir)?
                    .with_timeout(Duration::from_secs_f64(config.timeout_secs))
                    .with_preprocessing(config.preprocessing.clone()),
            )),
        }
    }

    /// Writes the reference model's current parameters; external models
    /// keep their own state.
    fn save(&self, out: &Path) -> Result<()> {
        if let Backend::Reference(seg) = self {
            io::write_params(&out.join(MODEL_FILE), seg.params())?;
        }
        Ok(())
    }
}

impl Segmenter for Backend {
    type Error = Error;

    fn predict(&mut self, frame: usize, image: &Image) -> Result<ProbabilityVolume> {
        match self {
            Backend::Reference(s) => Ok(s.predict(frame, image)?),
            Backend::External(s) => s.predict(frame, image),
        }
    }

    fn fine_tune(&mut self, dataset: &[TrainingExample<'_>], config: &TrainConfig) -> Result<()> {
        match self {
            Backend::Reference(s) => Ok(s.fine_tune(dataset, config)?),
            Backend::External(s) => s.fine_tune(dataset, config),
        }
    }
}

/// A video directory: `frames/`, `catalog.txt` and optionally `model.vapm`.
pub struct Video {
    pub dir: PathBuf,
    pub frames: Vec<Image>,
    pub catalog: ClassCatalog,
}

impl Video {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            dir: dir.to_path_buf(),
            frames: io::read_video(&dir.join(FRAMES_DIR))?,
            catalog: io::read_catalog(&dir.join(CATALOG_FILE))?,
        })
    }
}

/// Accepts either a label directory or a stage output directory containing
/// `labels/`.
pub fn label_dir(dir: &Path) -> PathBuf {
    let nested = dir.join(LABELS_DIR);
    if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    }
}

fn read_labels_for(dir: &Path, video: &Video) -> Result<Vec<LabelMap>> {
    let maps = io::read_label_dir(&label_dir(dir))?;
    if maps.len() != video.frames.len() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            message: format!(
                "{} label maps for {} frames",
                maps.len(),
                video.frames.len()
            ),
        });
    }
    Ok(maps)
}

#[derive(Debug, Serialize)]
pub struct InferSummary {
    pub frames: usize,
}

pub fn infer(video_dir: &Path, out: &Path, config: &PipelineConfig) -> Result<InferSummary> {
    config.validate()?;
    let video = Video::load(video_dir)?;
    let mut backend = Backend::open(config, video_dir, &video.catalog)?;
    let mut labels = Vec::with_capacity(video.frames.len());
    for (f, frame) in video.frames.iter().enumerate() {
        labels.push(backend.predict(f, frame)?.argmax_labels());
    }
    io::write_label_dir(&out.join(LABELS_DIR), &labels)?;
    Ok(InferSummary {
        frames: labels.len(),
    })
}

#[derive(Debug, Serialize)]
pub struct BatchSummary {
    pub frames: usize,
    pub dataset_size: usize,
    pub global_entries: usize,
    pub local_entries: usize,
    pub changed_from_baseline: usize,
}

pub fn adapt_batch(
    video_dir: &Path,
    out: &Path,
    config: &PipelineConfig,
) -> Result<(BatchSummary, DatasetReport)> {
    config.validate()?;
    let video = Video::load(video_dir)?;
    let weak = config.weak_label_set(&video.catalog)?;
    let mut backend = Backend::open(config, video_dir, &video.catalog)?;
    let outcome = run_batch(&mut backend, &video.frames, &weak, &config.batch())?;

    io::write_label_dir(&out.join(LABELS_DIR), &outcome.labels)?;
    io::write_label_dir(&out.join("baseline"), &outcome.baseline)?;
    io::write_json(&out.join("dataset.json"), &outcome.report)?;
    backend.save(out)?;

    let global = outcome
        .dataset
        .entries()
        .iter()
        .filter(|e| e.kind == vidadapt_core::batch::EntryKind::Global)
        .count();
    let summary = BatchSummary {
        frames: video.frames.len(),
        dataset_size: outcome.dataset.len(),
        global_entries: global,
        local_entries: outcome.dataset.len() - global,
        changed_from_baseline: outcome
            .labels
            .iter()
            .zip(&outcome.baseline)
            .filter(|(a, b)| a != b)
            .count(),
    };
    Ok((summary, outcome.report))
}

#[derive(Debug, Serialize)]
pub struct OnlineSummary {
    pub frames: usize,
    pub updates: usize,
    pub long_term: usize,
    pub short_term: usize,
}

pub fn adapt_online(
    video_dir: &Path,
    out: &Path,
    config: &PipelineConfig,
) -> Result<(OnlineSummary, OnlineReport)> {
    config.validate()?;
    let video = Video::load(video_dir)?;
    let weak = config.weak_label_set(&video.catalog)?;
    let mut backend = Backend::open(config, video_dir, &video.catalog)?;
    let outcome = run_online(&mut backend, &video.frames, &weak, &config.online())?;

    io::write_label_dir(&out.join(LABELS_DIR), &outcome.labels)?;
    io::write_json(&out.join("memory.json"), &outcome.report)?;
    backend.save(out)?;
    let summary = OnlineSummary {
        frames: video.frames.len(),
        updates: outcome
            .report
            .updates
            .iter()
            .filter(|(_, n)| *n > 0)
            .count(),
        long_term: outcome.memory.long_term().len(),
        short_term: outcome.memory.short_term().len(),
    };
    Ok((summary, outcome.report))
}

#[derive(Debug, Serialize)]
pub struct CombineReport {
    pub choices: Vec<&'static str>,
    pub objective: f64,
    pub epsilon: f64,
    pub morph_radius: usize,
    pub batch_frames: usize,
    pub online_frames: usize,
}

pub fn flows_for(video: &Video, source: &FlowSource) -> Result<Vec<FlowField>> {
    match source {
        FlowSource::Builtin => video
            .frames
            .windows(2)
            .map(|p| Ok(estimate_flow(&p[0], &p[1])?))
            .collect(),
        FlowSource::Dir(dir) => io::read_flow_dir(dir, video.frames.len()),
    }
}

pub fn combine(
    video_dir: &Path,
    batch_dir: &Path,
    online_dir: &Path,
    out: &Path,
    config: &PipelineConfig,
) -> Result<CombineReport> {
    config.validate()?;
    let video = Video::load(video_dir)?;
    let batch = read_labels_for(batch_dir, &video)?;
    let online = read_labels_for(online_dir, &video)?;
    let flows = flows_for(&video, &config.flows)?;
    let selection = select_models(&batch, &online, &flows, &config.combine())?;
    let combined = combine_labels(&batch, &online, &selection)?;
    let refined: Vec<LabelMap> = combined
        .iter()
        .map(|m| refine_morphological(m, config.morph_radius))
        .collect();
    io::write_label_dir(&out.join(LABELS_DIR), &refined)?;

    let batch_frames = selection
        .choices
        .iter()
        .filter(|c| **c == Choice::Batch)
        .count();
    let report = CombineReport {
        choices: selection
            .choices
            .iter()
            .map(|c| match c {
                Choice::Batch => "batch",
                Choice::Online => "online",
            })
            .collect(),
        objective: selection.objective,
        epsilon: config.epsilon,
        morph_radius: config.morph_radius,
        batch_frames,
        online_frames: selection.choices.len() - batch_frames,
    };
    io::write_json(&out.join("selection.json"), &report)?;
    Ok(report)
}

pub fn eval(
    pred_dir: &Path,
    gt_dir: &Path,
    catalog: &Path,
    out: Option<&Path>,
) -> Result<IoUReport> {
    let catalog = io::read_catalog(catalog)?;
    let preds = io::read_label_dir(&label_dir(pred_dir))?;
    let gt = io::read_ground_truth(gt_dir)?;
    let report = evaluate_video(&preds, &gt, &catalog)?;
    if let Some(path) = out {
        io::write_json(path, &report)?;
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct SynthSummary {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub ambiguous_frames: usize,
    pub weak_labels: Vec<String>,
}

/// Writes a synthetic video directory: `frames/`, `gt/`, `catalog.txt`,
/// `scene.json`, a prototype `model.vapm` and `pipeline.conf` naming the
/// classes present as weak labels.
pub fn synth(out: &Path, seed: u64, scene: Option<&Path>) -> Result<SynthSummary> {
    let spec = match scene {
        Some(path) => io::read_json::<SceneSpec>(path)?,
        None => SceneSpec::ambiguous_benchmark(seed),
    };
    let video = generate_video(&spec, seed)?;
    let catalog = spec.catalog()?;
    io::write_video(&out.join(FRAMES_DIR), &video.frames)?;
    io::write_label_dir(&out.join("gt"), &video.ground_truth)?;
    io::write_catalog(&out.join(CATALOG_FILE), &catalog)?;
    io::write_json(&out.join("scene.json"), &spec)?;
    let params = ModelParameters::from_prototypes(&spec.class_colors, BENCHMARK_SHARPNESS)?;
    io::write_params(&out.join(MODEL_FILE), &params)?;

    let weak_labels: Vec<String> = spec
        .present_classes()
        .into_iter()
        .filter_map(|c| catalog.name(c).map(String::from))
        .collect();
    let conf = format!("weak_labels = {}\n", weak_labels.join(","));
    std::fs::write(out.join("pipeline.conf"), conf).map_err(|source| Error::Io {
        path: out.join("pipeline.conf"),
        source,
    })?;
    Ok(SynthSummary {
        frames: spec.frames,
        width: spec.width,
        height: spec.height,
        ambiguous_frames: spec.ambiguous_frames().len(),
        weak_labels,
    })
}
