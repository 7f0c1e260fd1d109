//! File-exchange protocol for segmenters running in another process.
//!
//! Client and worker share one exchange directory:
//!
//! ```text
//! request.json               written last by the client (atomic rename)
//! frames/frame_%06d.png      predict inputs
//! dataset/item_%06d_*.png    fine-tune inputs: image and pseudo-label map
//! probs/frame_%06d.{f32,json} predict outputs, see `io::write_probs`
//! done.json | error.json     written last by the worker, carrying the request id
//! ```
//!
//! Predict responses must come back at the original frame resolution; the
//! `preprocessing` block tells a network worker how to resize and pad before
//! inference and is meant to be undone by the worker.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use vidadapt_core::{
    Image, LabelMap, ModelParameters, ProbabilityVolume, ReferenceSegmenter, Segmenter,
    TrainConfig, TrainingExample, IGNORE,
};

use crate::error::{Error, PathContext, Result};
use crate::io::{
    self, frame_file_name, read_frame, read_label_map, read_probs, write_frame, write_json,
    write_label_map, write_probs,
};

/// Tolerance on per-pixel probability sums in predict responses.
pub const SUM_TOLERANCE: f64 = 1e-3;

pub const REQUEST_FILE: &str = "request.json";
pub const DONE_FILE: &str = "done.json";
pub const ERROR_FILE: &str = "error.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub resize_long_side: u32,
    pub pad_width: u32,
    pub pad_height: u32,
    pub pad_mode: String,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            resize_long_side: 500,
            pad_width: 900,
            pad_height: 900,
            pad_mode: "reflect".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub index: usize,
    pub frame: usize,
    pub image: String,
    pub labels: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Request {
    Predict {
        id: u64,
        frames: Vec<usize>,
        preprocessing: Preprocessing,
    },
    Finetune {
        id: u64,
        items: Vec<DatasetItem>,
        learning_rate: f64,
        momentum: f64,
        weight_decay: f64,
        iterations: usize,
        pixel_subsample: usize,
        seed: u64,
        shuffle: bool,
        dropout: f64,
        ignore_label: u8,
    },
}

impl Request {
    pub fn id(&self) -> u64 {
        match self {
            Request::Predict { id, .. } | Request::Finetune { id, .. } => *id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Done {
    pub id: u64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: u64,
    pub message: String,
}

fn remove_if_present(path: &Path) -> Result<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e).at(path),
        _ => Ok(()),
    }
}

/// Client side: a [`Segmenter`] backed by a worker process.
#[derive(Debug)]
pub struct ExternalSegmenter {
    dir: PathBuf,
    timeout: Duration,
    poll_interval: Duration,
    preprocessing: Preprocessing,
    next_id: u64,
}

impl ExternalSegmenter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        for sub in ["frames", "dataset", "probs"] {
            io::ensure_dir(&dir.join(sub))?;
        }
        Ok(Self {
            dir,
            timeout: Duration::from_secs(600),
            poll_interval: Duration::from_millis(5),
            preprocessing: Preprocessing::default(),
            next_id: 1,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_poll_interval(mut self, interval: Duration) -> Self {
        self.poll_interval = interval;
        self
    }

    pub fn with_preprocessing(mut self, preprocessing: Preprocessing) -> Self {
        self.preprocessing = preprocessing;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn issue(&mut self, build: impl FnOnce(u64) -> Request) -> Result<()> {
        let id = self.next_id;
        self.next_id += 1;
        let (done, failed) = (self.dir.join(DONE_FILE), self.dir.join(ERROR_FILE));
        remove_if_present(&done)?;
        remove_if_present(&failed)?;
        write_json(&self.dir.join(REQUEST_FILE), &build(id))?;

        let start = Instant::now();
        loop {
            if failed.exists() {
                let f: Failure = io::read_json(&failed)?;
                if f.id == id {
                    remove_if_present(&failed)?;
                    return Err(Error::External {
                        id,
                        message: f.message,
                    });
                }
            }
            if done.exists() {
                let d: Done = io::read_json(&done)?;
                if d.id == id {
                    remove_if_present(&done)?;
                    remove_if_present(&self.dir.join(REQUEST_FILE))?;
                    if d.status != "ok" {
                        return Err(Error::External {
                            id,
                            message: format!("status {:?}", d.status),
                        });
                    }
                    return Ok(());
                }
            }
            let waited = start.elapsed();
            if waited >= self.timeout {
                return Err(Error::Timeout {
                    dir: self.dir.clone(),
                    waited,
                });
            }
            std::thread::sleep(self.poll_interval);
        }
    }
}

impl Segmenter for ExternalSegmenter {
    type Error = Error;

    fn predict(&mut self, frame: usize, image: &Image) -> Result<ProbabilityVolume> {
        let probs = self.dir.join("probs");
        remove_if_present(&probs.join(frame_file_name(frame, "f32")))?;
        remove_if_present(&probs.join(frame_file_name(frame, "json")))?;
        write_frame(
            &self.dir.join("frames").join(frame_file_name(frame, "png")),
            image,
        )?;
        let preprocessing = self.preprocessing.clone();
        self.issue(|id| Request::Predict {
            id,
            frames: vec![frame],
            preprocessing,
        })?;
        read_probs(&probs, frame, image.dims(), SUM_TOLERANCE)
    }

    fn fine_tune(&mut self, dataset: &[TrainingExample<'_>], config: &TrainConfig) -> Result<()> {
        config.validate()?;
        let dataset_dir = self.dir.join("dataset");
        let mut items = Vec::with_capacity(dataset.len());
        for (index, ex) in dataset.iter().enumerate() {
            let image = format!("item_{index:06}_image.png");
            let labels = format!("item_{index:06}_labels.png");
            write_frame(&dataset_dir.join(&image), ex.image)?;
            write_label_map(&dataset_dir.join(&labels), ex.labels)?;
            items.push(DatasetItem {
                index,
                frame: ex.frame,
                image,
                labels,
            });
        }
        let iterations = config.steps_for(dataset.len());
        let c = config.clone();
        self.issue(|id| Request::Finetune {
            id,
            items,
            learning_rate: c.learning_rate,
            momentum: c.momentum,
            weight_decay: c.weight_decay,
            iterations,
            pixel_subsample: c.pixel_subsample,
            seed: c.seed,
            shuffle: c.shuffle,
            dropout: 0.5,
            ignore_label: IGNORE,
        })
    }
}

/// Worker side serving the reference model. Preprocessing hints are ignored
/// because the reference model works at native resolution.
#[derive(Debug)]
pub struct ReferenceWorker {
    dir: PathBuf,
    segmenter: ReferenceSegmenter,
    last_id: Option<u64>,
}

impl ReferenceWorker {
    pub fn new(dir: impl Into<PathBuf>, params: ModelParameters) -> Self {
        Self {
            dir: dir.into(),
            segmenter: ReferenceSegmenter::new(params),
            last_id: None,
        }
    }

    pub fn params(&self) -> &ModelParameters {
        self.segmenter.params()
    }

    /// Handles the pending request, if it is new. Returns whether one was
    /// handled.
    pub fn poll_once(&mut self) -> Result<bool> {
        let path = self.dir.join(REQUEST_FILE);
        if !path.exists() {
            return Ok(false);
        }
        let request: Request = match io::read_json(&path) {
            Ok(r) => r,
            // Removed between the existence check and the read.
            Err(Error::Io { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        let id = request.id();
        if self.last_id == Some(id) {
            return Ok(false);
        }
        self.last_id = Some(id);
        match self.handle(&request) {
            Ok(()) => write_json(
                &self.dir.join(DONE_FILE),
                &Done {
                    id,
                    status: "ok".into(),
                },
            )?,
            Err(e) => write_json(
                &self.dir.join(ERROR_FILE),
                &Failure {
                    id,
                    message: e.to_string(),
                },
            )?,
        }
        Ok(true)
    }

    fn handle(&mut self, request: &Request) -> Result<()> {
        match request {
            Request::Predict { frames, .. } => {
                let out = self.dir.join("probs");
                io::ensure_dir(&out)?;
                for &frame in frames {
                    let image =
                        read_frame(&self.dir.join("frames").join(frame_file_name(frame, "png")))?;
                    let prob = self.segmenter.predict(frame, &image)?;
                    write_probs(&out, frame, &prob)?;
                }
                Ok(())
            }
            Request::Finetune {
                items,
                learning_rate,
                momentum,
                weight_decay,
                iterations,
                pixel_subsample,
                seed,
                shuffle,
                ..
            } => {
                let dataset_dir = self.dir.join("dataset");
                let mut loaded: Vec<(usize, Image, LabelMap)> = Vec::with_capacity(items.len());
                for item in items {
                    let image = read_frame(&dataset_dir.join(&item.image))?;
                    let labels = read_label_map(&dataset_dir.join(&item.labels))?;
                    loaded.push((item.frame, image, labels));
                }
                let examples: Vec<TrainingExample<'_>> = loaded
                    .iter()
                    .map(|(f, img, lab)| TrainingExample::new(*f, img, lab))
                    .collect();
                let config = TrainConfig {
                    learning_rate: *learning_rate,
                    momentum: *momentum,
                    weight_decay: *weight_decay,
                    iterations: Some(*iterations),
                    pixel_subsample: *pixel_subsample,
                    seed: *seed,
                    shuffle: *shuffle,
                };
                Ok(self.segmenter.fine_tune(&examples, &config)?)
            }
        }
    }

    /// Serves requests on a background thread until the handle is stopped.
    pub fn spawn(mut self, poll_interval: Duration) -> WorkerHandle {
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = std::thread::spawn(move || {
            while !flag.load(Ordering::Acquire) {
                if !self.poll_once()? {
                    std::thread::sleep(poll_interval);
                }
            }
            Ok(self)
        });
        WorkerHandle { stop, thread }
    }
}

pub struct WorkerHandle {
    stop: Arc<AtomicBool>,
    thread: JoinHandle<Result<ReferenceWorker>>,
}

impl WorkerHandle {
    /// Stops the worker and returns it, or the error that ended it.
    pub fn stop(self) -> Result<ReferenceWorker> {
        self.stop.store(true, Ordering::Release);
        self.thread.join().expect("worker thread panicked")
    }
}
