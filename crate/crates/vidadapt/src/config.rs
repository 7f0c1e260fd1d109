//! Pipeline configuration: defaults, a `key = value` file, and overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use vidadapt_core::batch::BatchConfig;
use vidadapt_core::combine::CombineConfig;
use vidadapt_core::online::OnlineConfig;
use vidadapt_core::select::{SelectionThresholds, WeakLabelSet};
use vidadapt_core::{ClassCatalog, TrainConfig};

use crate::error::{Error, PathContext, Result};
use crate::protocol::Preprocessing;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowSource {
    /// Estimate flow with the built-in block matcher.
    Builtin,
    /// Read `flow_%06d.flo` files from a directory.
    Dir(PathBuf),
}

impl FromStr for FlowSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "builtin" => FlowSource::Builtin,
            "" => return Err(Error::Config("empty flow source".into())),
            dir => FlowSource::Dir(PathBuf::from(dir)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSource {
    /// Reference model, parameters from a file (or the video directory's
    /// `model.vapm` when `None`).
    Reference(Option<PathBuf>),
    /// Worker process reached through an exchange directory.
    External(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub t_o: f64,
    pub t_b: f64,
    pub tau_b: usize,
    pub tau_l: usize,
    pub tau_s: usize,
    /// Window of the online short-term candidate search.
    pub local_window: usize,
    pub epsilon: f64,
    pub train: TrainConfig,
    pub weak_labels: Vec<String>,
    pub unsupervised: bool,
    pub flows: FlowSource,
    pub morph_radius: usize,
    pub model: ModelSource,
    pub seed: u64,
    pub flush_tail: bool,
    pub preprocessing: Preprocessing,
    pub timeout_secs: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            t_o: 0.75,
            t_b: 0.8,
            tau_b: 30,
            tau_l: 10,
            tau_s: 5,
            local_window: 5,
            epsilon: 0.02,
            seed: train.seed,
            train,
            weak_labels: Vec::new(),
            unsupervised: false,
            flows: FlowSource::Builtin,
            morph_radius: 1,
            model: ModelSource::Reference(None),
            flush_tail: false,
            preprocessing: Preprocessing::default(),
            timeout_secs: 600.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key} = {value:?}: expected true or false"
        ))),
    }
}

impl PipelineConfig {
    /// Applies one setting. Keys use the command-line flag names with either
    /// `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key_norm = key.trim().replace('-', "_");
        let value = value.trim();
        match key_norm.as_str() {
            "t_o" => self.t_o = parse(key, value)?,
            "t_b" => self.t_b = parse(key, value)?,
            "tau_b" => self.tau_b = parse(key, value)?,
            "tau_l" => self.tau_l = parse(key, value)?,
            "tau_s" => self.tau_s = parse(key, value)?,
            "local_window" => self.local_window = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "lr" | "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "momentum" => self.train.momentum = parse(key, value)?,
            "weight_decay" => self.train.weight_decay = parse(key, value)?,
            "iterations" => self.train.iterations = Some(parse(key, value)?),
            "pixel_subsample" => self.train.pixel_subsample = parse(key, value)?,
            "shuffle" => self.train.shuffle = parse_bool(key, value)?,
            "seed" => {
                self.seed = parse(key, value)?;
                self.train.seed = self.seed;
            }
            "weak_labels" => {
                self.weak_labels = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "unsupervised" => self.unsupervised = parse_bool(key, value)?,
            "flows" => self.flows = value.parse()?,
            "morph_radius" => self.morph_radius = parse(key, value)?,
            "model" => self.model = ModelSource::Reference(Some(PathBuf::from(value))),
            "external" => self.model = ModelSource::External(PathBuf::from(value)),
            "flush_tail" => self.flush_tail = parse_bool(key, value)?,
            "resize_long_side" => self.preprocessing.resize_long_side = parse(key, value)?,
            "pad_width" => self.preprocessing.pad_width = parse(key, value)?,
            "pad_height" => self.preprocessing.pad_height = parse(key, value)?,
            "timeout_secs" => self.timeout_secs = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text, one setting per line; `#` starts a
    /// comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).at(path)?;
        self.apply_text(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn thresholds(&self) -> SelectionThresholds {
        SelectionThresholds {
            object: self.t_o,
            background: self.t_b,
        }
    }

    pub fn batch(&self) -> BatchConfig {
        BatchConfig {
            thresholds: self.thresholds(),
            train: self.train.clone(),
            window_length: self.tau_b,
            flush_tail: self.flush_tail,
        }
    }

    pub fn online(&self) -> OnlineConfig {
        OnlineConfig {
            thresholds: self.thresholds(),
            train: self.train.clone(),
            long_capacity: self.tau_l,
            short_capacity: self.tau_s,
            local_window: self.local_window,
            update_period: self.tau_b,
        }
    }

    pub fn combine(&self) -> CombineConfig {
        CombineConfig {
            epsilon: self.epsilon,
        }
    }

    /// Resolves weak-label names against the catalog.
    pub fn weak_label_set(&self, catalog: &ClassCatalog) -> Result<WeakLabelSet> {
        if self.unsupervised {
            return Ok(WeakLabelSet::unsupervised());
        }
        if self.weak_labels.is_empty() {
            return Err(Error::Config(
                "no weak labels given; pass --weak-labels a,b or --unsupervised".into(),
            ));
        }
        let mut ids = Vec::with_capacity(self.weak_labels.len());
        for name in &self.weak_labels {
            let id = catalog.index_of(name).ok_or_else(|| {
                Error::Config(format!("weak label {name:?} is not in the catalog"))
            })?;
            ids.push(id);
        }
        Ok(WeakLabelSet::new(ids)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.batch().validate()?;
        self.online().validate()?;
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(Error::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}
