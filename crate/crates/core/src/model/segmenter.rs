use super::params::{predict, ModelParameters};
use super::train::{sgd_fine_tune, TrainConfig};
use crate::error::Error;
use crate::image::Image;
use crate::label::LabelMap;
use crate::prob::ProbabilityVolume;

/// One pseudo-labeled frame for fine-tuning.
#[derive(Debug, Clone, Copy)]
pub struct TrainingExample<'a> {
    pub frame: usize,
    pub image: &'a Image,
    pub labels: &'a LabelMap,
}

impl<'a> TrainingExample<'a> {
    pub fn new(frame: usize, image: &'a Image, labels: &'a LabelMap) -> Self {
        Self {
            frame,
            image,
            labels,
        }
    }
}

/// A per-pixel classifier that can be adapted to a video.
///
/// `frame` is the 0-based index of the image in its video; implementations
/// that replay stored outputs key on it, others ignore it.
pub trait Segmenter {
    type Error: From<Error>;

    fn predict(&mut self, frame: usize, image: &Image) -> Result<ProbabilityVolume, Self::Error>;

    /// Replaces the current model with one fine-tuned on `examples`.
    fn fine_tune(
        &mut self,
        examples: &[TrainingExample<'_>],
        config: &TrainConfig,
    ) -> Result<(), Self::Error>;
}

/// The built-in linear softmax model.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSegmenter {
    params: ModelParameters,
}

impl ReferenceSegmenter {
    pub fn new(params: ModelParameters) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn into_params(self) -> ModelParameters {
        self.params
    }
}

impl Segmenter for ReferenceSegmenter {
    type Error = Error;

    fn predict(&mut self, _frame: usize, image: &Image) -> Result<ProbabilityVolume, Error> {
        predict(&self.params, image)
    }

    fn fine_tune(
        &mut self,
        examples: &[TrainingExample<'_>],
        config: &TrainConfig,
    ) -> Result<(), Error> {
        self.params = sgd_fine_tune(&self.params, examples, config)?;
        Ok(())
    }
}

impl<S: Segmenter + ?Sized> Segmenter for &mut S {
    type Error = S::Error;

    fn predict(&mut self, frame: usize, image: &Image) -> Result<ProbabilityVolume, Self::Error> {
        (**self).predict(frame, image)
    }

    fn fine_tune(
        &mut self,
        examples: &[TrainingExample<'_>],
        config: &TrainConfig,
    ) -> Result<(), Self::Error> {
        (**self).fine_tune(examples, config)
    }
}
