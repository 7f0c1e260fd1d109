//! File formats, configuration, the external segmenter protocol and the
//! subcommands behind the `vidadapt` binary. The algorithms live in
//! [`vidadapt_core`].

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod protocol;

pub use config::{FlowSource, ModelSource, PipelineConfig};
pub use error::{Error, Result};
