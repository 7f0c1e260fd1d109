use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vidadapt::protocol::ReferenceWorker;
use vidadapt::{io, pipeline, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "vidadapt", version, about = "Self-adapting video segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict every frame with the unadapted model.
    Infer {
        #[command(flatten)]
        io: VideoIo,
        #[command(flatten)]
        opts: Options,
    },
    /// Collect pseudo-labels over the whole video, fine-tune once, re-predict.
    AdaptBatch {
        #[command(flatten)]
        io: VideoIo,
        #[command(flatten)]
        opts: Options,
    },
    /// Adapt while streaming, fine-tuning every tau-b frames.
    AdaptOnline {
        #[command(flatten)]
        io: VideoIo,
        #[command(flatten)]
        opts: Options,
    },
    /// Pick batch or online labels per frame for motion consistency.
    Combine {
        #[command(flatten)]
        io: VideoIo,
        /// Output of adapt-batch (or a label directory).
        #[arg(long)]
        batch: PathBuf,
        /// Output of adapt-online (or a label directory).
        #[arg(long)]
        online: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Score predicted label maps against ground truth.
    Eval {
        /// Predicted labels (or a stage output directory).
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth label maps; any subset of frames.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a synthetic video with ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scene description (JSON); the built-in benchmark scene otherwise.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Serve the reference model over the exchange-directory protocol.
    Serve {
        /// Exchange directory.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Handle this many requests, then exit.
        #[arg(long)]
        max_requests: Option<usize>,
    },
}

#[derive(Args)]
struct VideoIo {
    /// Video directory with frames/ and catalog.txt.
    #[arg(long)]
    video: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Default)]
struct Options {
    /// key = value settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "t-o")]
    t_o: Option<f64>,
    #[arg(long = "t-b")]
    t_b: Option<f64>,
    #[arg(long = "tau-b")]
    tau_b: Option<usize>,
    #[arg(long = "tau-l")]
    tau_l: Option<usize>,
    #[arg(long = "tau-s")]
    tau_s: Option<usize>,
    #[arg(long)]
    local_window: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated class names known to appear in the video.
    #[arg(long)]
    weak_labels: Option<String>,
    /// Accept every class instead of a weak-label set.
    #[arg(long)]
    unsupervised: bool,
    /// `builtin` or a directory of flow_%06d.flo files.
    #[arg(long)]
    flows: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also flush the trailing partial window.
    #[arg(long)]
    flush_tail: bool,
    #[arg(long)]
    morph_radius: Option<usize>,
    /// Reference model parameters (default: <video>/model.vapm).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Exchange directory of an external segmenter worker.
    #[arg(long, conflicts_with = "model")]
    external: Option<PathBuf>,
    /// Seconds to wait for each external response.
    #[arg(long)]
    timeout: Option<f64>,
}

impl Options {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = PipelineConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        let mut set = |key: &str, value: Option<String>| value.map_or(Ok(()), |v| c.set(key, &v));
        set("t_o", self.t_o.map(|v| v.to_string()))?;
        set("t_b", self.t_b.map(|v| v.to_string()))?;
        set("tau_b", self.tau_b.map(|v| v.to_string()))?;
        set("tau_l", self.tau_l.map(|v| v.to_string()))?;
        set("tau_s", self.tau_s.map(|v| v.to_string()))?;
        set("local_window", self.local_window.map(|v| v.to_string()))?;
        set("epsilon", self.epsilon.map(|v| v.to_string()))?;
        set("learning_rate", self.lr.map(|v| v.to_string()))?;
        set("momentum", self.momentum.map(|v| v.to_string()))?;
        set("weight_decay", self.weight_decay.map(|v| v.to_string()))?;
        set("iterations", self.iterations.map(|v| v.to_string()))?;
        set("weak_labels", self.weak_labels.clone())?;
        set("flows", self.flows.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("morph_radius", self.morph_radius.map(|v| v.to_string()))?;
        set("timeout_secs", self.timeout.map(|v| v.to_string()))?;
        set(
            "model",
            self.model.as_ref().map(|p| p.display().to_string()),
        )?;
        set(
            "external",
            self.external.as_ref().map(|p| p.display().to_string()),
        )?;
        if self.unsupervised {
            c.unsupervised = true;
        }
        if self.flush_tail {
            c.flush_tail = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string(value).expect("summaries serialize")
    );
}

fn serve(dir: &Path, model: &Path, max_requests: Option<usize>) -> Result<()> {
    let mut worker = ReferenceWorker::new(dir, io::read_params(model)?);
    let mut handled = 0;
    while max_requests.is_none_or(|m| handled < m) {
        if worker.poll_once()? {
            handled += 1;
        } else {
            std::thread::sleep(Duration::from_millis(5));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Infer { io, opts } => {
            print_json(&pipeline::infer(&io.video, &io.out, &opts.resolve()?)?)
        }
        Command::AdaptBatch { io, opts } => {
            print_json(&pipeline::adapt_batch(&io.video, &io.out, &opts.resolve()?)?.0)
        }
        Command::AdaptOnline { io, opts } => {
            print_json(&pipeline::adapt_online(&io.video, &io.out, &opts.resolve()?)?.0)
        }
        Command::Combine {
            io,
            batch,
            online,
            opts,
        } => {
            let report = pipeline::combine(&io.video, &batch, &online, &io.out, &opts.resolve()?)?;
            print_json(&serde_json::json!({
                "batch_frames": report.batch_frames,
                "online_frames": report.online_frames,
                "objective": report.objective,
            }));
        }
        Command::Eval {
            pred,
            gt,
            catalog,
            out,
        } => {
            let report = pipeline::eval(&pred, &gt, &catalog, out.as_deref())?;
            print_json(&report);
        }
        Command::Synth { out, seed, scene } => {
            print_json(&pipeline::synth(&out, seed, scene.as_deref())?)
        }
        Command::Serve {
            dir,
            model,
            max_requests,
        } => serve(&dir, &model, max_requests)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vidadapt: error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
