mod commands;
mod fetch;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Simulated optical tactile sensor: depth generation, rendering,
/// augmentation and real-vs-generated evaluation.
#[derive(Parser, Debug)]
#[command(name = "tactsim", version)]
struct Cli {
    /// Accept unknown keys in JSON inputs (reported as warnings).
    #[arg(long, global = true)]
    lenient: bool,

    /// Worker threads for batch commands.
    #[arg(long, global = true, env = "TACTSIM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RenderOpts {
    /// Pipeline config (defaults to the embedded baseline).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Heightmap variant: raw, single, legacy or dog (defaults to the config's).
    #[arg(long)]
    variant: Option<String>,
    /// Meters per unit for 16-bit PNG depth maps without a stored scale.
    #[arg(long)]
    depth_scale: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render one depth map to a tactile image.
    Render {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Render every depth map in a directory; outputs keep the file stems.
    Batch {
        #[arg(long)]
        depth_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Ray-cast a scene description to a depth map, or to a grid of pressed poses.
    GenDepth {
        #[arg(long)]
        scene: PathBuf,
        /// Output file, or output directory with --grid.
        #[arg(long)]
        out: PathBuf,
        /// Write one depth map per pose of an nx x ny x nz probing grid.
        #[arg(long)]
        grid: bool,
        #[arg(long, default_value_t = 3)]
        nx: usize,
        #[arg(long, default_value_t = 3)]
        ny: usize,
        #[arg(long, default_value_t = 11)]
        nz: usize,
        /// Horizontal grid step, meters.
        #[arg(long, default_value_t = 1e-3)]
        dx: f64,
        /// Vertical grid step, meters.
        #[arg(long, default_value_t = 1e-4)]
        dz: f64,
        /// Grid file format: pfm or png.
        #[arg(long, default_value = "pfm")]
        format: String,
        /// Meters per unit when writing 16-bit PNG depth.
        #[arg(long, default_value_t = 1e-6)]
        depth_scale: f64,
    },
    /// Render texture-perturbed variants of every depth map in a directory.
    Augment {
        #[arg(long)]
        depth_dir: PathBuf,
        /// Augmentation spec JSON (defaults to all builtin textures).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Metrics between two images, or between two directories of images.
    Compare {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Two-point alignment of a real image onto a generated one.
    Align {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        /// Reference points `rx1,ry1,rx2,ry2,gx1,gy1,gx2,gy2` (real then generated).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        points: Option<Vec<f64>>,
        /// Annotation file; the global pairs are used unless --object is given.
        #[arg(long, conflicts_with = "points")]
        annotations: Option<PathBuf>,
        #[arg(long, requires = "annotations")]
        object: Option<String>,
        /// Write the warped and cropped real image here.
        #[arg(long)]
        out_real: Option<PathBuf>,
        /// Write the cropped generated image here.
        #[arg(long)]
        out_generated: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Candidate contact centroids, to help pick alignment points.
    Centroids {
        #[arg(long)]
        image: PathBuf,
        /// No-contact capture; defaults to the rendered flat background.
        #[arg(long)]
        background: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        threshold: u8,
        #[arg(long, default_value_t = 25)]
        min_area: usize,
        #[arg(long)]
        json: bool,
    },
    /// Dataset comparison with optional alignment, as mean and sd per metric.
    Report {
        #[arg(long)]
        real_dir: PathBuf,
        #[arg(long)]
        gen_dir: PathBuf,
        /// none, global or object.
        #[arg(long, default_value = "none")]
        align: String,
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Pixel-to-meter ratio from the depth map of a cube of known side.
    Calibrate {
        #[arg(long)]
        depth: PathBuf,
        /// Cube side, meters.
        #[arg(long, default_value_t = 5e-3)]
        cube_side: f64,
        /// Measure along this row instead of the widest contact row.
        #[arg(long)]
        row: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        depth_scale: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Download files listed in a checksum manifest and unpack archives.
    FetchDataset {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        dest: PathBuf,
    },
    /// Print the embedded baseline config.
    DumpConfig,
}

/// A failed command: the pipeline stage, the exit code and the cause.
#[derive(Debug)]
pub struct Failure {
    pub stage: String,
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            stage: stage.into(),
            code: 2,
            message: message.into(),
        }
    }

    pub fn compute(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            stage: stage.into(),
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

/// Attach a stage name to a core result.
pub trait Stage<T> {
    fn stage(self, stage: &str) -> Result<T, Failure>;
}

impl<T> Stage<T> for tactsim_core::Result<T> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage: stage.to_string(),
            code: if e.is_input_error() { 2 } else { 1 },
            message: e.to_string(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: cannot size the worker pool: {e}");
        }
    }
    match commands::run(cli.command, cli.lenient) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
