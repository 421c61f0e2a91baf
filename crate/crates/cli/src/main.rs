//! `fracsynth`: generate fractal-derived dynamic MRI training data, reconstruct
//! and score it.
//!
//! Exit codes: 0 success, 2 runtime failure, 64 usage error.

mod commands;
mod convert;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Argument combinations that parse but cannot be run.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "fracsynth",
    version,
    about = "Synthetic dynamic MRI training data from quaternion Julia fractals"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan the Mandelbrot-style grid for c values with escape counts in range.
    ScanC(ScanArgs),
    /// Generate a dataset of paired aliased inputs and RSS targets.
    GenDataset(GenArgs),
    /// Export the radial k-space, trajectory, DCF and coil maps behind an example.
    Undersample(UndersampleArgs),
    /// Reconstruct an example (adjoint or temporal-TV CS) and score it against the target.
    Recon(ReconArgs),
    /// Score a magnitude video against a target (SSIM, optionally CNR and edge sharpness).
    Eval(EvalArgs),
    /// Write grayscale PNG frames (and optionally a GIF) of a video container.
    Preview(PreviewArgs),
}

/// Escape-count window `LO:HI`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRange(pub u32, pub u32);

fn parse_range(s: &str) -> Result<CountRange, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: u32 = lo
        .trim()
        .parse()
        .map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("lower bound {lo} exceeds upper bound {hi}"));
    }
    Ok(CountRange(lo, hi))
}

/// Rectangle `X0,Y0,X1,Y1` or segment endpoints, in pixels.
fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| format!("expected four comma-separated numbers, got {s:?}"))
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Catalogue JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Inclusive escape-count window.
    #[arg(long, default_value = "10:30", value_parser = parse_range)]
    range: CountRange,
    /// Grid samples per axis.
    #[arg(long, default_value_t = 17, value_parser = clap::value_parser!(u32).range(1..))]
    samples: u32,
    #[arg(long, default_value_t = 100)]
    max_iter: u32,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Catalogue from `scan-c`; scanned inline when absent.
    #[arg(long)]
    catalogue: Option<PathBuf>,
    /// Number of examples.
    #[arg(long, default_value_t = 692)]
    n: usize,
    /// Image matrix size N (N x N).
    #[arg(long, default_value_t = 192)]
    size: usize,
    #[arg(long, default_value_t = 20)]
    frames: usize,
    /// Simulated receive coils.
    #[arg(long, default_value_t = 16)]
    coils: usize,
    /// Virtual coils after SVD compression.
    #[arg(long, default_value_t = 10)]
    coils_out: usize,
    #[arg(long, default_value_t = 13)]
    spokes: usize,
    /// Readout samples per spoke (default 2 x size).
    #[arg(long)]
    samples_per_spoke: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Escape-count window for the inline scan.
    #[arg(long, default_value = "10:30", value_parser = parse_range)]
    range: CountRange,
    #[arg(long, default_value_t = 17)]
    scan_samples: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: u32,
    /// Worker threads (default: available cores).
    #[arg(long, env = "FRACSYNTH_JOBS", value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
}

#[derive(Debug, Args)]
struct UndersampleArgs {
    /// Example directory (`.../examples/NNNNNN`).
    #[arg(long)]
    example: PathBuf,
    /// Output directory (default: the example directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Adjoint,
    Cs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Weighting {
    Uniform,
    Dcf,
}

#[derive(Debug, Args)]
struct ReconArgs {
    #[arg(long)]
    example: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Cs)]
    method: Method,
    /// Output directory for recon.arr and metrics.json (default: the example directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Temporal TV weight.
    #[arg(long, default_value_t = 5e-4)]
    lambda: f64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    iters: u32,
    #[arg(long, default_value_t = 1e-6)]
    tv_epsilon: f64,
    #[arg(long, default_value_t = 0.9)]
    step_safety: f64,
    #[arg(long, value_enum, default_value_t = Weighting::Uniform)]
    data_weighting: Weighting,
    /// Keep the fixed step even if the objective rises.
    #[arg(long)]
    no_backtracking: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Video to score (f32 magnitude, or complex multi-coil input combined by RSS).
    #[arg(long)]
    recon: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Write the JSON records here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Edge probe `X0,Y0,X1,Y1` for edge sharpness and its temporal STD.
    #[arg(long, value_parser = parse_quad)]
    probe: Option<[f64; 4]>,
    #[arg(long, default_value_t = 32)]
    probe_samples: usize,
    /// Physical pixel size for edge sharpness.
    #[arg(long, default_value_t = 1.0)]
    pixel_spacing: f64,
    /// CNR region A rectangle `X0,Y0,X1,Y1` (half-open).
    #[arg(long, value_parser = parse_quad, requires_all = ["roi_b", "roi_noise"])]
    roi_a: Option<[f64; 4]>,
    #[arg(long, value_parser = parse_quad, requires_all = ["roi_a", "roi_noise"])]
    roi_b: Option<[f64; 4]>,
    #[arg(long, value_parser = parse_quad, requires_all = ["roi_a", "roi_b"])]
    roi_noise: Option<[f64; 4]>,
}

#[derive(Debug, Args)]
struct PreviewArgs {
    /// Container holding a video (f32 magnitude or complex, optionally multi-coil).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write an animated preview.gif.
    #[arg(long)]
    gif: bool,
    /// GIF frame delay.
    #[arg(long, default_value_t = 100)]
    delay_ms: u32,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::ScanC(a) => commands::scan_c(a),
        Command::GenDataset(a) => commands::gen_dataset(a),
        Command::Undersample(a) => commands::undersample(a),
        Command::Recon(a) => commands::recon(a),
        Command::Eval(a) => commands::eval(a),
        Command::Preview(a) => commands::preview(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
