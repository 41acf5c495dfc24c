//! Batch front end for the saliency toolkit: near-edge weight maps,
//! loss reports, metric evaluation, toy-network forward passes, and the
//! embedded selftest, all over binary PGM/PPM files.

mod commands;
mod pairing;
mod pnm;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use sodkit::metrics::MuFMode;
use sodkit::tensor::UpsampleKind;

use commands::{eval::EvalArgs, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "sodkit",
    version,
    about = "Saliency-detection numerics over PGM/PPM files",
    long_about = "Near-edge weight maps from ground-truth masks, boundary-weighted \
                  cross-entropy reports, dataset evaluation (MAE, F-measures, \
                  S-measure, PR curves), and deterministic toy-network forward passes."
)]
struct Cli {
    /// Worker threads for the data-parallel kernels: a number or "auto".
    #[arg(long, global = true, default_value = "auto")]
    threads: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a near-edge weight map for every ground-truth mask in a directory.
    Nem {
        /// Directory of binary ground-truth masks (.pgm).
        gt_dir: PathBuf,
        /// Output directory for the quantized weight maps and the stats sidecar.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report weighted and plain BCE per image as CSV on stdout.
    Loss {
        /// Directory of prediction maps (.pgm).
        pred_dir: PathBuf,
        /// Directory of ground-truth masks (.pgm), stem-matched.
        gt_dir: PathBuf,
        /// Additive weight floor of the loss.
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// Evaluate MAE, F-measures, S-measure, and the PR curve over a dataset.
    Eval {
        /// Directory of prediction maps (.pgm).
        pred_dir: PathBuf,
        /// Directory of ground-truth masks (.pgm), stem-matched.
        gt_dir: PathBuf,
        /// F-measure weighting (beta squared).
        #[arg(long, default_value_t = 0.3)]
        beta2: f64,
        /// Loss weight floor echoed into the report config.
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// How the mean F-measure is computed.
        #[arg(long, value_enum, default_value_t = MuFModeArg::Sweep)]
        mu_f_mode: MuFModeArg,
        /// Path of the JSON report; the PR CSV lands next to it (.pr.csv).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the seeded toy network on a PPM image and write the saliency map.
    Forward {
        /// Input image (binary PPM, dimensions divisible by 32).
        image: PathBuf,
        /// Weight-generation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Decoder upsampling kind.
        #[arg(long, value_enum, default_value_t = UpsampleArg::Bilinear)]
        upsample: UpsampleArg,
        /// Output saliency map (.pgm).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the embedded oracle suites and report pass/fail per suite.
    Selftest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MuFModeArg {
    Sweep,
    Adaptive,
}

impl From<MuFModeArg> for MuFMode {
    fn from(arg: MuFModeArg) -> Self {
        match arg {
            MuFModeArg::Sweep => MuFMode::Sweep,
            MuFModeArg::Adaptive => MuFMode::Adaptive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UpsampleArg {
    Bilinear,
    Nearest,
}

impl From<UpsampleArg> for UpsampleKind {
    fn from(arg: UpsampleArg) -> Self {
        match arg {
            UpsampleArg::Bilinear => UpsampleKind::Bilinear,
            UpsampleArg::Nearest => UpsampleKind::Nearest,
        }
    }
}

fn configure_threads(value: &str) -> Result<(), String> {
    if value == "auto" {
        return Ok(());
    }
    let n: usize = value
        .parse()
        .map_err(|_| format!("--threads must be a positive integer or \"auto\", got {value:?}"))?;
    if n == 0 {
        return Err("--threads must be at least 1".to_string());
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure the thread pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        eprintln!("note: built without the parallel feature; running single-threaded");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads(&cli.threads) {
        eprintln!("error: {msg}");
        std::process::exit(EXIT_USAGE);
    }
    let code = match cli.command {
        Command::Nem { gt_dir, out } => commands::nem::run(&gt_dir, &out),
        Command::Loss {
            pred_dir,
            gt_dir,
            eta,
        } => commands::loss::run(&pred_dir, &gt_dir, eta),
        Command::Eval {
            pred_dir,
            gt_dir,
            beta2,
            eta,
            mu_f_mode,
            out,
        } => commands::eval::run(&EvalArgs {
            pred_dir: &pred_dir,
            gt_dir: &gt_dir,
            beta2,
            eta,
            mu_f_mode: mu_f_mode.into(),
            out: &out,
        }),
        Command::Forward {
            image,
            seed,
            upsample,
            out,
        } => commands::forward::run(&image, seed, upsample.into(), &out),
        Command::Selftest => commands::selftest::run(),
    };
    std::process::exit(code);
}
