//! `eval`: MAE, max/mean F-measure, structure measure, and the PR curve over
//! a stem-matched dataset. Writes the JSON report to `--out`, the 256-row PR
//! CSV next to it, and a summary table to stdout.

use std::path::Path;

use sodkit::edt::BinaryMask;
use sodkit::loss::PredictionMap;
use sodkit::metrics::{evaluate_dataset, MetricsConfig, MuFMode, THRESHOLD_COUNT};

use super::{EXIT_OK, EXIT_PARTIAL, EXIT_USAGE};
use crate::pairing;
use crate::pnm;
use crate::report::{
    pr_curve_csv, to_json, AggregateMetrics, ConfigEcho, PerImageMetrics, Report,
};

pub struct EvalArgs<'a> {
    pub pred_dir: &'a Path,
    pub gt_dir: &'a Path,
    pub beta2: f64,
    pub eta: f64,
    pub mu_f_mode: MuFMode,
    pub out: &'a Path,
}

pub fn run(args: &EvalArgs) -> i32 {
    if !args.beta2.is_finite() || args.beta2 <= 0.0 {
        eprintln!("error: --beta2 must be a positive number, got {}", args.beta2);
        return EXIT_USAGE;
    }
    let pairs = match pairing::pair_by_stem(args.pred_dir, args.gt_dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };

    let mut dataset: Vec<(PredictionMap, BinaryMask)> = Vec::with_capacity(pairs.len());
    let mut names = Vec::with_capacity(pairs.len());
    let mut failures = 0usize;
    for (stem, pred_path, gt_path) in &pairs {
        let loaded = pnm::read_pgm(pred_path)
            .map_err(|e| e.to_string())
            .and_then(|p| {
                let g = pnm::read_pgm(gt_path).map_err(|e| e.to_string())?;
                Ok((pnm::to_prediction(&p), pnm::to_binary_mask(&g)))
            });
        match loaded {
            Ok(pair) => {
                dataset.push(pair);
                names.push(stem.clone());
            }
            Err(msg) => {
                eprintln!("error: {stem}: {msg}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        eprintln!("error: {failures} image(s) failed to load; refusing to evaluate a partial dataset");
        return EXIT_PARTIAL;
    }

    let cfg = MetricsConfig {
        beta2: args.beta2,
        mu_f_mode: args.mu_f_mode,
        ..MetricsConfig::default()
    };
    let metrics = match evaluate_dataset(&dataset, &cfg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_PARTIAL;
        }
    };

    let dataset_name = args
        .gt_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| args.gt_dir.display().to_string());
    let report = Report {
        dataset: dataset_name.clone(),
        images: dataset.len(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            beta2: args.beta2,
            eta: args.eta,
            thresholds: THRESHOLD_COUNT,
            mu_f_mode: match args.mu_f_mode {
                MuFMode::Sweep => "sweep".to_string(),
                MuFMode::Adaptive => "adaptive".to_string(),
            },
        },
        metrics: AggregateMetrics {
            mae: metrics.mae,
            max_f: metrics.max_f,
            mean_f: metrics.mean_f,
            s_measure: metrics.s_measure,
        },
        per_image: names
            .iter()
            .zip(&metrics.per_image)
            .map(|(name, m)| PerImageMetrics {
                name: name.clone(),
                mae: m.mae,
                s_measure: m.s_measure,
            })
            .collect(),
    };

    if let Err(e) = std::fs::write(args.out, to_json(&report)) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return EXIT_USAGE;
    }
    let csv_path = args.out.with_extension("pr.csv");
    if let Err(e) = std::fs::write(&csv_path, pr_curve_csv(&metrics.sweep, args.beta2)) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return EXIT_USAGE;
    }

    println!("dataset {dataset_name}: {} images", dataset.len());
    println!("  MAE        {:.6}", metrics.mae);
    println!("  max F      {:.6}", metrics.max_f);
    println!("  mean F     {:.6}", metrics.mean_f);
    println!("  S-measure  {:.6}", metrics.s_measure);
    println!("report: {}", args.out.display());
    println!("pr-curve: {}", csv_path.display());
    EXIT_OK
}
