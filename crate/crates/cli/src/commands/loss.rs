//! `loss`: per-image near-edge weighted BCE (and plain BCE for comparison)
//! over a stem-matched prediction/ground-truth dataset, as CSV on stdout.

use std::path::Path;

use sodkit::edt::build_nem;
use sodkit::loss::{bce_map, newloss, LossConfig};

use super::{EXIT_OK, EXIT_PARTIAL, EXIT_USAGE};
use crate::pairing;
use crate::pnm;

pub fn run(pred_dir: &Path, gt_dir: &Path, eta: f64) -> i32 {
    let cfg = match LossConfig::new(eta) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let pairs = match pairing::pair_by_stem(pred_dir, gt_dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };

    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    let mut failures = 0usize;
    for (stem, pred_path, gt_path) in &pairs {
        match compute_one(pred_path, gt_path, &cfg) {
            Ok((weighted, plain)) => rows.push((stem.clone(), weighted, plain)),
            Err(msg) => {
                eprintln!("error: {stem}: {msg}");
                failures += 1;
            }
        }
    }

    println!("image,newloss,bce");
    for (stem, weighted, plain) in &rows {
        println!("{stem},{weighted},{plain}");
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let mean_weighted = rows.iter().map(|r| r.1).sum::<f64>() / n;
        let mean_plain = rows.iter().map(|r| r.2).sum::<f64>() / n;
        println!("mean,{mean_weighted},{mean_plain}");
    }

    if failures > 0 {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    }
}

fn compute_one(pred_path: &Path, gt_path: &Path, cfg: &LossConfig) -> Result<(f64, f64), String> {
    let pred = pnm::to_prediction(&pnm::read_pgm(pred_path).map_err(|e| e.to_string())?);
    let gt = pnm::to_binary_mask(&pnm::read_pgm(gt_path).map_err(|e| e.to_string())?);
    let nem = build_nem(&gt);
    let weighted = newloss(&gt, &pred, &nem, cfg).map_err(|e| e.to_string())?;
    let bce = bce_map(&gt, &pred).map_err(|e| e.to_string())?;
    let plain = -bce.values().iter().sum::<f64>() / bce.values().len() as f64;
    Ok((weighted, plain))
}
