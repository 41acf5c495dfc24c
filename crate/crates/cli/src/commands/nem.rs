//! `nem`: build a near-edge weight map for every ground-truth mask in a
//! directory, writing quantized PGMs plus a JSON sidecar of value statistics.

use std::path::Path;

use sodkit::edt::build_nem;

use super::{EXIT_OK, EXIT_PARTIAL, EXIT_USAGE};
use crate::pairing;
use crate::pnm;
use crate::report::{sidecar_json, WeightMapSidecar, WeightMapStats};

pub fn run(gt_dir: &Path, out_dir: &Path) -> i32 {
    let masks = match pairing::list_pgm(gt_dir) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if masks.is_empty() {
        eprintln!("error: no .pgm masks found in {}", gt_dir.display());
        return EXIT_USAGE;
    }
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_USAGE;
    }

    let mut stats = Vec::new();
    let mut failures = 0usize;
    for (stem, path) in &masks {
        match process_one(stem, path, out_dir) {
            Ok(entry) => stats.push(entry),
            Err(msg) => {
                eprintln!("error: {msg}");
                failures += 1;
            }
        }
    }

    let sidecar = WeightMapSidecar { images: stats };
    let sidecar_path = out_dir.join("nem_stats.json");
    if let Err(e) = std::fs::write(&sidecar_path, sidecar_json(&sidecar)) {
        eprintln!("error: cannot write {}: {e}", sidecar_path.display());
        return EXIT_PARTIAL;
    }

    println!(
        "nem: wrote {} weight maps to {} ({} failed)",
        sidecar.images.len(),
        out_dir.display(),
        failures
    );
    if failures > 0 {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    }
}

fn process_one(stem: &str, path: &Path, out_dir: &Path) -> Result<WeightMapStats, String> {
    let image = pnm::read_pgm(path).map_err(|e| e.to_string())?;
    let gt = pnm::to_binary_mask(&image);
    let nem = build_nem(&gt);

    let values = nem.values();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;

    let out_path = out_dir.join(format!("{stem}.pgm"));
    let quantized = pnm::from_values(nem.height(), nem.width(), values);
    pnm::write_pgm(&out_path, &quantized).map_err(|e| e.to_string())?;

    Ok(WeightMapStats {
        name: stem.to_string(),
        min,
        max,
        mean,
    })
}
