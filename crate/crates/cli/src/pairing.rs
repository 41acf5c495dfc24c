//! Dataset pairing: predictions and ground truths are matched by file stem
//! (name without extension); unmatched files are errors, never dropped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PairingError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no .pgm files found in {0}")]
    Empty(PathBuf),
    #[error("unmatched stems: only in {pred_dir}: [{pred_only}]; only in {gt_dir}: [{gt_only}]")]
    Orphans {
        pred_dir: PathBuf,
        gt_dir: PathBuf,
        pred_only: String,
        gt_only: String,
    },
}

/// All `.pgm` files in a directory, keyed by stem, sorted lexicographically.
pub fn list_pgm(dir: &Path) -> Result<BTreeMap<String, PathBuf>, PairingError> {
    let entries = std::fs::read_dir(dir).map_err(|source| PairingError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|source| PairingError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let is_pgm = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("pgm"))
            .unwrap_or(false);
        if path.is_file() && is_pgm {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                files.insert(stem.to_string(), path);
            }
        }
    }
    Ok(files)
}

/// Matched (stem, prediction path, ground-truth path) triples in stem order.
pub fn pair_by_stem(
    pred_dir: &Path,
    gt_dir: &Path,
) -> Result<Vec<(String, PathBuf, PathBuf)>, PairingError> {
    let preds = list_pgm(pred_dir)?;
    let gts = list_pgm(gt_dir)?;
    let pred_only: Vec<&String> = preds.keys().filter(|s| !gts.contains_key(*s)).collect();
    let gt_only: Vec<&String> = gts.keys().filter(|s| !preds.contains_key(*s)).collect();
    if !pred_only.is_empty() || !gt_only.is_empty() {
        return Err(PairingError::Orphans {
            pred_dir: pred_dir.to_path_buf(),
            gt_dir: gt_dir.to_path_buf(),
            pred_only: pred_only
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", "),
            gt_only: gt_only
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", "),
        });
    }
    if preds.is_empty() {
        return Err(PairingError::Empty(pred_dir.to_path_buf()));
    }
    Ok(preds
        .into_iter()
        .map(|(stem, pred)| {
            let gt = gts[&stem].clone();
            (stem, pred, gt)
        })
        .collect())
}
