//! Behavioral tests of the binary: exit codes, file contracts, and error
//! paths, driven through the real executable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sodkit"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) {
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).unwrap();
}

fn write_ppm(path: &Path, width: usize, height: usize, pixels: &[u8]) {
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).unwrap();
}

/// A small stem-matched dataset: gt masks and blended predictions.
fn fixture_dataset(root: &Path, names: &[&str]) -> (PathBuf, PathBuf) {
    let gt_dir = root.join("gt");
    let pred_dir = root.join("pred");
    fs::create_dir_all(&gt_dir).unwrap();
    fs::create_dir_all(&pred_dir).unwrap();
    for (i, name) in names.iter().enumerate() {
        let gt: Vec<u8> = (0..32 * 32)
            .map(|p| {
                let (y, x) = (p / 32, p % 32);
                let inside = y >= 6 + i && y < 24 && x >= 4 && x < 20 + i;
                if inside {
                    255
                } else {
                    0
                }
            })
            .collect();
        let pred: Vec<u8> = gt
            .iter()
            .map(|&v| (0.75 * v as f64 + 0.25 * 96.0) as u8)
            .collect();
        write_pgm(&gt_dir.join(format!("{name}.pgm")), 32, 32, &gt);
        write_pgm(&pred_dir.join(format!("{name}.pgm")), 32, 32, &pred);
    }
    (pred_dir, gt_dir)
}

#[test]
fn nem_writes_maps_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, gt_dir) = fixture_dataset(tmp.path(), &["a", "b", "c"]);
    let out = run_in(tmp.path(), &["nem", gt_dir.to_str().unwrap(), "--out", "maps"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for name in ["a.pgm", "b.pgm", "c.pgm", "nem_stats.json"] {
        assert!(tmp.path().join("maps").join(name).exists(), "missing {name}");
    }
    let sidecar = fs::read_to_string(tmp.path().join("maps/nem_stats.json")).unwrap();
    assert!(sidecar.contains("\"min\"") && sidecar.contains("\"mean\""));
}

#[test]
fn nem_uniform_mask_yields_zero_map_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let gt_dir = tmp.path().join("gt");
    fs::create_dir_all(&gt_dir).unwrap();
    write_pgm(&gt_dir.join("flat.pgm"), 8, 8, &[255; 64]);
    let out = run_in(tmp.path(), &["nem", "gt", "--out", "maps"]);
    assert_eq!(out.status.code(), Some(0));
    let map = fs::read(tmp.path().join("maps/flat.pgm")).unwrap();
    let raster = &map[map.len() - 64..];
    assert!(raster.iter().all(|&b| b == 0));
    let sidecar = fs::read_to_string(tmp.path().join("maps/nem_stats.json")).unwrap();
    assert!(sidecar.contains("\"mean\": 0.0"));
}

#[test]
fn nem_continues_past_corrupt_files_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, gt_dir) = fixture_dataset(tmp.path(), &["good1", "good2"]);
    fs::write(gt_dir.join("broken.pgm"), b"not a pgm at all").unwrap();
    let out = run_in(tmp.path(), &["nem", "gt", "--out", "maps"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(tmp.path().join("maps/good1.pgm").exists());
    assert!(tmp.path().join("maps/good2.pgm").exists());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("broken"), "{stderr}");
}

#[test]
fn nem_empty_directory_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("gt")).unwrap();
    let out = run_in(tmp.path(), &["nem", "gt", "--out", "maps"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn loss_reports_csv_with_mean_row() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred_dir, gt_dir) = fixture_dataset(tmp.path(), &["a", "b"]);
    let out = run_in(
        tmp.path(),
        &["loss", pred_dir.to_str().unwrap(), gt_dir.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "image,newloss,bce");
    assert!(lines[1].starts_with("a,"));
    assert!(lines[2].starts_with("b,"));
    assert!(lines[3].starts_with("mean,"));

    // The weighted column dominates plain BCE when the weight map is
    // anywhere nonzero.
    for line in &lines[1..3] {
        let cols: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        assert!(cols[0] >= cols[1], "{line}");
    }
}

#[test]
fn loss_on_perfect_predictions_is_clamp_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let gt_dir = tmp.path().join("gt");
    let pred_dir = tmp.path().join("pred");
    fs::create_dir_all(&gt_dir).unwrap();
    fs::create_dir_all(&pred_dir).unwrap();
    let gt: Vec<u8> = (0..16 * 16)
        .map(|p| if (p / 16 + p % 16) % 3 == 0 { 255 } else { 0 })
        .collect();
    write_pgm(&gt_dir.join("x.pgm"), 16, 16, &gt);
    write_pgm(&pred_dir.join("x.pgm"), 16, 16, &gt);
    let out = run_in(tmp.path(), &["loss", "pred", "gt"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mean_line = stdout.lines().last().unwrap();
    let mean: f64 = mean_line.split(',').nth(1).unwrap().parse().unwrap();
    assert!(mean >= 0.0);
    assert!(mean < 1e-5, "perfect prediction should cost only the clamp floor, got {mean}");
}

#[test]
fn loss_unmatched_stems_exit_2_listing_orphans() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred_dir, gt_dir) = fixture_dataset(tmp.path(), &["a", "b"]);
    fs::remove_file(gt_dir.join("b.pgm")).unwrap();
    write_pgm(&gt_dir.join("z.pgm"), 4, 4, &[0; 16]);
    let out = run_in(
        tmp.path(),
        &["loss", pred_dir.to_str().unwrap(), gt_dir.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("b") && stderr.contains("z"), "{stderr}");
}

#[test]
fn eval_perfect_dataset_and_report_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let gt_dir = tmp.path().join("gt");
    let pred_dir = tmp.path().join("pred");
    fs::create_dir_all(&gt_dir).unwrap();
    fs::create_dir_all(&pred_dir).unwrap();
    for name in ["one", "two"] {
        let gt: Vec<u8> = (0..24 * 24)
            .map(|p| if (p / 24) < 12 { 255 } else { 0 })
            .collect();
        write_pgm(&gt_dir.join(format!("{name}.pgm")), 24, 24, &gt);
        write_pgm(&pred_dir.join(format!("{name}.pgm")), 24, 24, &gt);
    }
    let out = run_in(
        tmp.path(),
        &["eval", "pred", "gt", "--out", "report.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metrics"]["mae"], 0.0);
    assert_eq!(report["metrics"]["max_f"], 1.0);
    assert_eq!(report["metrics"]["s_measure"], 1.0);
    assert_eq!(report["config"]["beta2"], 0.3);
    assert_eq!(report["config"]["eta"], 1.0);
    assert_eq!(report["config"]["thresholds"], 256);
    assert_eq!(report["config"]["mu_f_mode"], "sweep");

    let csv = fs::read_to_string(tmp.path().join("report.pr.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 257);
    assert_eq!(lines[0], "threshold,precision,recall,f");
    let mut prev_recall = f64::INFINITY;
    for line in &lines[1..] {
        let recall: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(recall <= prev_recall + 1e-15);
        prev_recall = recall;
    }
}

#[test]
fn eval_adaptive_mode_is_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred_dir, gt_dir) = fixture_dataset(tmp.path(), &["a"]);
    let out = run_in(
        tmp.path(),
        &[
            "eval",
            pred_dir.to_str().unwrap(),
            gt_dir.to_str().unwrap(),
            "--mu-f-mode",
            "adaptive",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["mu_f_mode"], "adaptive");
}

#[test]
fn forward_is_seed_deterministic_and_seed_sensitive() {
    let tmp = tempfile::tempdir().unwrap();
    let pixels: Vec<u8> = (0..64 * 64 * 3).map(|i| (i * 7 % 256) as u8).collect();
    write_ppm(&tmp.path().join("img.ppm"), 64, 64, &pixels);

    let a = run_in(tmp.path(), &["forward", "img.ppm", "--seed", "5", "--out", "a.pgm"]);
    assert_eq!(a.status.code(), Some(0), "{a:?}");
    let b = run_in(tmp.path(), &["forward", "img.ppm", "--seed", "5", "--out", "b.pgm"]);
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(
        fs::read(tmp.path().join("a.pgm")).unwrap(),
        fs::read(tmp.path().join("b.pgm")).unwrap()
    );

    let c = run_in(tmp.path(), &["forward", "img.ppm", "--seed", "6", "--out", "c.pgm"]);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(
        fs::read(tmp.path().join("a.pgm")).unwrap(),
        fs::read(tmp.path().join("c.pgm")).unwrap()
    );

    // Output dimensions equal input dimensions.
    let map = fs::read(tmp.path().join("a.pgm")).unwrap();
    assert!(map.starts_with(b"P5\n64 64\n255\n"));

    // The seed appears on stdout for reproducibility.
    assert!(String::from_utf8_lossy(&a.stdout).contains("seed 5"));
}

#[test]
fn forward_rejects_bad_dimensions_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let pixels: Vec<u8> = vec![0; 60 * 64 * 3];
    write_ppm(&tmp.path().join("img.ppm"), 60, 64, &pixels);
    let out = run_in(tmp.path(), &["forward", "img.ppm", "--seed", "1", "--out", "o.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("divisible by 32"));
}

#[test]
fn load_rejects_nonstandard_maxval() {
    let tmp = tempfile::tempdir().unwrap();
    let gt_dir = tmp.path().join("gt");
    fs::create_dir_all(&gt_dir).unwrap();
    fs::write(gt_dir.join("m.pgm"), b"P5\n2 2\n127\n\x00\x01\x02\x03").unwrap();
    let out = run_in(tmp.path(), &["nem", "gt", "--out", "maps"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("maxval"));
}

#[test]
fn selftest_passes_and_fault_injection_fails_the_edt_suite() {
    let ok = bin().arg("selftest").output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");
    let stdout = String::from_utf8_lossy(&ok.stdout);
    for suite in ["edt-exactness", "conv-direct", "gradient-fd", "metric-counting"] {
        assert!(stdout.contains(suite), "missing suite {suite}");
    }
    assert!(stdout.contains("instances=") && stdout.contains("max-error="));

    let faulty = bin()
        .arg("selftest")
        .env("SODKIT_SELFTEST_FAULT", "edt")
        .output()
        .unwrap();
    assert_eq!(faulty.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&faulty.stdout);
    assert!(stdout.contains("edt-exactness") && stdout.contains("FAIL"), "{stdout}");
    assert!(stdout.contains("seed"), "failing seed must be printed: {stdout}");
}

#[test]
fn threads_flag_validates_and_preserves_results() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred_dir, gt_dir) = fixture_dataset(tmp.path(), &["a", "b"]);

    let bad = run_in(tmp.path(), &["--threads", "zero", "selftest"]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = run_in(tmp.path(), &["--threads", "0", "selftest"]);
    assert_eq!(bad.status.code(), Some(2));

    let one = run_in(
        tmp.path(),
        &[
            "--threads",
            "1",
            "eval",
            pred_dir.to_str().unwrap(),
            gt_dir.to_str().unwrap(),
            "--out",
            "r1.json",
        ],
    );
    assert_eq!(one.status.code(), Some(0), "{one:?}");
    let auto = run_in(
        tmp.path(),
        &[
            "eval",
            pred_dir.to_str().unwrap(),
            gt_dir.to_str().unwrap(),
            "--out",
            "r2.json",
        ],
    );
    assert_eq!(auto.status.code(), Some(0));
    assert_eq!(
        fs::read(tmp.path().join("r1.json")).unwrap(),
        fs::read(tmp.path().join("r2.json")).unwrap()
    );
}
