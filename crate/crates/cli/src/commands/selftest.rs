//! `selftest`: run the embedded oracle suites on seeded random instances and
//! report pass/fail per suite. The oracles recompute everything from first
//! principles (all-pairs distances, direct summation, finite differences,
//! per-pixel counting), independently of the library kernels they check.
//!
//! Test hook: setting `SODKIT_SELFTEST_FAULT` to a suite name (e.g. `edt`)
//! perturbs that suite's computed values so the harness itself can be
//! verified to fail loudly.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sodkit::edt::{build_nem, squared_distance_transform, BinaryMask};
use sodkit::loss::{newloss, newloss_grad, LossConfig, PredictionMap};
use sodkit::metrics::{pr_curve, threshold_level, THRESHOLD_COUNT};
use sodkit::tensor::{conv2d, ConvParams, Tensor};

use super::{EXIT_OK, EXIT_PARTIAL};

pub const FAULT_ENV: &str = "SODKIT_SELFTEST_FAULT";

struct SuiteResult {
    name: &'static str,
    instances: usize,
    max_error: f64,
    failing_seed: Option<u64>,
}

pub fn run() -> i32 {
    let fault = std::env::var(FAULT_ENV).unwrap_or_default();
    let results = [
        edt_suite(fault == "edt"),
        conv_suite(fault == "conv"),
        gradient_suite(fault == "gradient"),
        metrics_suite(fault == "metrics"),
    ];
    let mut all_ok = true;
    for r in &results {
        match r.failing_seed {
            None => println!(
                "selftest: {:<16} instances={:<3} max-error={:.3e}  PASS",
                r.name, r.instances, r.max_error
            ),
            Some(seed) => {
                println!(
                    "selftest: {:<16} instances={:<3} max-error={:.3e}  FAIL (reproduce with seed {seed})",
                    r.name, r.instances, r.max_error
                );
                all_ok = false;
            }
        }
    }
    if all_ok {
        println!("selftest: all suites passed");
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.next_u32() as f64 / 4294967296.0
}

fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize, density: f64) -> BinaryMask {
    let pixels = (0..h * w).map(|_| (unit(rng) < density) as u8).collect();
    BinaryMask::new(h, w, pixels).expect("generated pixels are binary")
}

fn random_prediction(rng: &mut ChaCha8Rng, h: usize, w: usize) -> PredictionMap {
    let values = (0..h * w).map(|_| unit(rng)).collect();
    PredictionMap::new(h, w, values).expect("generated values lie in [0, 1]")
}

/// All-pairs squared distances to the nearest background pixel.
fn brute_force_sq(mask: &BinaryMask) -> Vec<u64> {
    let (h, w) = (mask.height(), mask.width());
    let background: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (y, x)))
        .filter(|&(y, x)| mask.get(y, x) == 0)
        .collect();
    let mut out = vec![0u64; h * w];
    if background.is_empty() {
        return out;
    }
    for y in 0..h {
        for x in 0..w {
            if mask.get(y, x) == 0 {
                continue;
            }
            let mut best = u64::MAX;
            for &(qy, qx) in &background {
                let dy = y.abs_diff(qy) as u64;
                let dx = x.abs_diff(qx) as u64;
                best = best.min(dy * dy + dx * dx);
            }
            out[y * w + x] = best;
        }
    }
    out
}

fn edt_suite(inject_fault: bool) -> SuiteResult {
    const INSTANCES: usize = 40;
    let mut max_error = 0.0f64;
    for i in 0..INSTANCES as u64 {
        let seed = 9000 + i;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1 + (unit(&mut rng) * 32.0) as usize;
        let w = 1 + (unit(&mut rng) * 32.0) as usize;
        let density = unit(&mut rng);
        let mask = random_mask(&mut rng, h.min(32), w.min(32), density);
        let mut got = squared_distance_transform(&mask);
        if inject_fault && i == 0 {
            got[0] += 1;
        }
        let want = brute_force_sq(&mask);
        let worst = got
            .iter()
            .zip(&want)
            .map(|(&g, &e)| g.abs_diff(e) as f64)
            .fold(0.0f64, f64::max);
        max_error = max_error.max(worst);
        if worst > 0.0 {
            return SuiteResult {
                name: "edt-exactness",
                instances: INSTANCES,
                max_error,
                failing_seed: Some(seed),
            };
        }
    }
    SuiteResult {
        name: "edt-exactness",
        instances: INSTANCES,
        max_error,
        failing_seed: None,
    }
}

/// Direct nested-loop convolution, f64 throughout.
fn conv_oracle(input: &Tensor, p: &ConvParams) -> Vec<f64> {
    let (h, w) = (input.height(), input.width());
    let half = (p.kernel as isize - 1) / 2;
    let mut out = vec![0.0f64; p.out_channels * h * w];
    for o in 0..p.out_channels {
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = p.bias[o] as f64;
                for i in 0..p.in_channels {
                    for dy in 0..p.kernel as isize {
                        for dx in 0..p.kernel as isize {
                            let sy = y + p.dilation as isize * (dy - half);
                            let sx = x + p.dilation as isize * (dx - half);
                            if sy < 0 || sy >= h as isize || sx < 0 || sx >= w as isize {
                                continue;
                            }
                            let weight = p.weights[((o * p.in_channels + i) * p.kernel
                                + dy as usize)
                                * p.kernel
                                + dx as usize];
                            acc += weight as f64 * input.get(i, sy as usize, sx as usize) as f64;
                        }
                    }
                }
                out[(o * h + y as usize) * w + x as usize] = acc;
            }
        }
    }
    out
}

fn conv_suite(inject_fault: bool) -> SuiteResult {
    const INSTANCES: usize = 30;
    const TOLERANCE: f64 = 1e-6;
    let mut max_error = 0.0f64;
    for i in 0..INSTANCES as u64 {
        let seed = 9500 + i;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (kernel, dilation) = [(1usize, 1usize), (3, 1), (3, 3), (3, 7)][i as usize % 4];
        let c_in = 1 + i as usize % 3;
        let c_out = 1 + (i as usize / 4) % 3;
        let h = 4 + (unit(&mut rng) * 12.0) as usize;
        let w = 4 + (unit(&mut rng) * 12.0) as usize;
        let data = (0..c_in * h * w)
            .map(|_| (2.0 * unit(&mut rng) - 1.0) as f32)
            .collect();
        let input = Tensor::new(c_in, h, w, data).expect("sized by construction");
        let scale = 1.0 / ((c_in * kernel * kernel) as f64).sqrt();
        let weights = (0..c_out * c_in * kernel * kernel)
            .map(|_| ((2.0 * unit(&mut rng) - 1.0) * scale) as f32)
            .collect();
        let bias = (0..c_out)
            .map(|_| ((2.0 * unit(&mut rng) - 1.0) * scale) as f32)
            .collect();
        let p = ConvParams::new(c_out, c_in, kernel, dilation, weights, bias)
            .expect("parameters satisfy the invariants");
        let got = conv2d(&input, &p).expect("channels match");
        let want = conv_oracle(&input, &p);
        let mut worst = got
            .data()
            .iter()
            .zip(&want)
            .map(|(&g, &e)| (g as f64 - e).abs())
            .fold(0.0f64, f64::max);
        if inject_fault && i == 0 {
            worst += 1.0;
        }
        max_error = max_error.max(worst);
        if worst > TOLERANCE {
            return SuiteResult {
                name: "conv-direct",
                instances: INSTANCES,
                max_error,
                failing_seed: Some(seed),
            };
        }
    }
    SuiteResult {
        name: "conv-direct",
        instances: INSTANCES,
        max_error,
        failing_seed: None,
    }
}

fn gradient_suite(inject_fault: bool) -> SuiteResult {
    const INSTANCES: usize = 20;
    const TOLERANCE: f64 = 1e-5;
    let mut max_error = 0.0f64;
    for i in 0..INSTANCES as u64 {
        let seed = 9800 + i;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density = 0.3 + 0.4 * unit(&mut rng);
        let gt = random_mask(&mut rng, 8, 8, density);
        let base: Vec<f64> = (0..64).map(|_| 0.01 + 0.98 * unit(&mut rng)).collect();
        let pred = PredictionMap::new(8, 8, base.clone()).expect("values in [0.01, 0.99]");
        let nem = build_nem(&gt);
        let cfg = LossConfig::default();
        let grad = newloss_grad(&gt, &pred, &nem, &cfg).expect("dimensions match");
        let h = 1e-5;
        let mut worst = 0.0f64;
        for px in 0..64 {
            let mut plus = base.clone();
            plus[px] += h;
            let mut minus = base.clone();
            minus[px] -= h;
            let f_plus = newloss(&gt, &PredictionMap::new(8, 8, plus).unwrap(), &nem, &cfg)
                .expect("dimensions match");
            let f_minus = newloss(&gt, &PredictionMap::new(8, 8, minus).unwrap(), &nem, &cfg)
                .expect("dimensions match");
            let fd = (f_plus - f_minus) / (2.0 * h);
            let rel = (grad.values()[px] - fd).abs() / fd.abs().max(1e-12);
            worst = worst.max(rel);
        }
        if inject_fault && i == 0 {
            worst += 1.0;
        }
        max_error = max_error.max(worst);
        if worst > TOLERANCE {
            return SuiteResult {
                name: "gradient-fd",
                instances: INSTANCES,
                max_error,
                failing_seed: Some(seed),
            };
        }
    }
    SuiteResult {
        name: "gradient-fd",
        instances: INSTANCES,
        max_error,
        failing_seed: None,
    }
}

fn metrics_suite(inject_fault: bool) -> SuiteResult {
    const INSTANCES: usize = 10;
    const TOLERANCE: f64 = 1e-9;
    let mut max_error = 0.0f64;
    for i in 0..INSTANCES as u64 {
        let seed = 9900 + i;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density = 0.2 + 0.6 * unit(&mut rng);
        let gt = random_mask(&mut rng, 24, 24, density);
        let pred = random_prediction(&mut rng, 24, 24);
        let sweep = pr_curve(&[(pred.clone(), gt.clone())]).expect("nonempty dataset");
        let mut worst = 0.0f64;
        for level in 0..THRESHOLD_COUNT {
            let t = threshold_level(level);
            // Per-pixel counting oracle.
            let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
            for y in 0..24 {
                for x in 0..24 {
                    let positive = pred.get(y, x) >= t;
                    let foreground = gt.get(y, x) == 1;
                    match (positive, foreground) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fn_ += 1,
                        (false, false) => {}
                    }
                }
            }
            let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            worst = worst.max((sweep.precision[level] - precision).abs());
            worst = worst.max((sweep.recall[level] - recall).abs());
        }
        if inject_fault && i == 0 {
            worst += 1.0;
        }
        max_error = max_error.max(worst);
        if worst > TOLERANCE {
            return SuiteResult {
                name: "metric-counting",
                instances: INSTANCES,
                max_error,
                failing_seed: Some(seed),
            };
        }
    }
    SuiteResult {
        name: "metric-counting",
        instances: INSTANCES,
        max_error,
        failing_seed: None,
    }
}
