//! Brute-force oracles and fixture generators shared by the integration
//! tests. Everything here recomputes results from first principles,
//! independently of the library's implementation paths.

// Each test target compiles its own copy and uses a different subset.
#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sodkit::edt::BinaryMask;
use sodkit::loss::PredictionMap;
use sodkit::tensor::{ConvParams, Tensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.next_u32() as f64 / 4294967296.0
}

/// All-pairs squared Euclidean distance to the nearest background pixel;
/// zero on background, all-zero when no background exists.
pub fn brute_force_sq(mask: &BinaryMask) -> Vec<u64> {
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

/// Direct nested-loop convolution in f64, same contract as `conv2d`.
pub fn conv_oracle(input: &Tensor, p: &ConvParams) -> Vec<f64> {
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

/// Per-pixel confusion counts at one threshold (positive iff `p >= t`),
/// counted directly.
pub struct OracleCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

pub fn count_confusion(pred: &PredictionMap, gt: &BinaryMask, t: f64) -> OracleCounts {
    let mut c = OracleCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            let positive = pred.get(y, x) >= t;
            let foreground = gt.get(y, x) == 1;
            match (positive, foreground) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    c
}

pub fn random_mask(rng: &mut ChaCha8Rng, height: usize, width: usize, density: f64) -> BinaryMask {
    let pixels = (0..height * width)
        .map(|_| (unit(rng) < density) as u8)
        .collect();
    BinaryMask::new(height, width, pixels).unwrap()
}

pub fn random_prediction(rng: &mut ChaCha8Rng, height: usize, width: usize) -> PredictionMap {
    let values = (0..height * width).map(|_| unit(rng)).collect();
    PredictionMap::new(height, width, values).unwrap()
}

pub fn disk_mask(size: usize, radius: f64) -> BinaryMask {
    let c = (size as f64 - 1.0) / 2.0;
    BinaryMask::from_fn(size, size, |y, x| {
        let dy = y as f64 - c;
        let dx = x as f64 - c;
        dy * dy + dx * dx <= radius * radius
    })
}

pub fn ring_mask(size: usize, inner: f64, outer: f64) -> BinaryMask {
    let c = (size as f64 - 1.0) / 2.0;
    BinaryMask::from_fn(size, size, |y, x| {
        let dy = y as f64 - c;
        let dx = x as f64 - c;
        let r2 = dy * dy + dx * dx;
        r2 >= inner * inner && r2 <= outer * outer
    })
}

pub fn checkerboard_mask(size: usize, cell: usize) -> BinaryMask {
    BinaryMask::from_fn(size, size, |y, x| (y / cell + x / cell).is_multiple_of(2))
}

pub fn single_pixel_mask(size: usize) -> BinaryMask {
    BinaryMask::from_fn(size, size, |y, x| y == size / 2 && x == size / 2)
}

pub fn uniform_mask(size: usize, value: u8) -> BinaryMask {
    BinaryMask::new(size, size, vec![value; size * size]).unwrap()
}

pub fn random_conv_params(
    rng: &mut ChaCha8Rng,
    out_c: usize,
    in_c: usize,
    kernel: usize,
    dilation: usize,
) -> ConvParams {
    let scale = 1.0 / ((in_c * kernel * kernel) as f64).sqrt();
    let weights = (0..out_c * in_c * kernel * kernel)
        .map(|_| ((2.0 * unit(rng) - 1.0) * scale) as f32)
        .collect();
    let bias = (0..out_c)
        .map(|_| ((2.0 * unit(rng) - 1.0) * scale) as f32)
        .collect();
    ConvParams::new(out_c, in_c, kernel, dilation, weights, bias).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor {
    let data = (0..c * h * w)
        .map(|_| (2.0 * unit(rng) - 1.0) as f32)
        .collect();
    Tensor::new(c, h, w, data).unwrap()
}

pub fn random_batchnorm(rng: &mut ChaCha8Rng, channels: usize) -> sodkit::tensor::BatchNormParams {
    sodkit::tensor::BatchNormParams::new(
        (0..channels).map(|_| (0.75 + 0.5 * unit(rng)) as f32).collect(),
        (0..channels).map(|_| (0.2 * unit(rng) - 0.1) as f32).collect(),
        (0..channels).map(|_| (0.2 * unit(rng) - 0.1) as f32).collect(),
        (0..channels).map(|_| (0.5 + unit(rng)) as f32).collect(),
        1e-5,
    )
    .unwrap()
}
