//! Exact Euclidean distance transform and near-edge mask construction.
//!
//! A ground-truth mask is turned into an inner distance map (foreground
//! pixels hold the distance to the nearest background pixel), normalized and
//! subtracted from the mask, and the same applied to the inverted mask. The
//! sum of the two edge maps is the near-edge mask: a weight map in `[0, 1]`
//! that peaks on both sides of the object boundary.
//!
//! The transform is exact: squared distances are computed with the two-pass
//! lower-envelope method and are bit-equal to the all-pairs minimum.
//! Approximate (chamfer) transforms are deliberately not offered.

use crate::error::{Error, Result};
use crate::par;

/// Binary ground-truth mask; 1 marks salient foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("mask: dimensions must be positive"));
        }
        if pixels.len() != height * width {
            return Err(Error::shape(
                "mask",
                format!("{} pixels", height * width),
                format!("{}", pixels.len()),
            ));
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::invalid("mask: pixels must be 0 or 1"));
        }
        Ok(BinaryMask {
            height,
            width,
            pixels,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut pixels = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(y, x) as u8);
            }
        }
        BinaryMask {
            height,
            width,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// `1 - G`: foreground and background swapped.
    pub fn inverted(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|&p| 1 - p).collect(),
        }
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// True when every pixel has the same value (no boundary exists).
    pub fn is_uniform(&self) -> bool {
        let fg = self.foreground_count();
        fg == 0 || fg == self.pixels.len()
    }
}

/// Euclidean distances of foreground pixels to the nearest background pixel;
/// zero on background pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DistanceMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Per-pixel edge weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl EdgeWeightMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::shape(
                "edge weight map",
                format!("{} values", height * width),
                format!("{}", values.len()),
            ));
        }
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::invalid("edge weight map: values must lie in [0, 1]"));
        }
        Ok(EdgeWeightMap {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        EdgeWeightMap {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// One-dimensional squared-distance transform over the lower envelope of
/// parabolas, in place. Infinite entries act as absent sites.
fn dt1d(f: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut centers = vec![0usize; n];
    let mut bounds = vec![0f64; n + 1];
    let mut k = 0usize;
    bounds[0] = f64::NEG_INFINITY;
    bounds[1] = f64::INFINITY;

    let intersect = |f: &[f64], p: usize, q: usize| -> f64 {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2 * q - 2 * p) as f64
    };

    for q in 1..n {
        if f[q].is_infinite() {
            continue;
        }
        if f[centers[k]].is_infinite() {
            // Only reachable while the envelope still holds the infinite
            // seed parabola at k == 0; replace it outright.
            centers[k] = q;
            continue;
        }
        let mut s = intersect(f, centers[k], q);
        while s <= bounds[k] {
            k -= 1;
            s = intersect(f, centers[k], q);
        }
        k += 1;
        centers[k] = q;
        bounds[k] = s;
        bounds[k + 1] = f64::INFINITY;
    }

    let mut out = vec![0f64; n];
    let mut k = 0usize;
    for (q, slot) in out.iter_mut().enumerate() {
        while bounds[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - centers[k] as f64;
        *slot = d * d + f[centers[k]];
    }
    f.copy_from_slice(&out);
}

fn transpose(src: &[f64], height: usize, width: usize) -> Vec<f64> {
    let mut out = vec![0f64; src.len()];
    par::for_each_chunk(&mut out, height, |x, column| {
        for (y, slot) in column.iter_mut().enumerate() {
            *slot = src[y * width + x];
        }
    });
    out
}

/// Squared Euclidean distance of each pixel to the nearest background pixel,
/// row-major. Exact integers; zero on background pixels. A mask without any
/// background degenerates to all zeros.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<u64> {
    let (h, w) = (mask.height, mask.width);
    if mask.pixels.iter().all(|&p| p == 1) {
        return vec![0; h * w];
    }
    let mut grid: Vec<f64> = mask
        .pixels
        .iter()
        .map(|&p| if p == 0 { 0.0 } else { f64::INFINITY })
        .collect();
    par::for_each_chunk(&mut grid, w, |_, row| dt1d(row));
    let mut cols = transpose(&grid, h, w);
    par::for_each_chunk(&mut cols, h, |_, col| dt1d(col));
    let grid = transpose(&cols, w, h);
    grid.iter().map(|&v| v.round() as u64).collect()
}

/// Euclidean distance transform; see [`squared_distance_transform`].
pub fn distance_transform(mask: &BinaryMask) -> DistanceMap {
    let values = squared_distance_transform(mask)
        .iter()
        .map(|&sq| (sq as f64).sqrt())
        .collect();
    DistanceMap {
        height: mask.height,
        width: mask.width,
        values,
    }
}

/// Subtract the min-max-normalized distance map from the mask:
/// `result(p) = mask(p) - (dist(p) - min) / (max - min)`.
///
/// When the distance map is constant the normalized term is defined as zero,
/// so the result equals the mask. With `dist` produced from `mask` the result
/// always lies in `[0, 1]`: large near the boundary on the mask's foreground,
/// zero on its background.
pub fn edge_tf(dist: &DistanceMap, mask: &BinaryMask) -> Result<EdgeWeightMap> {
    if dist.height != mask.height || dist.width != mask.width {
        return Err(Error::shape(
            "edge_tf",
            format!("{}x{}", mask.height, mask.width),
            format!("{}x{}", dist.height, dist.width),
        ));
    }
    let min = dist.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = dist.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let values: Vec<f64> = mask
        .pixels
        .iter()
        .zip(&dist.values)
        .map(|(&m, &d)| {
            let normalized = if range == 0.0 { 0.0 } else { (d - min) / range };
            m as f64 - normalized
        })
        .collect();
    debug_assert!(values.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    Ok(EdgeWeightMap {
        height: mask.height,
        width: mask.width,
        values,
    })
}

/// Assemble the near-edge mask of a ground truth:
/// `edge_tf(dt(G), G) + edge_tf(dt(1-G), 1-G)`.
///
/// The two addends live on disjoint pixel sets (foreground respectively
/// background of `G`), so the sum stays in `[0, 1]`. A uniform mask has no
/// boundary and yields the all-zero map.
pub fn build_nem(gt: &BinaryMask) -> EdgeWeightMap {
    if gt.is_uniform() {
        return EdgeWeightMap::zeros(gt.height, gt.width);
    }
    let inverse = gt.inverted();
    let inner = edge_tf(&distance_transform(gt), gt).expect("dimensions match by construction");
    let outer =
        edge_tf(&distance_transform(&inverse), &inverse).expect("dimensions match by construction");
    let values = inner
        .values
        .iter()
        .zip(&outer.values)
        .map(|(&a, &b)| a + b)
        .collect();
    EdgeWeightMap {
        height: gt.height,
        width: gt.width,
        values,
    }
}
