//! Evaluation measures for saliency predictions: MAE, F-measure over a
//! 256-level threshold sweep, structure measure, and PR curves.
//!
//! Thresholds are `t = i/255` for `i = 0..=255`; a pixel is positive when
//! `p̂ >= t`. Precision and recall are computed per image (0/0 ratios are 0)
//! and averaged over the dataset, matching the usual toolkit convention.
//! Per-image work may run in parallel; aggregation folds the per-image values
//! in input order with `f64` accumulators, so results are independent of the
//! worker count.

use crate::edt::BinaryMask;
use crate::error::{Error, Result};
use crate::loss::PredictionMap;
use crate::par;

/// Number of binarization levels in a sweep.
pub const THRESHOLD_COUNT: usize = 256;

/// Default F-measure weighting (`beta^2`), the universal SOD convention.
pub const DEFAULT_BETA2: f64 = 0.3;

/// Default object/region trade-off of the structure measure.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Threshold value of sweep level `i`.
pub fn threshold_level(i: usize) -> f64 {
    i as f64 / 255.0
}

fn check_dims(context: &'static str, pred: &PredictionMap, gt: &BinaryMask) -> Result<()> {
    if gt.height() != pred.height() || gt.width() != pred.width() {
        return Err(Error::shape(
            context,
            format!("{}x{}", gt.height(), gt.width()),
            format!("{}x{}", pred.height(), pred.width()),
        ));
    }
    Ok(())
}

/// Mean absolute error between a prediction and a binary ground truth.
pub fn mae(pred: &PredictionMap, gt: &BinaryMask) -> Result<f64> {
    check_dims("mae", pred, gt)?;
    let sum: f64 = pred
        .values()
        .iter()
        .zip(gt.pixels())
        .map(|(&p_hat, &p)| (p_hat - p as f64).abs())
        .sum();
    Ok(sum / (pred.height() * pred.width()) as f64)
}

/// Pixel counts of a binarized prediction against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_pos)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_neg)
    }
}

/// 0/0 is defined as 0.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f_score(precision: f64, recall: f64, beta2: f64) -> f64 {
    let den = beta2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + beta2) * precision * recall / den
    }
}

/// Confusion counts at a single threshold (positive iff `p̂ >= t`).
pub fn threshold_confusion(pred: &PredictionMap, gt: &BinaryMask, t: f64) -> Result<Confusion> {
    check_dims("threshold_confusion", pred, gt)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!(
            "threshold_confusion: threshold {t} outside [0, 1]"
        )));
    }
    let mut c = Confusion {
        true_pos: 0,
        false_pos: 0,
        false_neg: 0,
        true_neg: 0,
    };
    for (&p_hat, &p) in pred.values().iter().zip(gt.pixels()) {
        match (p_hat >= t, p == 1) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

/// Aggregate precision/recall over the 256-level sweep of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    /// Dataset-averaged precision per threshold level.
    pub precision: Vec<f64>,
    /// Dataset-averaged recall per threshold level; non-increasing.
    pub recall: Vec<f64>,
}

impl ThresholdSweep {
    /// F-measure per threshold level for the given `beta^2`.
    pub fn f_scores(&self, beta2: f64) -> Vec<f64> {
        self.precision
            .iter()
            .zip(&self.recall)
            .map(|(&p, &r)| f_score(p, r, beta2))
            .collect()
    }
}

/// Largest level `i` with `i/255 <= v`, computed exactly: a pixel of value
/// `v` is positive for precisely the levels `0..=i`.
fn positive_levels(v: f64) -> usize {
    let mut k = (v * 255.0).floor() as i64;
    k = k.clamp(0, 255);
    while k < 255 && threshold_level(k as usize + 1) <= v {
        k += 1;
    }
    while k > 0 && threshold_level(k as usize) > v {
        k -= 1;
    }
    k as usize
}

/// Per-image sweep counts: true/false positives at every level, plus the
/// foreground/background totals.
struct SweepCounts {
    true_pos: [u64; THRESHOLD_COUNT],
    false_pos: [u64; THRESHOLD_COUNT],
    foreground: u64,
}

fn image_sweep_counts(pred: &PredictionMap, gt: &BinaryMask) -> SweepCounts {
    let mut fg_hist = [0u64; THRESHOLD_COUNT];
    let mut bg_hist = [0u64; THRESHOLD_COUNT];
    let mut foreground = 0u64;
    for (&p_hat, &p) in pred.values().iter().zip(gt.pixels()) {
        let k = positive_levels(p_hat);
        if p == 1 {
            fg_hist[k] += 1;
            foreground += 1;
        } else {
            bg_hist[k] += 1;
        }
    }
    // Suffix sums: positives at level i are the pixels whose last positive
    // level is >= i.
    let mut true_pos = [0u64; THRESHOLD_COUNT];
    let mut false_pos = [0u64; THRESHOLD_COUNT];
    let mut tp = 0u64;
    let mut fp = 0u64;
    for i in (0..THRESHOLD_COUNT).rev() {
        tp += fg_hist[i];
        fp += bg_hist[i];
        true_pos[i] = tp;
        false_pos[i] = fp;
    }
    SweepCounts {
        true_pos,
        false_pos,
        foreground,
    }
}

fn dataset_sweep(dataset: &[(PredictionMap, BinaryMask)]) -> Result<ThresholdSweep> {
    if dataset.is_empty() {
        return Err(Error::invalid("threshold sweep: dataset is empty"));
    }
    for (i, (pred, gt)) in dataset.iter().enumerate() {
        check_dims("threshold sweep", pred, gt)
            .map_err(|e| e.at_stage(&format!("image {i}")))?;
    }
    let per_image = par::map_indexed(dataset.len(), |i| {
        let (pred, gt) = &dataset[i];
        image_sweep_counts(pred, gt)
    });
    let n = dataset.len() as f64;
    let mut precision = vec![0.0f64; THRESHOLD_COUNT];
    let mut recall = vec![0.0f64; THRESHOLD_COUNT];
    for counts in &per_image {
        for i in 0..THRESHOLD_COUNT {
            let tp = counts.true_pos[i];
            let fp = counts.false_pos[i];
            precision[i] += ratio(tp, tp + fp);
            recall[i] += ratio(tp, counts.foreground);
        }
    }
    for i in 0..THRESHOLD_COUNT {
        precision[i] /= n;
        recall[i] /= n;
    }
    Ok(ThresholdSweep { precision, recall })
}

/// Maximum and mean F-measure over the threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FMeasures {
    pub max_f: f64,
    pub mean_f: f64,
    pub sweep: ThresholdSweep,
}

/// Sweep-based F-measures of a dataset: per-threshold F from the
/// dataset-averaged precision/recall, maximized respectively averaged over
/// the 256 levels. `max_f >= mean_f` by construction.
pub fn f_measures(dataset: &[(PredictionMap, BinaryMask)], beta2: f64) -> Result<FMeasures> {
    let sweep = dataset_sweep(dataset)?;
    let scores = sweep.f_scores(beta2);
    let max_f = scores.iter().copied().fold(0.0f64, f64::max);
    let mean_f = scores.iter().sum::<f64>() / THRESHOLD_COUNT as f64;
    Ok(FMeasures {
        max_f,
        mean_f,
        sweep,
    })
}

/// Adaptive-threshold mean F: each image is binarized at twice its mean
/// prediction (capped at 1) and the per-image F values are averaged.
pub fn mean_f_adaptive(dataset: &[(PredictionMap, BinaryMask)], beta2: f64) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::invalid("adaptive F: dataset is empty"));
    }
    let scores: Vec<f64> = dataset
        .iter()
        .map(|(pred, gt)| {
            let mean =
                pred.values().iter().sum::<f64>() / (pred.height() * pred.width()) as f64;
            let t = (2.0 * mean).min(1.0);
            let c = threshold_confusion(pred, gt, t)?;
            Ok(f_score(c.precision(), c.recall(), beta2))
        })
        .collect::<Result<_>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Mean and sample standard deviation (n-1 normalization; 0 when n <= 1).
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let mut n = 0usize;
    let mut sum = 0.0f64;
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = sum / n as f64;
    if n == 1 {
        return (mean, 0.0, 1);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt(), n)
}

/// Object-level similarity of a region: `2*x̄ / (x̄^2 + 1 + 2*σ_x)`.
fn object_score(mean: f64, std: f64) -> f64 {
    2.0 * mean / (mean * mean + 1.0 + 2.0 * std)
}

fn s_object(pred: &PredictionMap, gt: &BinaryMask) -> f64 {
    let total = (gt.height() * gt.width()) as f64;
    let mu = gt.foreground_count() as f64 / total;
    let fg = pred
        .values()
        .iter()
        .zip(gt.pixels())
        .filter(|(_, &p)| p == 1)
        .map(|(&v, _)| v);
    let (fg_mean, fg_std, _) = mean_std(fg);
    let bg = pred
        .values()
        .iter()
        .zip(gt.pixels())
        .filter(|(_, &p)| p == 0)
        .map(|(&v, _)| 1.0 - v);
    let (bg_mean, bg_std, _) = mean_std(bg);
    mu * object_score(fg_mean, fg_std) + (1.0 - mu) * object_score(bg_mean, bg_std)
}

/// SSIM-style score of one quadrant from means, variances, and covariance.
/// Zero denominator: 1 when the numerator is also zero and the means agree,
/// otherwise 0.
fn quadrant_score(pred: &[f64], gt: &[f64]) -> f64 {
    let n = pred.len();
    if n == 0 {
        return 0.0;
    }
    let mean_x = pred.iter().sum::<f64>() / n as f64;
    let mean_y = gt.iter().sum::<f64>() / n as f64;
    let (mut var_x, mut var_y, mut cov) = (0.0f64, 0.0f64, 0.0f64);
    if n > 1 {
        for (&x, &y) in pred.iter().zip(gt) {
            var_x += (x - mean_x) * (x - mean_x);
            var_y += (y - mean_y) * (y - mean_y);
            cov += (x - mean_x) * (y - mean_y);
        }
        let denom = (n - 1) as f64;
        var_x /= denom;
        var_y /= denom;
        cov /= denom;
    }
    let num = 4.0 * mean_x * mean_y * cov;
    let den = (mean_x * mean_x + mean_y * mean_y) * (var_x + var_y);
    if den != 0.0 {
        num / den
    } else if num == 0.0 && mean_x == mean_y {
        1.0
    } else {
        0.0
    }
}

fn s_region(pred: &PredictionMap, gt: &BinaryMask) -> f64 {
    let (h, w) = (gt.height(), gt.width());
    // Foreground centroid, rounded to pixel indices.
    let (mut sy, mut sx, mut count) = (0.0f64, 0.0f64, 0usize);
    for y in 0..h {
        for x in 0..w {
            if gt.get(y, x) == 1 {
                sy += y as f64;
                sx += x as f64;
                count += 1;
            }
        }
    }
    let cy = ((sy / count as f64).round() as usize).min(h - 1);
    let cx = ((sx / count as f64).round() as usize).min(w - 1);

    // Quadrants split below/right of the centroid row/column (inclusive).
    let spans = [
        (0..cy + 1, 0..cx + 1),
        (0..cy + 1, cx + 1..w),
        (cy + 1..h, 0..cx + 1),
        (cy + 1..h, cx + 1..w),
    ];
    let total = (h * w) as f64;
    let mut score = 0.0f64;
    for (rows, cols) in spans {
        let area = rows.len() * cols.len();
        if area == 0 {
            continue;
        }
        let mut pq = Vec::with_capacity(area);
        let mut gq = Vec::with_capacity(area);
        for y in rows.clone() {
            for x in cols.clone() {
                pq.push(pred.get(y, x));
                gq.push(gt.get(y, x) as f64);
            }
        }
        score += area as f64 / total * quadrant_score(&pq, &gq);
    }
    score
}

/// Structure measure `S = alpha*S_object + (1-alpha)*S_region`, clamped to
/// `[0, 1]`. An all-background ground truth scores `1 - mean(pred)`, an
/// all-foreground one scores `mean(pred)`.
pub fn s_measure(pred: &PredictionMap, gt: &BinaryMask, alpha: f64) -> Result<f64> {
    check_dims("s_measure", pred, gt)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "s_measure: alpha {alpha} outside [0, 1]"
        )));
    }
    let total = (gt.height() * gt.width()) as f64;
    let fg = gt.foreground_count();
    let pred_mean = pred.values().iter().sum::<f64>() / total;
    if fg == 0 {
        return Ok(1.0 - pred_mean);
    }
    if fg == gt.pixels().len() {
        return Ok(pred_mean);
    }
    let s = alpha * s_object(pred, gt) + (1.0 - alpha) * s_region(pred, gt);
    Ok(s.clamp(0.0, 1.0))
}

/// 256-point PR curve of a dataset (dataset-averaged per-image P/R).
pub fn pr_curve(dataset: &[(PredictionMap, BinaryMask)]) -> Result<ThresholdSweep> {
    dataset_sweep(dataset)
}

/// How the reported mean F-measure is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuFMode {
    /// Mean of the dataset-averaged F over the 256 thresholds.
    #[default]
    Sweep,
    /// Per-image F at twice the mean prediction value, averaged.
    Adaptive,
}

/// Configuration of a dataset evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub beta2: f64,
    pub alpha: f64,
    pub mu_f_mode: MuFMode,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            beta2: DEFAULT_BETA2,
            alpha: DEFAULT_ALPHA,
            mu_f_mode: MuFMode::Sweep,
        }
    }
}

/// Per-image measures, in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMetrics {
    pub mae: f64,
    pub s_measure: f64,
}

/// Dataset-level evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mae: f64,
    pub max_f: f64,
    pub mean_f: f64,
    pub s_measure: f64,
    pub per_image: Vec<ImageMetrics>,
    pub sweep: ThresholdSweep,
}

/// Evaluate all measures over a dataset of (prediction, ground-truth) pairs.
pub fn evaluate_dataset(
    dataset: &[(PredictionMap, BinaryMask)],
    cfg: &MetricsConfig,
) -> Result<MetricsReport> {
    if dataset.is_empty() {
        return Err(Error::invalid("evaluate_dataset: dataset is empty"));
    }
    let fm = f_measures(dataset, cfg.beta2)?;
    let per_image: Vec<ImageMetrics> = par::map_indexed(dataset.len(), |i| {
        let (pred, gt) = &dataset[i];
        // Dimensions were checked by the sweep above.
        ImageMetrics {
            mae: mae(pred, gt).expect("dimensions already validated"),
            s_measure: s_measure(pred, gt, cfg.alpha).expect("dimensions already validated"),
        }
    });
    let n = dataset.len() as f64;
    let mae_mean = per_image.iter().map(|m| m.mae).sum::<f64>() / n;
    let s_mean = per_image.iter().map(|m| m.s_measure).sum::<f64>() / n;
    let mean_f = match cfg.mu_f_mode {
        MuFMode::Sweep => fm.mean_f,
        MuFMode::Adaptive => mean_f_adaptive(dataset, cfg.beta2)?,
    };
    Ok(MetricsReport {
        mae: mae_mean,
        max_f: fm.max_f,
        mean_f,
        s_measure: s_mean,
        per_image,
        sweep: fm.sweep,
    })
}
