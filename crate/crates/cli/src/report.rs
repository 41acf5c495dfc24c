//! Report serialization: the evaluation JSON, the PR-curve CSV, and the
//! per-image statistics sidecar of the mask generator. Field order is fixed
//! so identical inputs always produce identical bytes.

use serde::Serialize;
use sodkit::metrics::{threshold_level, ThresholdSweep, THRESHOLD_COUNT};

#[derive(Debug, Serialize)]
pub struct Report {
    pub dataset: String,
    pub images: usize,
    pub toolkit_version: String,
    pub config: ConfigEcho,
    pub metrics: AggregateMetrics,
    pub per_image: Vec<PerImageMetrics>,
}

/// Everything needed to reproduce the numbers in the report.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub beta2: f64,
    pub eta: f64,
    pub thresholds: usize,
    pub mu_f_mode: String,
}

#[derive(Debug, Serialize)]
pub struct AggregateMetrics {
    pub mae: f64,
    pub max_f: f64,
    pub mean_f: f64,
    pub s_measure: f64,
}

#[derive(Debug, Serialize)]
pub struct PerImageMetrics {
    pub name: String,
    pub mae: f64,
    pub s_measure: f64,
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization is infallible");
    s.push('\n');
    s
}

/// CSV with a header row and exactly 256 data rows:
/// `threshold,precision,recall,f`.
pub fn pr_curve_csv(sweep: &ThresholdSweep, beta2: f64) -> String {
    let f_scores = sweep.f_scores(beta2);
    let mut out = String::with_capacity(THRESHOLD_COUNT * 48);
    out.push_str("threshold,precision,recall,f\n");
    for (i, f) in f_scores.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            threshold_level(i),
            sweep.precision[i],
            sweep.recall[i],
            f
        ));
    }
    out
}

/// Sidecar entry of the mask generator: value statistics of one weight map
/// before quantization.
#[derive(Debug, Serialize)]
pub struct WeightMapStats {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Serialize)]
pub struct WeightMapSidecar {
    pub images: Vec<WeightMapStats>,
}

pub fn sidecar_json(sidecar: &WeightMapSidecar) -> String {
    let mut s =
        serde_json::to_string_pretty(sidecar).expect("sidecar serialization is infallible");
    s.push('\n');
    s
}
