//! Near-edge weighted binary cross-entropy and its analytic gradient.
//!
//! The per-pixel log-likelihood `p*ln(p̂) + (1-p)*ln(1-p̂)` is scaled by
//! `NEM + eta` and averaged with a single leading minus, so the loss is
//! non-negative and boundary pixels contribute more. `eta` keeps pixels with
//! zero edge weight in play; its default of 1 reduces the unweighted case to
//! plain mean BCE.
//!
//! Predictions are clamped to `[EPS, 1-EPS]` before the logarithm. Natural
//! logarithms throughout. Summation is row-major with an `f64` accumulator,
//! so results do not depend on the worker count.

use crate::edt::{BinaryMask, EdgeWeightMap};
use crate::error::{Error, Result};
use crate::par;

/// Clamp bound for log arguments; perturbs losses below metric resolution
/// while keeping them finite.
pub const EPS: f64 = 1e-7;

/// Predicted saliency probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl PredictionMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::shape(
                "prediction map",
                format!("{} values", height * width),
                format!("{}", values.len()),
            ));
        }
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::invalid(
                "prediction map: values must lie in [0, 1]",
            ));
        }
        Ok(PredictionMap {
            height,
            width,
            values,
        })
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
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

/// Loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Additive weight floor; must be positive wherever the edge weight is 0.
    pub eta: f64,
}

impl LossConfig {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::invalid("loss config: eta must be finite and >= 0"));
        }
        Ok(LossConfig { eta })
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { eta: 1.0 }
    }
}

/// Unconstrained per-pixel real values (log-likelihoods, gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl PixelMap {
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

fn check_dims(context: &'static str, gt: &BinaryMask, pred: &PredictionMap) -> Result<()> {
    if gt.height() != pred.height() || gt.width() != pred.width() {
        return Err(Error::shape(
            context,
            format!("{}x{}", gt.height(), gt.width()),
            format!("{}x{}", pred.height(), pred.width()),
        ));
    }
    Ok(())
}

fn clamp(p_hat: f64) -> f64 {
    p_hat.clamp(EPS, 1.0 - EPS)
}

fn bce_at(p: u8, p_hat: f64) -> f64 {
    let q = clamp(p_hat);
    if p == 1 {
        q.ln()
    } else {
        (1.0 - q).ln()
    }
}

/// Per-pixel log-likelihood `p*ln(p̂) + (1-p)*ln(1-p̂)`; all values <= 0.
pub fn bce_map(gt: &BinaryMask, pred: &PredictionMap) -> Result<PixelMap> {
    check_dims("bce_map", gt, pred)?;
    let values = gt
        .pixels()
        .iter()
        .zip(pred.values())
        .map(|(&p, &p_hat)| bce_at(p, p_hat))
        .collect();
    Ok(PixelMap {
        height: gt.height(),
        width: gt.width(),
        values,
    })
}

/// Near-edge weighted BCE:
/// `-(1/(N*M)) * sum_{x,y} (NEM(x,y) + eta) * BCE(p, p̂)`.
///
/// Non-negative; zero only for a prediction that is exactly correct up to the
/// clamp. Errors when the maps disagree on dimensions, or when `eta` is zero
/// while some edge weight is zero (every pixel must keep a positive weight).
pub fn newloss(
    gt: &BinaryMask,
    pred: &PredictionMap,
    nem: &EdgeWeightMap,
    cfg: &LossConfig,
) -> Result<f64> {
    check_dims("newloss", gt, pred)?;
    if nem.height() != gt.height() || nem.width() != gt.width() {
        return Err(Error::shape(
            "newloss edge weights",
            format!("{}x{}", gt.height(), gt.width()),
            format!("{}x{}", nem.height(), nem.width()),
        ));
    }
    if cfg.eta == 0.0 && nem.values().contains(&0.0) {
        return Err(Error::invalid(
            "newloss: eta must be > 0 when the edge weight map contains zeros",
        ));
    }
    let (h, w) = (gt.height(), gt.width());
    let row_sums = par::map_indexed(h, |y| {
        let mut acc = 0.0f64;
        for x in 0..w {
            let i = y * w + x;
            acc += (nem.values()[i] + cfg.eta) * bce_at(gt.pixels()[i], pred.values()[i]);
        }
        acc
    });
    let total: f64 = row_sums.iter().sum();
    Ok(-total / (h * w) as f64)
}

/// Analytic derivative of [`newloss`] with respect to each prediction pixel:
/// `-(NEM + eta)/(N*M) * (p/p̂ - (1-p)/(1-p̂))` on the clamp interior, zero
/// where the clamp is active.
pub fn newloss_grad(
    gt: &BinaryMask,
    pred: &PredictionMap,
    nem: &EdgeWeightMap,
    cfg: &LossConfig,
) -> Result<PixelMap> {
    check_dims("newloss_grad", gt, pred)?;
    if nem.height() != gt.height() || nem.width() != gt.width() {
        return Err(Error::shape(
            "newloss_grad edge weights",
            format!("{}x{}", gt.height(), gt.width()),
            format!("{}x{}", nem.height(), nem.width()),
        ));
    }
    let n = (gt.height() * gt.width()) as f64;
    let values = gt
        .pixels()
        .iter()
        .zip(pred.values())
        .zip(nem.values())
        .map(|((&p, &p_hat), &weight)| {
            if p_hat <= EPS || p_hat >= 1.0 - EPS {
                0.0
            } else {
                let ratio = if p == 1 {
                    1.0 / p_hat
                } else {
                    -1.0 / (1.0 - p_hat)
                };
                -(weight + cfg.eta) / n * ratio
            }
        })
        .collect();
    Ok(PixelMap {
        height: gt.height(),
        width: gt.width(),
        values,
    })
}
