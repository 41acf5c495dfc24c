//! Numerics for salient object detection.
//!
//! The crate covers four pieces of the pipeline around a saliency model:
//!
//! * [`edt`]: exact Euclidean distance transforms and the near-edge mask,
//!   a weight map that emphasizes both sides of an object boundary;
//! * [`loss`]: the near-edge weighted binary cross-entropy and its analytic
//!   gradient with respect to the prediction;
//! * [`cfdn`]: a forward-only, seed-deterministic toy realization of the
//!   context-fusion encoder/decoder for structural verification;
//! * [`metrics`]: MAE, max/mean F-measure, structure measure, and 256-point
//!   PR curves over prediction/ground-truth datasets;
//!
//! all built on the small CHW kernel in [`tensor`].
//!
//! Everything is deterministic: identical inputs produce bit-identical
//! outputs, with or without the `parallel` feature and regardless of the
//! rayon worker count.

pub mod cfdn;
pub mod edt;
pub mod loss;
pub mod metrics;
pub mod tensor;

mod error;
mod par;

pub use error::{Error, Result};
