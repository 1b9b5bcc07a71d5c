//! Volumetric anomaly scoring from input/reconstruction pairs.
//!
//! The crate computes per-voxel anomaly maps (l1 residual, Gaussian-window
//! SSIM at one spread, or a softmax-weighted ensemble of SSIM over several
//! spreads), post-processes them (3D median filter, eroded brain mask,
//! small-component removal), selects a binarization threshold on validation
//! data and reports Dice. A deterministic phantom generator provides
//! volumes with exactly known lesions.

pub mod error;
pub mod imageops;
pub mod metrics;
pub mod mvol;
pub mod phantom;
pub mod pipeline;
pub mod rng;
pub mod scoring;
pub mod volgrid;

pub use error::{Error, MvolError, Result};
pub use metrics::{Case, EvalConfig, EvalReport, MethodEval, Role};
pub use scoring::{AnomalyMap, Method, ScoreConfig, SigmaSet, SsimConstants, WeightMode};
pub use volgrid::{Image2D, Mask3D, Volume3D};
