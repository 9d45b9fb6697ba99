//! onsetlab: staged transfer learning for time-since-onset classification
//! from multi-sequence brain MRI, runnable end to end on a synthetic cohort.
//!
//! The crate covers the full loop: volume I/O, synthetic cohort generation,
//! preprocessing (bias correction, brain extraction, registration, histogram
//! matching), hemisphere datasets with frozen splits, 2D/3D attention
//! classifiers, self-supervised restoration pretraining, the four-phase
//! training schedule with weight freezing and transfer, bounded-adaptive
//! optimization, Grad-CAM saliency, and the evaluation/reader-agreement
//! toolkit. Everything is seeded and deterministic.

pub mod error;
pub mod nifti;
pub mod volume;

pub use error::{Error, Result};
pub mod cli;
