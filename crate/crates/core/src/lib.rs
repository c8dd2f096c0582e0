//! Dynamic forensic hardness curriculum for binary forgery detectors.
//!
//! The crate is organised bottom-up:
//!
//! - [`hardness`]: instantaneous hardness, the moving-average dynamic hardness
//!   and the combined score with a static quality prior.
//! - [`pacing`]: the epoch-indexed pacing function selecting hard and easy
//!   pools, plus the static BabyStep baseline.
//! - [`forgeries`]: a procedural real/fake image benchmark together with the
//!   quality prior, tampering ratio and SSIM.
//! - [`augment`]: seeded lightweight augmentations for the easy pool.
//! - [`model`]: a one-hidden-layer classifier, BCE loss, SGD and the cosine
//!   learning-rate schedule.
//! - [`runner`]: full training runs in the four modes and their artifacts.
//! - [`cli`]: the `dffc` command-line front end and the config file contract.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod cli;
pub mod error;
pub mod forgeries;
pub mod hardness;
pub mod model;
pub mod pacing;
pub mod runner;
pub mod seed;

pub use error::{Error, Result};
