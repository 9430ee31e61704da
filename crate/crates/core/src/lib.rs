//! Core engine for text- and geometry-conditioned synthesis of two-hand
//! object interaction sequences with denoising diffusion.
//!
//! The crate is organized around the data flow of the synthesis pipeline:
//!
//! - [`geometry`]: triangle-mesh queries (closest point, signed distance),
//!   basis-point-set shape encoding, and the 6D rotation codec.
//! - [`hand`]: a synthetic parametric hand (21 joints, linear pose basis)
//!   with forward kinematics and a capsule-style surface proxy.
//! - [`repr`]: the canonicalized hand-object sequence representation and its
//!   flat feature layout consumed by the diffusion models.
//! - [`schedule`] / [`diffusion`]: cosine noise schedule, forward noising,
//!   posterior means, and reverse sampling steps for both the noise- and
//!   clean-sample parameterizations.
//! - [`denoiser`]: condition embedding, an analytic Gaussian oracle denoiser,
//!   and a small MLP denoiser with hand-rolled backpropagation and an
//!   AdamW-style trainer.
//! - [`guidance`]: classifier guidance, grasp guidance, imputation,
//!   subsequence guidance, and the two-stage sampling orchestration.
//! - [`synth`]: procedural generation of desk-scale training sequences with
//!   paired text labels, stage splitting, and length normalization.
//! - [`metrics`]: physics, diversity, and guidance metrics plus a
//!   nearest-centroid action classifier over handcrafted motion features.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats, and the CLI
//! live in the companion `graspdiff` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod denoiser;
pub mod diffusion;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod hand;
pub mod math;
pub mod metrics;
pub mod repr;
pub mod rng;
pub mod schedule;
pub mod synth;

mod linalg;

pub use error::{Error, Result};
