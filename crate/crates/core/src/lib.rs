//! Training-free dataset distillation by manifold-guided diffusion sampling
//! on low-dimensional latent point clouds.
//!
//! The pipeline: per class, a divisive tree over the latents picks IPC
//! centroids ([`coreset`]); one reverse-diffusion trajectory per centroid is
//! steered toward it by kernel mode guidance whose off-manifold component is
//! removed using a local tangent frame ([`geometry`], [`guidance`],
//! [`sampler`]); the resulting set is scored with [`metrics`].
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coreset;
pub mod data;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod sampler;
pub mod schedule;

pub use error::{Error, Result};
pub use par::Execution;
