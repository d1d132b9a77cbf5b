//! Method-of-moments learning for smoothed mixtures of Gaussians.
//!
//! The crate is organised along the stages of the learner:
//!
//! * [`gmm`] holds mixture parameters, the smoothing perturbation and the sampler.
//! * [`moments`] computes exact (Isserlis) and empirical moments plus the folded views.
//! * [`span`] recovers the covariance spans from slices of the fourth moment.
//! * [`unfold`] solves the two structured least-squares systems for `Y4` and `Y6`.
//! * [`tensor`] whitens and decomposes the cubic tensor with the power method.
//! * [`pipeline`] wires the stages into the zero-mean and general learners.
//!
//! Algorithm variants (least-squares solvers, instance presets, moment sources)
//! sit behind traits and are looked up by name through [`registry::Registry`].

pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod gmm;
pub mod index;
pub mod linalg;
pub mod moments;
pub mod pipeline;
pub mod registry;
pub mod rng;
pub mod span;
pub mod tensor;
pub mod unfold;

pub use error::{Error, Result};
pub use gmm::{GmmParams, SampleBatch, SmoothingConfig};
pub use moments::{FoldedMoments, MomentSet, Provenance, SymTensor};
pub use span::Subspace;

