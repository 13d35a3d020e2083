//! Self-supervised pose embeddings from video, end to end and CPU-only.
//!
//! The pipeline learns a 512-dim posture representation without labels by
//! predicting (a) whether two person crops are close in time and (b) whether
//! a random crop overlaps the person, then mines repetitions of the learned
//! embedding to bootstrap itself. This crate holds the algorithmic core:
//!
//! - [`data`]: frames, clips, pose annotations, benchmark exemplars
//! - [`synth`]: deterministic articulated stick-figure clip generator
//! - [`sampling`]: temporal tuple and spatial crop samplers
//! - [`flow`]: Horn-Schunck optical flow and the motion-based difficulty score
//! - [`curriculum`]: difficulty-ordered sample blocks released over iterations
//! - [`net`]: the small convolutional embedding network, manual backprop, Adam
//! - [`repetition`]: self-similarity mining of repetitive poses, bootstrapping
//! - [`eval`]: ROC-AUC, retrieval, pose transfer, PCP/PCKh metrics
//!
//! Everything is deterministic given a root seed (see [`seed`]) and runs
//! without `std` (file formats and the CLI live in the `poseforge` crate).

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod curriculum;
pub mod data;
pub mod eval;
pub mod exec;
pub mod flow;
pub mod geom;
pub mod image;
mod math;
pub mod net;
pub mod repetition;
pub mod sampling;
pub mod seed;
pub mod synth;
