//! Frame-weighted motion generation from few demonstrations.
//!
//! A relevance profile `f(d) ∈ [0, 1]` over the trajectory progress index
//! decides how strongly the second task frame drives each part of a
//! reference demonstration. The profile is learned from as few as two
//! demonstrations by reproducing each one from the others, and is then used
//! to generalize to new frame configurations or to synthesize extra training
//! data for a task-parameterized GMM.

pub mod benchmark;
pub mod error;
pub mod geometry;
pub mod optimize;
pub mod relevance;
pub mod tpgmm;
pub mod trajectory;
pub mod transform;

pub use error::{Error, Result};
