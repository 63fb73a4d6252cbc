//! Weight-space editing and merging of neural-network checkpoints.
//!
//! The centerpiece is a single-checkpoint spectral edit: each layer's
//! fine-tuning update is split by SVD into its leading (high-energy)
//! directions and the remaining tail, and the two parts are re-weighted with
//! per-layer coefficients computed from the spectrum itself. Alongside it the
//! crate provides the usual multi-checkpoint baselines (uniform and greedy
//! soups, similarity-filtered soups, Model Stock, Wise-FT, LiNeS) and the
//! diagnostics used to study them.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example <name>`.

pub mod checkpoint;
pub mod cli;
pub mod diagnostics;
pub mod edit;
pub mod error;
pub mod merge;
pub mod spectral;

pub use checkpoint::{read_archive, write_archive, Checkpoint, DType, Tensor};
pub use error::{Error, Result};
