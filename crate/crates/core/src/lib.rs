//! Camera-agnostic, one-shot pruning of 3D Gaussian splat scenes.
//!
//! This crate holds the algorithmic core: splat parameter activations,
//! voxelized scene downsampling with exact kNN, hybrid geometric/appearance
//! neighborhood descriptors, Beta evidence accumulation, and confidence-based
//! threshold pruning. It is `no_std`-compatible (requires `alloc`); file
//! formats, the CLI, and reporting live in the companion `splatprune` crate.
//!
//! With the `rayon` feature the heavy per-voxel and per-splat loops run in
//! parallel. Every parallel loop fills independent output slots, so results
//! are bit-identical across thread counts.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod math;
mod parallel;

pub mod evidence;
pub mod hsfh;
pub mod pruning;
pub mod spatial;
pub mod splat;

pub use evidence::{
    accumulate_evidence, beta_inv_cdf, beta_mean, beta_variance, local_statistics, reg_inc_beta,
    score_splats, BetaPrior, EvidenceState, LocalStats, ScoreBasis, ScoreMode, ScoreParams,
    ScoreRecord,
};
pub use hsfh::{Camera, DescriptorConfig, HsfhDescriptor};
pub use pruning::{prune, prune_by_ratio, select_threshold, PruneError, PruneResult};
pub use spatial::{
    bbox, interpolate_to_splats, voxel_downsample, voxel_knn_sets, BoundingBox, KdTree,
    SpatialError, VoxelMapping, VoxelRecord,
};
pub use splat::{GaussianSplat, SplatScene};
