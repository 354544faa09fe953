//! File formats, pipeline orchestration, reporting, and the CLI for
//! camera-agnostic one-shot Gaussian splat pruning. The algorithmic core
//! lives in `splatprune-core`.

pub mod cli;
pub mod config;
pub mod pipeline;
pub mod ply;
pub mod report;
pub mod synth;
pub mod testkit;

pub use config::{Ablation, PipelineConfig};
pub use pipeline::{compute_scores, run_pipeline, PipelineError, ScoredScene};
pub use ply::{load_ply, save_ply, PlyError};
pub use report::{build_report, chamfer, render_report, PruneReport};
pub use synth::{synth_scene, SplatLabel, SynthSpec};
