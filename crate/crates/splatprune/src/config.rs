//! Pipeline configuration: shipped defaults, the JSON config file, and
//! CLI-facing enums.

use serde::{Deserialize, Serialize};
use splatprune_core::evidence::{ScoreBasis, ScoreMode, ScoreParams};
use splatprune_core::hsfh::DescriptorConfig;
use splatprune_core::spatial::{DEFAULT_INTERP_M, DEFAULT_K_NEIGHBORS, DEFAULT_VOXEL_FRAC};

/// Which parts of the scoring machinery a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Descriptors and Beta evidence.
    Full,
    /// Descriptor statistics combined linearly, no Beta posterior.
    NoBeta,
    /// Beta evidence from opacity alone, neutral descriptor statistics.
    NoDesc,
    /// Opacity-only ranking.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScoreModeArg {
    Optimistic,
    LcbGaussian,
    LcbExact,
}

/// How splat normals are derived. Only the minimum-scale covariance axis is
/// implemented; the key exists so config files stay forward-compatible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NormalSource {
    MinAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScoreBasisArg {
    Retention,
    Pruning,
}

impl From<ScoreModeArg> for ScoreMode {
    fn from(m: ScoreModeArg) -> ScoreMode {
        match m {
            ScoreModeArg::Optimistic => ScoreMode::Optimistic,
            ScoreModeArg::LcbGaussian => ScoreMode::LcbGaussian,
            ScoreModeArg::LcbExact => ScoreMode::LcbExact,
        }
    }
}

impl From<ScoreBasisArg> for ScoreBasis {
    fn from(b: ScoreBasisArg) -> ScoreBasis {
        match b {
            ScoreBasisArg::Retention => ScoreBasis::Retention,
            ScoreBasisArg::Pruning => ScoreBasis::Pruning,
        }
    }
}

impl Ablation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoBeta => "no_beta",
            Ablation::NoDesc => "no_desc",
            Ablation::None => "none",
        }
    }
}

/// Everything the scoring pipeline needs, with the shipped defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Voxel edge as a fraction of the scene bounding box diagonal.
    pub voxel_frac: f64,
    /// Neighborhood size over voxel representatives.
    pub k_neighbors: usize,
    /// Voxel representatives blended per splat during interpolation.
    pub interp_m: usize,
    /// Bins of the appearance deviation histogram.
    pub appearance_bins: usize,
    /// Normal derivation rule.
    pub normal_source: NormalSource,
    /// Compute the camera alignment descriptor block (needs cameras).
    pub with_view_features: bool,
    /// Uncertainty reward of the optimistic score.
    pub gamma: f64,
    /// Confidence multiplier of the Gaussian lower bound score.
    pub z: f64,
    /// Quantile of the exact lower bound score.
    pub q: f64,
    pub prior_a: f64,
    pub prior_b: f64,
    pub score_mode: ScoreModeArg,
    pub score_basis: ScoreBasisArg,
    pub ablation: Ablation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            voxel_frac: DEFAULT_VOXEL_FRAC,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            interp_m: DEFAULT_INTERP_M,
            appearance_bins: 16,
            normal_source: NormalSource::MinAxis,
            with_view_features: false,
            gamma: 0.25,
            z: 1.0,
            q: 0.05,
            prior_a: 1.0,
            prior_b: 1.0,
            score_mode: ScoreModeArg::Optimistic,
            score_basis: ScoreBasisArg::Retention,
            ablation: Ablation::Full,
        }
    }
}

impl PipelineConfig {
    pub fn descriptor_config(&self) -> DescriptorConfig {
        DescriptorConfig {
            appearance_bins: self.appearance_bins,
            with_view_features: self.with_view_features,
        }
    }

    pub fn score_params(&self) -> ScoreParams {
        ScoreParams {
            mode: self.score_mode.into(),
            basis: self.score_basis.into(),
            gamma: self.gamma,
            z: self.z,
            q: self.q,
        }
    }

    /// Basic sanity bounds, mirroring the module-level preconditions.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.voxel_frac > 0.0 && self.voxel_frac <= 0.1) {
            return Err(format!(
                "voxel_frac {} outside (0, 0.1]",
                self.voxel_frac
            ));
        }
        if self.k_neighbors == 0 {
            return Err("k_neighbors must be at least 1".into());
        }
        if self.interp_m == 0 {
            return Err("interp_m must be at least 1".into());
        }
        if self.appearance_bins == 0 {
            return Err("appearance_bins must be at least 1".into());
        }
        if self.gamma < 0.0 || self.z < 0.0 {
            return Err("gamma and z must be nonnegative".into());
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(format!("q {} outside (0, 1)", self.q));
        }
        if !(self.prior_a > 0.0 && self.prior_b > 0.0) {
            return Err("prior pseudo-counts must be positive".into());
        }
        Ok(())
    }
}
