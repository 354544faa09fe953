//! The one-shot scoring and pruning pipeline.
//!
//! Scores are computed once per scene ([`compute_scores`]) and can then be
//! thresholded at any number of ratios without re-scoring, which is what the
//! sweep command relies on. Stages are timed individually; each stage runs
//! exactly once per scoring pass.

use serde::Serialize;
use splatprune_core::evidence::{
    self, accumulate_evidence, local_statistics, score_splats, BetaError, BetaPrior,
    EvidenceState, LocalStats,
};
use splatprune_core::hsfh::{compute_descriptors, Camera, HsfhDescriptor};
use splatprune_core::pruning::{self, PruneError, PruneResult};
use splatprune_core::spatial::{
    bbox, interpolate_to_splats, voxel_downsample_m, voxel_knn_sets, Neighbor, SpatialError,
    VoxelMapping,
};
use splatprune_core::splat::SplatScene;
use thiserror::Error;

use crate::config::{Ablation, PipelineConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("spatial stage failed: {0}")]
    Spatial(#[from] SpatialError),
    #[error("evidence stage failed: {0}")]
    Evidence(#[from] BetaError),
    #[error("pruning stage failed: {0}")]
    Prune(#[from] PruneError),
    #[error("view features requested but no cameras were supplied")]
    MissingCameras,
    #[error("either a ratio or a threshold is required")]
    MissingThreshold,
}

/// Wall-clock duration of one pipeline stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub ms: f64,
}

/// Everything produced by one scoring pass over a scene.
#[derive(Debug)]
pub struct ScoredScene {
    pub scores: Vec<f64>,
    pub mapping: VoxelMapping,
    pub neighbor_sets: Vec<Vec<Neighbor>>,
    pub descriptors: Option<Vec<HsfhDescriptor>>,
    pub voxel_stats: Vec<LocalStats>,
    pub voxel_evidence: Option<Vec<EvidenceState>>,
    /// Per-splat evidence after interpolation (Beta-mode runs only).
    pub splat_evidence: Option<Vec<EvidenceState>>,
    pub timings: Vec<StageTiming>,
    /// True when thresholding should remove high scores instead of low ones
    /// (pruning-probability basis).
    pub prune_high: bool,
}

fn timed<T>(timings: &mut Vec<StageTiming>, stage: &'static str, f: impl FnOnce() -> T) -> T {
    let start = std::time::Instant::now();
    let value = f();
    timings.push(StageTiming {
        stage,
        ms: start.elapsed().as_secs_f64() * 1e3,
    });
    value
}

/// Run every scoring stage once. Cameras are optional; they feed the view
/// descriptor block and the reserved grazing retention bonus.
pub fn compute_scores(
    scene: &SplatScene,
    config: &PipelineConfig,
    cameras: Option<&[Camera]>,
) -> Result<ScoredScene, PipelineError> {
    if config.with_view_features && cameras.is_none() {
        return Err(PipelineError::MissingCameras);
    }
    let mut timings = Vec::new();

    let bb = timed(&mut timings, "bbox", || bbox(scene))?;
    let mapping = timed(&mut timings, "voxelize", || {
        voxel_downsample_m(scene, config.voxel_frac, config.interp_m)
    })?;
    let neighbor_sets = timed(&mut timings, "neighbors", || {
        voxel_knn_sets(&mapping, config.k_neighbors)
    });

    let use_descriptors = matches!(config.ablation, Ablation::Full | Ablation::NoBeta);
    let descriptors = if use_descriptors {
        Some(timed(&mut timings, "descriptors", || {
            compute_descriptors(
                scene,
                &mapping,
                &neighbor_sets,
                &config.descriptor_config(),
                cameras,
                bb.diagonal(),
            )
        }))
    } else {
        None
    };

    let voxel_stats = timed(&mut timings, "statistics", || match &descriptors {
        Some(d) => {
            let opacity: Vec<f64> = mapping
                .representatives
                .iter()
                .map(|r| r.mean_opacity)
                .collect();
            local_statistics(d, &neighbor_sets, &opacity)
        }
        // Descriptor-free ablations: neutral statistics, real opacity.
        None => mapping
            .representatives
            .iter()
            .map(|r| LocalStats {
                o: r.mean_opacity.clamp(0.0, 1.0),
                ..LocalStats::NEUTRAL
            })
            .collect(),
    });

    let use_beta = matches!(config.ablation, Ablation::Full | Ablation::NoDesc);
    let mut voxel_evidence = None;
    let mut splat_evidence = None;
    let scores;
    let prune_high;

    if use_beta {
        let prior = BetaPrior {
            a: config.prior_a,
            b: config.prior_b,
        };
        let ev = timed(&mut timings, "evidence", || {
            accumulate_evidence(&voxel_stats, &neighbor_sets, mapping.voxel_size, prior)
        });
        let per_splat = timed(&mut timings, "interpolate", || -> Result<_, SpatialError> {
            let a: Vec<f64> = ev.iter().map(|e| e.a).collect();
            let b: Vec<f64> = ev.iter().map(|e| e.b).collect();
            let a = interpolate_to_splats(&a, &mapping)?;
            let b = interpolate_to_splats(&b, &mapping)?;
            Ok(apply_camera_bonus(scene, &mapping, a, b, cameras))
        })?;
        let records = timed(&mut timings, "score", || {
            score_splats(&per_splat, &config.score_params())
        })?;
        scores = records.into_iter().map(|r| r.score).collect();
        prune_high = config.score_basis == crate::config::ScoreBasisArg::Pruning;
        voxel_evidence = Some(ev);
        splat_evidence = Some(per_splat);
    } else {
        // Linear combination of the pruning statistics, no posterior. The
        // opacity term uses each splat's own activated opacity; s, l, u are
        // carried down from the voxel level.
        let combined = timed(&mut timings, "interpolate", || -> Result<_, SpatialError> {
            let s: Vec<f64> = voxel_stats.iter().map(|st| st.s).collect();
            let l: Vec<f64> = voxel_stats.iter().map(|st| st.l).collect();
            let u: Vec<f64> = voxel_stats.iter().map(|st| st.u).collect();
            let s = interpolate_to_splats(&s, &mapping)?;
            let l = interpolate_to_splats(&l, &mapping)?;
            let u = interpolate_to_splats(&u, &mapping)?;
            Ok((s, l, u))
        })?;
        scores = timed(&mut timings, "score", || {
            let (s, l, u) = &combined;
            let c: Vec<f64> = scene
                .splats
                .iter()
                .enumerate()
                .map(|(i, splat)| {
                    evidence::W_APPEARANCE_CONSISTENCY * s[i]
                        + evidence::W_LOW_CONTRAST * l[i]
                        + evidence::W_TRANSPARENCY * (1.0 - splat.opacity_linear())
                        + evidence::W_COMMONNESS * (1.0 - u[i])
                })
                .collect();
            inverted_minmax(&c)
        });
        prune_high = false;
    }

    Ok(ScoredScene {
        scores,
        mapping,
        neighbor_sets,
        descriptors,
        voxel_stats,
        voxel_evidence,
        splat_evidence,
        timings,
        prune_high,
    })
}

/// Reserved camera-aware retention bonus; a no-op until the grazing proxy
/// produces nonzero values.
fn apply_camera_bonus(
    scene: &SplatScene,
    mapping: &VoxelMapping,
    a: Vec<f64>,
    b: Vec<f64>,
    cameras: Option<&[Camera]>,
) -> Vec<EvidenceState> {
    match cameras {
        Some(cams) if !cams.is_empty() => a
            .into_iter()
            .zip(b)
            .enumerate()
            .map(|(i, (a, b))| {
                let splat = &scene.splats[i];
                let voxel = mapping.splat_to_voxel[i] as usize;
                let normal = splatprune_core::hsfh::splat_normal(
                    splat,
                    &mapping.representatives[voxel].centroid,
                );
                let e = evidence::grazing_proxy(&splat.position_f64(), &normal, cams);
                EvidenceState {
                    a: a + evidence::W_GRAZING_BONUS * e,
                    b,
                }
            })
            .collect(),
        _ => a
            .into_iter()
            .zip(b)
            .map(|(a, b)| EvidenceState { a, b })
            .collect(),
    }
}

/// `1 - minmax`, with a constant field mapping to 0.5 everywhere.
fn inverted_minmax(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || hi == lo {
        return vec![0.5; values.len()];
    }
    let denom = hi - lo + 1e-12;
    values.iter().map(|&x| 1.0 - (x - lo) / denom).collect()
}

impl ScoredScene {
    /// Threshold at a target removal ratio. For the pruning-probability
    /// basis the score order flips so the requested ratio stays honored.
    pub fn prune_by_ratio(
        &self,
        scene: &SplatScene,
        ratio: f64,
    ) -> Result<PruneResult, PipelineError> {
        if self.prune_high {
            let negated: Vec<f64> = self.scores.iter().map(|s| -s).collect();
            let mut result = pruning::prune_by_ratio(scene, &negated, ratio)?;
            result.tau_effective = -result.tau_effective;
            result.scores = self.scores.clone();
            Ok(result)
        } else {
            Ok(pruning::prune_by_ratio(scene, &self.scores, ratio)?)
        }
    }

    /// Threshold at an explicit tau: strictly below on the retention basis,
    /// strictly above on the pruning basis.
    pub fn prune_with_tau(
        &self,
        scene: &SplatScene,
        tau: f64,
    ) -> Result<PruneResult, PipelineError> {
        if self.prune_high {
            let negated: Vec<f64> = self.scores.iter().map(|s| -s).collect();
            let mut result = pruning::prune(scene, &negated, -tau)?;
            result.tau_effective = tau;
            result.scores = self.scores.clone();
            Ok(result)
        } else {
            Ok(pruning::prune(scene, &self.scores, tau)?)
        }
    }
}

/// Score a scene and prune it at one ratio or threshold.
pub fn run_pipeline(
    scene: &SplatScene,
    config: &PipelineConfig,
    cameras: Option<&[Camera]>,
    ratio: Option<f64>,
    tau: Option<f64>,
) -> Result<(ScoredScene, PruneResult), PipelineError> {
    let mut scored = compute_scores(scene, config, cameras)?;
    let start = std::time::Instant::now();
    let result = match (ratio, tau) {
        (Some(r), _) => scored.prune_by_ratio(scene, r),
        (None, Some(t)) => scored.prune_with_tau(scene, t),
        (None, None) => Err(PipelineError::MissingThreshold),
    }?;
    scored.timings.push(StageTiming {
        stage: "threshold",
        ms: start.elapsed().as_secs_f64() * 1e3,
    });
    Ok((scored, result))
}
