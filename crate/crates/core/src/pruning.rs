//! Threshold selection and the one-shot prune.

use alloc::vec::Vec;

use crate::math;
use crate::splat::SplatScene;

#[derive(Debug, Clone, PartialEq)]
pub enum PruneError {
    RatioOutOfRange(f64),
    WouldRemoveAll,
    ScoreLengthMismatch { expected: usize, got: usize },
    TooFewSplats,
}

impl core::fmt::Display for PruneError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PruneError::RatioOutOfRange(r) => {
                write!(f, "pruning ratio {r} outside the open interval (0, 1)")
            }
            PruneError::WouldRemoveAll => write!(f, "threshold would remove every splat"),
            PruneError::ScoreLengthMismatch { expected, got } => {
                write!(f, "expected {expected} scores, got {got}")
            }
            PruneError::TooFewSplats => write!(f, "threshold selection needs at least 2 splats"),
        }
    }
}

impl core::error::Error for PruneError {}

/// Outcome of a prune: disjoint kept/removed index sets covering the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    /// Surviving splat indices, ascending.
    pub kept_ids: Vec<u32>,
    /// Removed splat indices, ascending.
    pub removed_ids: Vec<u32>,
    /// The operative threshold; `f64::INFINITY` marks the degenerate
    /// remove-everything request that [`prune_by_ratio`] rejects.
    pub tau_effective: f64,
    /// The per-splat scores the decision was made on.
    pub scores: Vec<f64>,
}

impl PruneResult {
    pub fn removed_ratio(&self) -> f64 {
        self.removed_ids.len() as f64 / self.scores.len() as f64
    }
}

/// Percentile threshold for a target removal ratio.
///
/// Entries are ranked by `(score, index)`; the lowest `round(ratio * n)` are
/// removal candidates and `tau` is the first survivor's score (infinity when
/// everything would go). Returns `(tau, removal candidates ascending)`.
pub fn select_threshold(scores: &[f64], ratio: f64) -> Result<(f64, Vec<u32>), PruneError> {
    if scores.len() < 2 {
        return Err(PruneError::TooFewSplats);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PruneError::RatioOutOfRange(ratio));
    }
    let n = scores.len();
    let k = math::round(ratio * n as f64) as usize;

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        scores[a as usize]
            .total_cmp(&scores[b as usize])
            .then(a.cmp(&b))
    });

    let tau = if k < n {
        scores[order[k] as usize]
    } else {
        f64::INFINITY
    };
    let mut removed: Vec<u32> = order[..k].to_vec();
    removed.sort_unstable();
    Ok((tau, removed))
}

/// Remove every splat with `score < tau` (strict). Errors if nothing would
/// survive.
pub fn prune(scene: &SplatScene, scores: &[f64], tau: f64) -> Result<PruneResult, PruneError> {
    if scores.len() != scene.len() {
        return Err(PruneError::ScoreLengthMismatch {
            expected: scene.len(),
            got: scores.len(),
        });
    }
    if !scores.iter().any(|&s| s >= tau) {
        return Err(PruneError::WouldRemoveAll);
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (i, &s) in scores.iter().enumerate() {
        if s < tau {
            removed.push(i as u32);
        } else {
            kept.push(i as u32);
        }
    }
    Ok(PruneResult {
        kept_ids: kept,
        removed_ids: removed,
        tau_effective: tau,
        scores: scores.to_vec(),
    })
}

/// Remove exactly `round(ratio * n)` splats, lowest scores first, ties by
/// lower index. The tie-consistent removal set comes from
/// [`select_threshold`] rather than from re-applying the inequality.
pub fn prune_by_ratio(
    scene: &SplatScene,
    scores: &[f64],
    ratio: f64,
) -> Result<PruneResult, PruneError> {
    if scores.len() != scene.len() {
        return Err(PruneError::ScoreLengthMismatch {
            expected: scene.len(),
            got: scores.len(),
        });
    }
    let (tau, removed) = select_threshold(scores, ratio)?;
    if removed.len() == scores.len() {
        return Err(PruneError::WouldRemoveAll);
    }
    let removed_set: alloc::collections::BTreeSet<u32> = removed.iter().copied().collect();
    let kept: Vec<u32> = (0..scores.len() as u32)
        .filter(|i| !removed_set.contains(i))
        .collect();
    Ok(PruneResult {
        kept_ids: kept,
        removed_ids: removed,
        tau_effective: tau,
        scores: scores.to_vec(),
    })
}
