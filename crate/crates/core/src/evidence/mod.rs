//! Descriptor statistics and Beta evidence.
//!
//! Each voxel representative gets four normalized statistics (appearance
//! consistency, low geometric contrast, opacity, uniqueness), which are
//! folded into Beta pseudo-counts `(A, B)` by distance-weighted accumulation
//! over the neighborhood. Scores are confidence bounds on the resulting
//! posterior.

mod beta;

pub use beta::{beta_inv_cdf, ln_beta, ln_gamma, reg_inc_beta, BetaError};

use alloc::vec::Vec;

use crate::hsfh::{Camera, HsfhDescriptor};
use crate::math;
use crate::parallel;
use crate::spatial::Neighbor;

/// Pruning-evidence weight of appearance consistency.
pub const W_APPEARANCE_CONSISTENCY: f64 = 0.50;
/// Pruning-evidence weight of low geometric contrast.
pub const W_LOW_CONTRAST: f64 = 0.35;
/// Pruning-evidence weight of transparency (one minus opacity).
pub const W_TRANSPARENCY: f64 = 0.20;
/// Retention-evidence weight of opacity.
pub const W_OPACITY: f64 = 0.55;
/// Pruning-evidence weight of the self non-uniqueness term.
pub const W_COMMONNESS: f64 = 0.20;
/// Retention-evidence weight of the self uniqueness term.
pub const W_UNIQUENESS: f64 = 0.50;
/// Retention bonus weight for the camera grazing proxy, when cameras exist.
pub const W_GRAZING_BONUS: f64 = 0.25;

/// Normalized per-voxel statistics, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalStats {
    /// Low-frequency appearance consistency.
    pub s: f64,
    /// Low geometric contrast.
    pub l: f64,
    /// Mean activated opacity.
    pub o: f64,
    /// Geometry uniqueness.
    pub u: f64,
}

impl LocalStats {
    /// Neutral statistics used by descriptor-free ablations.
    pub const NEUTRAL: LocalStats = LocalStats {
        s: 0.5,
        l: 0.5,
        o: 0.5,
        u: 0.5,
    };
}

/// Beta pseudo-counts per unit: `a` favors retention, `b` favors pruning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceState {
    pub a: f64,
    pub b: f64,
}

/// Starting pseudo-counts; `(1, 1)` is the uniform prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

impl Default for BetaPrior {
    fn default() -> Self {
        BetaPrior { a: 1.0, b: 1.0 }
    }
}

/// Expected pruning probability `b / (a + b)`.
pub fn beta_mean(e: &EvidenceState) -> f64 {
    e.b / (e.a + e.b)
}

/// Posterior variance `a b / ((a + b)^2 (a + b + 1))`.
pub fn beta_variance(e: &EvidenceState) -> f64 {
    let t = e.a + e.b;
    e.a * e.b / (t * t * (t + 1.0))
}

// ---------------------------------------------------------------------------
// statistics

/// Min-max normalization against scene-wide extrema. A constant field maps
/// to 0.5 everywhere.
fn minmax_normalize(raw: &[f64]) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in raw {
        lo = math::fmin(lo, x);
        hi = math::fmax(hi, x);
    }
    if raw.is_empty() || hi == lo {
        return alloc::vec![0.5; raw.len()];
    }
    let denom = hi - lo + 1e-12;
    raw.iter().map(|&x| (x - lo) / denom).collect()
}

fn stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let inv = 1.0 / values.len() as f64;
    let mean: f64 = values.iter().sum::<f64>() * inv;
    let var: f64 = values.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() * inv;
    math::sqrt(var)
}

fn variance(values: &[f64]) -> f64 {
    let sd = stddev(values);
    sd * sd
}

/// Per-voxel statistics from descriptors and neighborhoods:
/// - `l`: inverse min-max of the stddev across the 33 geometric bins;
/// - `s`: inverse min-max of the variance across power-spectrum plus
///   appearance-histogram entries;
/// - `o`: the voxel mean opacity, already in `[0, 1]`;
/// - `u`: min-max of the distance between the voxel's full descriptor and
///   the mean descriptor of its neighbors.
pub fn local_statistics(
    descriptors: &[HsfhDescriptor],
    neighbor_sets: &[Vec<Neighbor>],
    mean_opacity: &[f64],
) -> Vec<LocalStats> {
    let n = descriptors.len();
    let raw_l: Vec<f64> =
        parallel::map_indexed(n, |i| stddev(&descriptors[i].geometric));
    let raw_s: Vec<f64> = parallel::map_indexed(n, |i| {
        let d = &descriptors[i];
        let mut comps = Vec::with_capacity(d.power_spectrum.len() + d.appearance_hist.len());
        comps.extend_from_slice(&d.power_spectrum);
        comps.extend_from_slice(&d.appearance_hist);
        variance(&comps)
    });
    let flats: Vec<Vec<f64>> = parallel::map_indexed(n, |i| descriptors[i].flat());
    let raw_u: Vec<f64> = parallel::map_indexed(n, |i| {
        let set = &neighbor_sets[i];
        if set.is_empty() {
            return 0.0;
        }
        let dim = flats[i].len();
        let mut mean = alloc::vec![0.0f64; dim];
        for &(j, _) in set {
            for (m, x) in mean.iter_mut().zip(&flats[j as usize]) {
                *m += x;
            }
        }
        let inv = 1.0 / set.len() as f64;
        let mut d2 = 0.0;
        for (m, x) in mean.iter().zip(&flats[i]) {
            let d = x - m * inv;
            d2 += d * d;
        }
        math::sqrt(d2)
    });

    let l = minmax_normalize(&raw_l);
    let s = minmax_normalize(&raw_s);
    let u = minmax_normalize(&raw_u);
    (0..n)
        .map(|i| LocalStats {
            s: 1.0 - s[i],
            l: 1.0 - l[i],
            o: mean_opacity[i].clamp(0.0, 1.0),
            u: u[i],
        })
        .collect()
}

// ---------------------------------------------------------------------------
// evidence accumulation

/// Evidence for one unit: Gaussian-weighted neighbor terms followed by the
/// unweighted self terms, starting from the prior.
///
/// Per neighbor `j` at distance `d` with `w = exp(-d^2 / (2 h^2))`:
/// `b += w (0.50 s_j + 0.35 l_j + 0.20 (1 - o_j))`, `a += w (0.55 o_j)`.
/// Once after the loop: `b += 0.20 (1 - u)`, `a += 0.50 u`.
pub fn accumulate_one(
    self_u: f64,
    neighbors: &[Neighbor],
    stats: &[LocalStats],
    h: f64,
    prior: BetaPrior,
) -> EvidenceState {
    let inv_2h2 = 1.0 / (2.0 * h * h);
    let mut a = prior.a;
    let mut b = prior.b;
    for &(j, d) in neighbors {
        let st = &stats[j as usize];
        let w = math::exp(-d * d * inv_2h2);
        b += w * (W_APPEARANCE_CONSISTENCY * st.s
            + W_LOW_CONTRAST * st.l
            + W_TRANSPARENCY * (1.0 - st.o));
        a += w * (W_OPACITY * st.o);
    }
    b += W_COMMONNESS * (1.0 - self_u);
    a += W_UNIQUENESS * self_u;
    EvidenceState { a, b }
}

/// [`accumulate_one`] for every voxel, with the kernel width set to the
/// voxel size.
pub fn accumulate_evidence(
    stats: &[LocalStats],
    neighbor_sets: &[Vec<Neighbor>],
    voxel_size: f64,
    prior: BetaPrior,
) -> Vec<EvidenceState> {
    parallel::map_indexed(stats.len(), |i| {
        accumulate_one(stats[i].u, &neighbor_sets[i], stats, voxel_size, prior)
    })
}

/// Camera grazing/edge proxy feeding extra retention evidence. Always 0:
/// camera-aware estimation is not implemented, only the interface is.
pub fn grazing_proxy(_position: &[f64; 3], _normal: &[f64; 3], _cameras: &[Camera]) -> f64 {
    0.0
}

// ---------------------------------------------------------------------------
// scoring

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    /// Basis mean plus `gamma` standard deviations; rewards uncertainty.
    Optimistic,
    /// Basis mean minus `z` standard deviations.
    LcbGaussian,
    /// Exact Beta quantile at `q` of the basis distribution.
    LcbExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreBasis {
    /// Score retention confidence `a / (a + b)`; prune when the score is low.
    Retention,
    /// Score expected pruning probability `b / (a + b)`; prune when high.
    Pruning,
}

/// Scoring knobs with the shipped defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreParams {
    pub mode: ScoreMode,
    pub basis: ScoreBasis,
    pub gamma: f64,
    pub z: f64,
    pub q: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            mode: ScoreMode::Optimistic,
            basis: ScoreBasis::Retention,
            gamma: 0.25,
            z: 1.0,
            q: 0.05,
        }
    }
}

/// Basis mean, posterior variance, and the combined score of one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    /// Mean of the chosen basis.
    pub mean: f64,
    pub variance: f64,
    pub score: f64,
}

/// Score one evidence state.
///
/// In standard Beta parameterization the retention probability is
/// `Beta(a, b)` and the pruning probability `Beta(b, a)`; the exact
/// quantile mode picks parameters accordingly.
pub fn score_one(e: &EvidenceState, params: &ScoreParams) -> Result<ScoreRecord, BetaError> {
    let prune_mean = beta_mean(e);
    let variance = beta_variance(e);
    let mean = match params.basis {
        ScoreBasis::Retention => 1.0 - prune_mean,
        ScoreBasis::Pruning => prune_mean,
    };
    let sd = math::sqrt(variance);
    let score = match params.mode {
        ScoreMode::Optimistic => mean + params.gamma * sd,
        ScoreMode::LcbGaussian => mean - params.z * sd,
        ScoreMode::LcbExact => match params.basis {
            ScoreBasis::Retention => beta_inv_cdf(params.q, e.a, e.b)?,
            ScoreBasis::Pruning => beta_inv_cdf(params.q, e.b, e.a)?,
        },
    };
    Ok(ScoreRecord {
        mean,
        variance,
        score,
    })
}

/// Score every splat; fails on the first invalid evidence state.
pub fn score_splats(
    evidence: &[EvidenceState],
    params: &ScoreParams,
) -> Result<Vec<ScoreRecord>, BetaError> {
    let records = parallel::map_indexed(evidence.len(), |i| score_one(&evidence[i], params));
    records.into_iter().collect()
}
