//! Machine-readable run reports.
//!
//! The report is emitted with a fixed key order and floats printed at 9
//! significant digits so that identical runs produce identical bytes and
//! golden files stay stable. Parsing back through any JSON parser recovers
//! every value at that precision.

use rayon::prelude::*;
use splatprune_core::evidence::LocalStats;
use splatprune_core::pruning::PruneResult;
use splatprune_core::spatial::KdTree;
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::pipeline::StageTiming;

/// Bins of the score histogram.
pub const SCORE_HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("chamfer distance needs two non-empty point sets")]
    EmptyInput,
}

/// Symmetric chamfer distance: the two directed mean nearest-neighbor
/// distances, halved.
pub fn chamfer(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64, ReportError> {
    if a.is_empty() || b.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    Ok(0.5 * (directed_mean_nn(a, b) + directed_mean_nn(b, a)))
}

fn directed_mean_nn(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    let tree = KdTree::new(to);
    // Independent per-point distances, then a fixed-order sum.
    let dists: Vec<f64> = from
        .par_iter()
        .map(|p| tree.knn(p, 1)[0].1)
        .collect();
    dists.iter().sum::<f64>() / from.len() as f64
}

/// Everything the report serializes.
#[derive(Debug, Clone)]
pub struct PruneReport {
    pub input_count: usize,
    pub output_count: usize,
    pub ratio_achieved: f64,
    pub tau_effective: f64,
    pub gamma: f64,
    pub ablation: &'static str,
    pub voxel_frac: f64,
    pub k_neighbors: usize,
    pub score_min: f64,
    pub score_max: f64,
    pub score_histogram: Vec<usize>,
    /// `(min, mean, max)` per statistic over voxel representatives.
    pub stats_summary: [(f64, f64, f64); 4],
    pub chamfer_to_original: f64,
    pub timing_ms: Vec<StageTiming>,
}

/// Assemble the report for one prune.
pub fn build_report(
    result: &PruneResult,
    config: &PipelineConfig,
    voxel_stats: &[LocalStats],
    original_positions: &[[f64; 3]],
    timings: Vec<StageTiming>,
) -> Result<PruneReport, ReportError> {
    let input_count = result.scores.len();
    let output_count = result.kept_ids.len();

    let kept_positions: Vec<[f64; 3]> = result
        .kept_ids
        .iter()
        .map(|&i| original_positions[i as usize])
        .collect();
    let chamfer_to_original = chamfer(original_positions, &kept_positions)?;

    let score_min = result.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let score_max = result
        .scores
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut score_histogram = vec![0usize; SCORE_HISTOGRAM_BINS];
    let span = score_max - score_min;
    for &s in &result.scores {
        let bin = if span > 0.0 {
            (((s - score_min) / span * SCORE_HISTOGRAM_BINS as f64) as usize)
                .min(SCORE_HISTOGRAM_BINS - 1)
        } else {
            0
        };
        score_histogram[bin] += 1;
    }

    let summary = |pick: fn(&LocalStats) -> f64| -> (f64, f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for st in voxel_stats {
            let v = pick(st);
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        (lo, sum / voxel_stats.len() as f64, hi)
    };

    Ok(PruneReport {
        input_count,
        output_count,
        ratio_achieved: result.removed_ids.len() as f64 / input_count as f64,
        tau_effective: result.tau_effective,
        gamma: config.gamma,
        ablation: config.ablation.as_str(),
        voxel_frac: config.voxel_frac,
        k_neighbors: config.k_neighbors,
        score_min,
        score_max,
        score_histogram,
        stats_summary: [
            summary(|st| st.s),
            summary(|st| st.l),
            summary(|st| st.o),
            summary(|st| st.u),
        ],
        chamfer_to_original,
        timing_ms: timings,
    })
}

/// Format a float with 9 significant digits; round-trips losslessly at that
/// precision through any JSON parser. Non-finite values clamp to the f64
/// extremes (JSON has no infinities; thresholds that remove everything are
/// rejected upstream).
fn fmt_f64(x: f64) -> String {
    let x = if x.is_finite() {
        x
    } else if x > 0.0 {
        f64::MAX
    } else {
        f64::MIN
    };
    format!("{x:.8e}")
}

/// Serialize with fixed key order.
pub fn render_report(report: &PruneReport) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str("{\n");
    out.push_str(&format!("  \"input_count\": {},\n", report.input_count));
    out.push_str(&format!("  \"output_count\": {},\n", report.output_count));
    out.push_str(&format!(
        "  \"ratio_achieved\": {},\n",
        fmt_f64(report.ratio_achieved)
    ));
    out.push_str(&format!(
        "  \"tau_effective\": {},\n",
        fmt_f64(report.tau_effective)
    ));
    out.push_str(&format!("  \"gamma\": {},\n", fmt_f64(report.gamma)));
    out.push_str(&format!("  \"ablation\": \"{}\",\n", report.ablation));
    out.push_str(&format!(
        "  \"voxel_frac\": {},\n",
        fmt_f64(report.voxel_frac)
    ));
    out.push_str(&format!("  \"k_neighbors\": {},\n", report.k_neighbors));
    out.push_str("  \"score_histogram\": {\n");
    out.push_str(&format!("    \"min\": {},\n", fmt_f64(report.score_min)));
    out.push_str(&format!("    \"max\": {},\n", fmt_f64(report.score_max)));
    let counts: Vec<String> = report
        .score_histogram
        .iter()
        .map(|c| c.to_string())
        .collect();
    out.push_str(&format!("    \"counts\": [{}]\n", counts.join(", ")));
    out.push_str("  },\n");
    out.push_str("  \"stats_summary\": {\n");
    for (i, name) in ["s", "l", "o", "u"].iter().enumerate() {
        let (lo, mean, hi) = report.stats_summary[i];
        out.push_str(&format!(
            "    \"{name}\": {{\"min\": {}, \"mean\": {}, \"max\": {}}}{}\n",
            fmt_f64(lo),
            fmt_f64(mean),
            fmt_f64(hi),
            if i < 3 { "," } else { "" }
        ));
    }
    out.push_str("  },\n");
    out.push_str(&format!(
        "  \"chamfer_to_original\": {},\n",
        fmt_f64(report.chamfer_to_original)
    ));
    out.push_str("  \"timing_ms\": {\n");
    for (i, t) in report.timing_ms.iter().enumerate() {
        out.push_str(&format!(
            "    \"{}\": {}{}\n",
            t.stage,
            fmt_f64(t.ms),
            if i + 1 < report.timing_ms.len() {
                ","
            } else {
                ""
            }
        ));
    }
    out.push_str("  }\n");
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chamfer_identical_sets_zero() {
        let pts = vec![[0.0, 1.0, 2.0], [3.0, -1.0, 0.5], [2.0, 2.0, 2.0]];
        assert_eq!(chamfer(&pts, &pts).unwrap(), 0.0);
    }

    #[test]
    fn chamfer_single_point_shift() {
        let a = vec![[0.0, 0.0, 0.0]];
        let b = vec![[1.0, 0.0, 0.0]];
        assert!((chamfer(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chamfer_is_symmetric_and_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let a: Vec<[f64; 3]> = (0..100)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let b: Vec<[f64; 3]> = a.iter().take(60).copied().collect();

        let brute = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
            from.iter()
                .map(|p| {
                    to.iter()
                        .map(|q| {
                            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .sum::<f64>()
                / from.len() as f64
        };
        let want = 0.5 * (brute(&a, &b) + brute(&b, &a));
        let got = chamfer(&a, &b).unwrap();
        assert!((got - want).abs() < 1e-12);
        let rev = chamfer(&b, &a).unwrap();
        assert!((got - rev).abs() < 1e-15);
    }

    #[test]
    fn chamfer_empty_inputs_error() {
        assert_eq!(chamfer(&[], &[[0.0; 3]]), Err(ReportError::EmptyInput));
        assert_eq!(chamfer(&[[0.0; 3]], &[]), Err(ReportError::EmptyInput));
    }

    #[test]
    fn floats_round_trip_at_nine_digits() {
        for x in [
            0.1,
            1.0 / 3.0,
            123456.789,
            -2.5e-7,
            0.0,
            1.0,
            0.2999999999,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            let rel = if x == 0.0 {
                back.abs()
            } else {
                ((back - x) / x).abs()
            };
            assert!(rel < 1e-8, "{x} -> {s} -> {back}");
        }
    }
}
