//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS line with the measured value next to its bound.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use splatprune::config::{Ablation, PipelineConfig};
use splatprune::pipeline::{compute_scores, run_pipeline};
use splatprune::ply::{load_ply, payload_of, save_ply};
use splatprune::synth::{synth_scene, SplatLabel, SynthSpec};
use splatprune::testkit;
use splatprune_core::evidence::{
    accumulate_one, beta_inv_cdf, beta_mean, beta_variance, reg_inc_beta, BetaPrior,
    EvidenceState, LocalStats,
};
use splatprune_core::hsfh;
use splatprune_core::spatial::KdTree;
use splatprune_core::splat::{GaussianSplat, SplatScene};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_splatprune"))
}

fn default_synth(n_plane: usize, n_rod: usize, seed: u64) -> (SplatScene, Vec<SplatLabel>) {
    synth_scene(&SynthSpec {
        n_plane,
        n_rod,
        noise: 0.002,
        seed,
    })
    .unwrap()
}

/// Criterion 1: requested ratios remove exactly round(ratio * n) splats on a
/// 10k-splat scene, single-threaded, within 10 seconds.
#[test]
fn criterion_1_ratio_fidelity() {
    let (scene, _) = default_synth(9_500, 500, 11);
    let n = scene.len();
    assert_eq!(n, 10_000);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let start = Instant::now();
    pool.install(|| {
        for ratio in [0.10, 0.20, 0.30] {
            let (_, result) =
                run_pipeline(&scene, &PipelineConfig::default(), None, Some(ratio), None).unwrap();
            let want = (ratio * n as f64).round() as usize;
            assert_eq!(result.removed_ids.len(), want, "ratio {ratio}");
        }
    });
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "single-threaded runtime {elapsed:.2}s >= 10s");
    println!("criterion 1 PASS: exact removal at ratios 0.10/0.20/0.30 on 10k splats in {elapsed:.2}s (< 10s, 1 thread)");
}

/// Criterion 2: removal sets nest as the ratio grows, exactly.
#[test]
fn criterion_2_threshold_nesting() {
    let (scene, _) = default_synth(4_000, 250, 3);
    let scored = compute_scores(&scene, &PipelineConfig::default(), None).unwrap();
    let mut prev: BTreeSet<u32> = BTreeSet::new();
    for ratio in [0.1, 0.3, 0.7] {
        let result = scored.prune_by_ratio(&scene, ratio).unwrap();
        let cur: BTreeSet<u32> = result.removed_ids.iter().copied().collect();
        assert!(
            prev.is_subset(&cur),
            "removal set at smaller ratio not contained at {ratio}"
        );
        prev = cur;
    }
    println!("criterion 2 PASS: removed(0.1) subset of removed(0.3) subset of removed(0.7), exact containment");
}

/// Criterion 3: Beta moments match density quadrature to 1e-6; the closed
/// form of I_x(2,2) holds to 1e-10; the inverse CDF round-trips to 1e-8.
#[test]
fn criterion_3_beta_numerics() {
    let grid = [0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0];
    let mut worst_moment = 0.0f64;
    for &a in &grid {
        for &b in &grid {
            let e = EvidenceState { a, b };
            // The pruning probability is Beta(b, a) in standard form;
            // integrate that density directly.
            let (mean_q, var_q) = testkit::beta_moments_quadrature(b, a, 100_000);
            let mean_err = (beta_mean(&e) - mean_q).abs();
            let var_err = (beta_variance(&e) - var_q).abs();
            worst_moment = worst_moment.max(mean_err).max(var_err);
        }
    }
    assert!(worst_moment < 1e-6, "moment error {worst_moment:e}");

    let mut worst_cdf = 0.0f64;
    for i in 1..=1000 {
        let x = i as f64 / 1001.0;
        let want = 3.0 * x * x - 2.0 * x * x * x;
        worst_cdf = worst_cdf.max((reg_inc_beta(x, 2.0, 2.0).unwrap() - want).abs());
    }
    assert!(worst_cdf < 1e-10, "I_x(2,2) error {worst_cdf:e}");

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
    let mut worst_rt = 0.0f64;
    for _ in 0..400 {
        let a = rng.random_range(0.5..50.0);
        let b = rng.random_range(0.5..50.0);
        let q = rng.random_range(0.001..0.999);
        let x = beta_inv_cdf(q, a, b).unwrap();
        worst_rt = worst_rt.max((reg_inc_beta(x, a, b).unwrap() - q).abs());
    }
    assert!(worst_rt <= 1e-8, "inverse round-trip error {worst_rt:e}");
    println!(
        "criterion 3 PASS: moments vs quadrature {worst_moment:.2e} (< 1e-6), I_x(2,2) {worst_cdf:.2e} (< 1e-10), inverse round-trip {worst_rt:.2e} (<= 1e-8)"
    );
}

/// Criterion 4: the hand-evaluated evidence accumulation cases reproduce to
/// 1e-12.
#[test]
fn criterion_4_evidence_hand_cases() {
    let prior = BetaPrior { a: 1.0, b: 1.0 };

    // One neighbor at distance 0 with s=1, l=1, o=0; self u=0.
    let stats = [
        LocalStats {
            s: 0.0,
            l: 0.0,
            o: 0.0,
            u: 0.0,
        },
        LocalStats {
            s: 1.0,
            l: 1.0,
            o: 0.0,
            u: 0.0,
        },
    ];
    let e = accumulate_one(0.0, &[(1, 0.0)], &stats, 1.0, prior);
    assert!((e.b - 2.25).abs() < 1e-12 && (e.a - 1.0).abs() < 1e-12);

    // No neighbors, self u=1.
    let e = accumulate_one(1.0, &[], &stats, 1.0, prior);
    assert!((e.a - 1.5).abs() < 1e-12 && (e.b - 1.0).abs() < 1e-12);

    // All-zero statistics: pruning evidence grows only through the
    // transparency and commonness terms, retention stays at the prior.
    let zeros = [LocalStats {
        s: 0.0,
        l: 0.0,
        o: 0.0,
        u: 0.0,
    }; 3];
    let h = 2.0;
    let e = accumulate_one(0.0, &[(1, 1.0), (2, 3.0)], &zeros, h, prior);
    let w1 = (-1.0f64 / (2.0 * h * h)).exp();
    let w2 = (-9.0f64 / (2.0 * h * h)).exp();
    assert!((e.b - (1.0 + 0.2 * (w1 + w2) + 0.2)).abs() < 1e-12);
    assert!((e.a - 1.0).abs() < 1e-12);
    println!("criterion 4 PASS: three hand-evaluated (A, B) accumulations reproduce within 1e-12");
}

/// Criterion 5: the pipeline FPFH equals an independent quadratic reference
/// on 50 fuzzed small scenes, within 1e-9 per bin, under 30 seconds.
#[test]
fn criterion_5_fpfh_reference() {
    use rand::{Rng, SeedableRng};
    let start = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for scene_idx in 0..50 {
        let n = rng.random_range(20..=200);
        let k = rng.random_range(4..12).min(n - 1);
        let positions: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let normals: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let v = [
                    rng.random_range(-1.0..1.0f64),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-9);
                [v[0] / l, v[1] / l, v[2] / l]
            })
            .collect();

        let eps = 1e-9;
        let tree = KdTree::new(&positions);
        let sets: Vec<Vec<(u32, f64)>> = (0..n)
            .map(|i| tree.knn_excluding(&positions[i], k, i as u32))
            .collect();
        let got = hsfh::fpfh_all(&positions, &normals, &sets, eps);
        let want = testkit::reference_fpfh(&positions, &normals, k, eps);
        for i in 0..n {
            for b in 0..33 {
                let err = (got[i][b] - want[i][b]).abs();
                worst = worst.max(err);
                assert!(
                    err < 1e-9,
                    "scene {scene_idx} point {i} bin {b}: {} vs {}",
                    got[i][b],
                    want[i][b]
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime {elapsed:.1}s >= 30s");
    println!(
        "criterion 5 PASS: 50 fuzzed scenes match the quadratic FPFH reference, worst bin error {worst:.2e} (< 1e-9), {elapsed:.1}s (< 30s)"
    );
}

/// Criterion 6: a random axis-aligned rigid motion (rotation from the
/// octahedral group plus arbitrary translation) leaves the pruned index set
/// identical on degree-0 scenes with distinct scores. Generic rotations
/// change the axis-aligned bounding box, hence the voxel size and kernel
/// width, so invariance is only defined for box-preserving rigid motions.
#[test]
fn criterion_6_rigid_invariance() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
    let rotations = testkit::octahedral_rotations();
    assert_eq!(rotations.len(), 24);

    let scene = testkit::scattered_scene(500, 99);
    let config = PipelineConfig::default();
    let (_, base) = run_pipeline(&scene, &config, None, Some(0.3), None).unwrap();
    let base_set: BTreeSet<u32> = base.removed_ids.iter().copied().collect();

    // Distinct scores: the closest pair must be separated enough that the
    // float noise of a signed-permutation transform cannot reorder the cut.
    let mut sorted = base.scores.clone();
    sorted.sort_by(f64::total_cmp);
    let min_gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    assert!(min_gap > 1e-9, "score gap {min_gap:e} too small for the test");

    for trial in 0..20 {
        let r = rotations[rng.random_range(0..rotations.len())];
        let t = [
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
        ];
        let moved = testkit::rigid_transform_scene(&scene, &r, &t);
        let (_, result) = run_pipeline(&moved, &config, None, Some(0.3), None).unwrap();
        let moved_set: BTreeSet<u32> = result.removed_ids.iter().copied().collect();
        assert_eq!(base_set, moved_set, "trial {trial} changed the pruned set");
    }
    println!("criterion 6 PASS: pruned index set identical under 20 random octahedral rotations + translations (min score gap {min_gap:.2e})");
}

/// Criterion 7: on the planted scene the full pipeline preserves the fine
/// structure better than opacity-only ranking in at least 18 of 20 seeds.
#[test]
fn criterion_7_ablation_direction() {
    let fine_survival = |ablation: Ablation, seed: u64| -> f64 {
        let (scene, labels) = default_synth(8_000, 500, seed);
        let config = PipelineConfig {
            ablation,
            ..Default::default()
        };
        let (_, result) = run_pipeline(&scene, &config, None, Some(0.3), None).unwrap();
        let kept: BTreeSet<u32> = result.kept_ids.iter().copied().collect();
        let total = labels.iter().filter(|&&l| l == SplatLabel::Fine).count();
        let alive = labels
            .iter()
            .enumerate()
            .filter(|(i, &l)| l == SplatLabel::Fine && kept.contains(&(*i as u32)))
            .count();
        alive as f64 / total as f64
    };
    let mut wins = 0;
    let mut full_sum = 0.0;
    let mut none_sum = 0.0;
    for seed in 0..20 {
        let full = fine_survival(Ablation::Full, seed);
        let none = fine_survival(Ablation::None, seed);
        full_sum += full;
        none_sum += none;
        wins += (full > none) as u32;
    }
    assert!(wins >= 18, "fine survival won only {wins}/20 seeds");
    println!(
        "criterion 7 PASS: fine-structure survival {wins}/20 seeds (>= 18), mean {:.3} (full) vs {:.3} (opacity-only)",
        full_sum / 20.0,
        none_sum / 20.0
    );
}

/// Criterion 8: identical CLI invocations give byte-identical outputs, and
/// 100 fuzzed files round-trip their vertex payloads bit-exactly.
#[test]
fn criterion_8_determinism_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scene.ply");
    let status = bin()
        .args([
            "synth",
            "--output",
            input.to_str().unwrap(),
            "--n-plane",
            "3000",
            "--n-rod",
            "200",
            "--seed",
            "5",
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("pruned_{run}.ply"));
        let report = dir.path().join(format!("report_{run}.json"));
        let status = bin()
            .args([
                "prune",
                "--input",
                input.to_str().unwrap(),
                "--output",
                out.to_str().unwrap(),
                "--report",
                report.to_str().unwrap(),
                "--ratio",
                "0.3",
                "--zero-timings",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((std::fs::read(&out).unwrap(), std::fs::read(&report).unwrap()));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "pruned PLY bytes differ");
    assert_eq!(outputs[0].1, outputs[1].1, "report bytes differ");

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let scene = testkit::fuzzed_scene(&mut rng);
        let bytes = save_ply(&scene).unwrap();
        let loaded = load_ply(&bytes).unwrap();
        let again = save_ply(&loaded).unwrap();
        assert_eq!(
            payload_of(&bytes),
            payload_of(&again),
            "case {case}: payload bytes changed"
        );
        assert_eq!(bytes, again, "case {case}: full bytes changed");
    }
    println!("criterion 8 PASS: byte-identical CLI reruns; 100 fuzzed files round-trip bit-exactly");
}

/// Criterion 9: a million-splat scene prunes at ratio 0.3 within the time
/// and memory budget.
#[test]
fn criterion_9_scale() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("big.ply");
    let output = dir.path().join("big_pruned.ply");
    let status = bin()
        .args([
            "synth",
            "--output",
            input.to_str().unwrap(),
            "--n-plane",
            "999500",
            "--n-rod",
            "500",
            "--seed",
            "7",
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let start = Instant::now();
    let status = bin()
        .args([
            "prune",
            "--input",
            input.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
            "--ratio",
            "0.3",
        ])
        .status()
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(status.success());
    assert!(elapsed < 120.0, "prune took {elapsed:.1}s >= 120s");

    // Peak RSS across exited children covers both the synth and the prune.
    let peak_gb = unsafe {
        let mut usage: libc::rusage = std::mem::zeroed();
        libc::getrusage(libc::RUSAGE_CHILDREN, &mut usage);
        usage.ru_maxrss as f64 / (1024.0 * 1024.0)
    };
    assert!(peak_gb < 4.0, "child peak memory {peak_gb:.2} GiB >= 4 GiB");

    let pruned = load_ply(&std::fs::read(&output).unwrap()).unwrap();
    assert_eq!(pruned.len(), 700_000);
    println!(
        "criterion 9 PASS: 1M-splat prune in {elapsed:.1}s (< 120s), child peak RSS {peak_gb:.2} GiB (< 4 GiB)"
    );
}

/// Criterion 10: shipped defaults match the documented operating point.
#[test]
fn criterion_10_defaults_conformance() {
    let config = PipelineConfig::default();
    assert_eq!(config.gamma, 0.25);
    assert!(
        config.voxel_frac >= 0.01 && config.voxel_frac <= 0.02,
        "voxel_frac {}",
        config.voxel_frac
    );

    let out = bin().args(["prune", "--help"]).output().unwrap();
    let help = String::from_utf8_lossy(&out.stdout);
    for needle in ["0.25", "0.015", "[default: 16]", "[default: 4]"] {
        assert!(help.contains(needle), "prune --help misses `{needle}`");
    }
    println!(
        "criterion 10 PASS: defaults gamma = {} and voxel_frac = {} (within [0.01, 0.02]), listed in --help",
        config.gamma, config.voxel_frac
    );
}

/// The planted-scene direction also holds for the redundant class: the full
/// pipeline removes a larger share of planted-redundant splats than the
/// opacity-only baseline.
#[test]
fn full_mode_targets_redundant_splats() {
    let removed_redundant_share = |ablation: Ablation| -> f64 {
        let (scene, labels) = default_synth(8_000, 500, 42);
        let config = PipelineConfig {
            ablation,
            ..Default::default()
        };
        let (_, result) = run_pipeline(&scene, &config, None, Some(0.3), None).unwrap();
        let redundant_removed = result
            .removed_ids
            .iter()
            .filter(|&&i| labels[i as usize] == SplatLabel::Redundant)
            .count();
        redundant_removed as f64 / result.removed_ids.len() as f64
    };
    let full = removed_redundant_share(Ablation::Full);
    let none = removed_redundant_share(Ablation::None);
    assert!(
        full > none,
        "redundant share of removals: full {full:.3} vs opacity-only {none:.3}"
    );
}

/// Helper exercised by criterion 6; kept here so a failure names the moved
/// geometry rather than the whole criterion.
#[test]
fn octahedral_rotations_are_proper() {
    for r in testkit::octahedral_rotations() {
        // Column orthonormality and determinant +1.
        for c in 0..3 {
            let n: f64 = (0..3).map(|i| r[i][c] * r[i][c]).sum();
            assert_eq!(n, 1.0);
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        assert_eq!(det, 1.0);
    }
}

/// Guard used by several criteria: synthetic scenes must produce finite,
/// NaN-free scores.
#[test]
fn scores_are_finite() {
    let (scene, _) = default_synth(2_000, 100, 8);
    for ablation in [
        Ablation::Full,
        Ablation::NoBeta,
        Ablation::NoDesc,
        Ablation::None,
    ] {
        let config = PipelineConfig {
            ablation,
            ..Default::default()
        };
        let scored = compute_scores(&scene, &config, None).unwrap();
        assert!(scored.scores.iter().all(|s| s.is_finite()));
    }
}

/// A single splat comes back out even though its bounding box is a point.
#[test]
fn degenerate_single_splat_scene_processes() {
    let scene = SplatScene {
        splats: vec![GaussianSplat {
            position: [1.0, 2.0, 3.0],
            scale_log: [-2.0; 3],
            rotation: [1.0, 0.0, 0.0, 0.0],
            opacity_logit: 1.0,
            sh_dc: [0.1, 0.2, 0.3],
            sh_rest: vec![],
            extra: vec![],
        }],
        sh_degree: 0,
        property_order: splatprune::ply::canonical_property_order(0),
    };
    let scored = compute_scores(&scene, &PipelineConfig::default(), None).unwrap();
    assert_eq!(scored.scores.len(), 1);
    assert!(scored.scores[0].is_finite());
}
