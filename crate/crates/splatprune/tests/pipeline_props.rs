//! Pipeline-level invariants beyond the acceptance gate.

use std::collections::BTreeSet;

use splatprune::config::PipelineConfig;
use splatprune::pipeline::run_pipeline;
use splatprune::testkit;

/// Permuting the input splat order permutes the removal set accordingly
/// when scores are well separated.
#[test]
fn permutation_equivariance() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let scene = testkit::scattered_scene(400, 77);
    let config = PipelineConfig::default();
    let (scored, base) = run_pipeline(&scene, &config, None, Some(0.3), None).unwrap();

    let mut sorted = scored.scores.clone();
    sorted.sort_by(f64::total_cmp);
    let min_gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    assert!(min_gap > 1e-9, "scores too close ({min_gap:e}) for the check");

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let mut perm: Vec<usize> = (0..scene.len()).collect();
        perm.shuffle(&mut rng);
        let mut shuffled = scene.clone();
        shuffled.splats = perm.iter().map(|&i| scene.splats[i].clone()).collect();

        let (_, moved) = run_pipeline(&shuffled, &config, None, Some(0.3), None).unwrap();
        let original_ids: BTreeSet<u32> = moved
            .removed_ids
            .iter()
            .map(|&i| perm[i as usize] as u32)
            .collect();
        let base_ids: BTreeSet<u32> = base.removed_ids.iter().copied().collect();
        assert_eq!(original_ids, base_ids);
    }
}

/// Voxel statistics stay in the unit interval on a larger fuzzed scene.
#[test]
fn statistics_bounded_on_fuzzed_scene() {
    let (scene, _) = splatprune::synth_scene(&splatprune::SynthSpec {
        n_plane: 9_000,
        n_rod: 1_000,
        noise: 0.004,
        seed: 31,
    })
    .unwrap();
    let scored =
        splatprune::pipeline::compute_scores(&scene, &PipelineConfig::default(), None).unwrap();
    for st in &scored.voxel_stats {
        for v in [st.s, st.l, st.o, st.u] {
            assert!((0.0..=1.0).contains(&v) && v.is_finite());
        }
    }
    let ev = scored.voxel_evidence.as_ref().unwrap();
    for e in ev {
        assert!(e.a >= 1.0 && e.b >= 1.0 && e.a.is_finite() && e.b.is_finite());
    }

    // Every histogram block is L1-normalized or all zero; nothing is NaN.
    let unit_or_zero = |block: &[f64]| {
        assert!(block.iter().all(|x| x.is_finite() && *x >= 0.0));
        let sum: f64 = block.iter().sum();
        sum == 0.0 || (sum - 1.0).abs() < 1e-9
    };
    for d in scored.descriptors.as_ref().unwrap() {
        for b in 0..3 {
            assert!(unit_or_zero(&d.geometric[b * 11..(b + 1) * 11]));
        }
        assert!(unit_or_zero(&d.power_spectrum));
        assert!(unit_or_zero(&d.appearance_hist));
    }
}
