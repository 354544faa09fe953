//! Deterministic synthetic scenes with planted redundancy labels.
//!
//! The scene is a flat square of near-identical splats (redundant background)
//! plus a thin curve of varied, partly transparent splats (fine structure).
//! Each splat carries a label so tests can measure which population a pruning
//! configuration sacrifices.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use splatprune_core::splat::{GaussianSplat, SplatScene};
use thiserror::Error;

use crate::ply::canonical_property_order;

/// DC spherical harmonics basis constant; color = 0.5 + C0 * coefficient.
const SH_C0: f64 = 0.28209479177387814;

/// Maximum random tilt of the background splats at zero noise, radians
/// (about 3 degrees, comfortably inside the 5-degree normal alignment
/// contract).
const PLANE_TILT_MAX: f64 = 0.052;

/// Orientation jitter per unit of position jitter. Trained splats in noisy
/// regions have noisy orientations too, so the `noise` knob perturbs both.
const TILT_PER_NOISE: f64 = 300.0;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("synthetic scene needs at least one splat")]
    EmptySpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n_plane: usize,
    pub n_rod: usize,
    /// Uniform position jitter amplitude, scene units (the square has side 1).
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplatLabel {
    #[serde(rename = "REDUNDANT")]
    Redundant,
    #[serde(rename = "FINE")]
    Fine,
}

/// Build the labeled scene. The same spec always produces identical bytes.
pub fn synth_scene(spec: &SynthSpec) -> Result<(SplatScene, Vec<SplatLabel>), SynthError> {
    if spec.n_plane == 0 && spec.n_rod == 0 {
        return Err(SynthError::EmptySpec);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut splats = Vec::with_capacity(spec.n_plane + spec.n_rod);
    let mut labels = Vec::with_capacity(spec.n_plane + spec.n_rod);

    build_plane(spec, &mut rng, &mut splats);
    labels.resize(splats.len(), SplatLabel::Redundant);
    build_rod(spec, &mut rng, &mut splats);
    labels.resize(splats.len(), SplatLabel::Fine);

    Ok((
        SplatScene {
            splats,
            sh_degree: 0,
            property_order: canonical_property_order(0),
        },
        labels,
    ))
}

/// Near-identical splats tiling the unit square at z = 0: uniform color,
/// high opacity, thin normal scale, small random tilts.
fn build_plane(spec: &SynthSpec, rng: &mut ChaCha8Rng, out: &mut Vec<GaussianSplat>) {
    if spec.n_plane == 0 {
        return;
    }
    let side = (spec.n_plane as f64).sqrt().ceil() as usize;
    let g = 1.0 / side as f64;
    let tangent_scale = (0.7 * g).ln() as f32;
    let normal_scale = (0.07 * g).ln() as f32;
    let dc = color_to_dc([0.55, 0.45, 0.40]);

    for k in 0..spec.n_plane {
        let (i, j) = (k % side, k / side);
        let base = [(i as f64 + 0.5) * g, (j as f64 + 0.5) * g, 0.0];
        let p = jitter(base, spec.noise, rng);

        // Tilt about a random in-plane axis, growing with the noise level.
        let phi = uniform(rng, 0.0, core::f64::consts::TAU);
        let tilt_max = PLANE_TILT_MAX + TILT_PER_NOISE * spec.noise;
        let angle = uniform(rng, 0.0, tilt_max);
        let (sin_h, cos_h) = ((angle * 0.5).sin(), (angle * 0.5).cos());
        let rotation = [
            cos_h as f32,
            (phi.cos() * sin_h) as f32,
            (phi.sin() * sin_h) as f32,
            0.0,
        ];

        out.push(GaussianSplat {
            position: [p[0] as f32, p[1] as f32, p[2] as f32],
            scale_log: [tangent_scale, tangent_scale, normal_scale],
            rotation,
            opacity_logit: 2.0,
            sh_dc: dc,
            sh_rest: vec![],
            extra: vec![0.0, 0.0, 0.0],
        });
    }
}

/// A thin, gently bending curve floating just above the square: elongated
/// splats, smoothly drifting colors, opacity alternating between faint and
/// solid.
fn build_rod(spec: &SynthSpec, rng: &mut ChaCha8Rng, out: &mut Vec<GaussianSplat>) {
    if spec.n_rod == 0 {
        return;
    }
    let delta = 1.0 / spec.n_rod as f64;
    let along = 3.0 * delta;
    let perp = 0.3 * delta;
    let scale_log = [
        (along.max(1e-4)).ln() as f32,
        (perp.max(1e-5)).ln() as f32,
        (0.8 * perp.max(1e-5)).ln() as f32,
    ];

    let mut pair_jitter = [0.0; 3];
    for k in 0..spec.n_rod {
        // Dim and solid splats come in co-located pairs along the curve;
        // jitter applies per pair so a pair never straddles a voxel border.
        let t = ((k / 2) as f64 + 0.5) / spec.n_rod.div_ceil(2) as f64;
        if k % 2 == 0 {
            pair_jitter = [
                uniform(rng, -spec.noise, spec.noise),
                uniform(rng, -spec.noise, spec.noise),
                uniform(rng, -spec.noise, spec.noise),
            ];
        }
        let base = rod_point(t);
        let p = [
            base[0] + pair_jitter[0],
            base[1] + pair_jitter[1],
            base[2] + pair_jitter[2],
        ];

        let rotation = frame_quaternion(rod_tangent(t));

        // Two alternating tones around a base color far from the background.
        let color = if k % 2 == 0 {
            [0.26, 0.56, 0.72]
        } else {
            [0.14, 0.64, 0.78]
        };
        let opacity_logit = if k % 2 == 0 { -1.0 } else { 2.0 };

        out.push(GaussianSplat {
            position: [p[0] as f32, p[1] as f32, p[2] as f32],
            scale_log,
            rotation,
            opacity_logit,
            sh_dc: color_to_dc(color),
            sh_rest: vec![],
            extra: vec![0.0, 0.0, 0.0],
        });
    }
}

// The fine structure rises out of the background square like a pole with a
// gentle sideways sway.
fn rod_point(t: f64) -> [f64; 3] {
    [
        0.5 + 0.03 * (core::f64::consts::PI * t).sin(),
        0.48 + 0.05 * t,
        0.03 + 0.44 * t,
    ]
}

fn rod_tangent(t: f64) -> [f64; 3] {
    let dx = 0.03 * core::f64::consts::PI * (core::f64::consts::PI * t).cos();
    let n = (dx * dx + 0.05f64 * 0.05 + 0.44f64 * 0.44).sqrt();
    [dx / n, 0.05 / n, 0.44 / n]
}

/// Quaternion whose rotation maps x to `tangent` and z to a stable
/// perpendicular (the reference axis least aligned with the tangent,
/// orthogonalized against it).
fn frame_quaternion(tangent: [f64; 3]) -> [f32; 4] {
    let t = tangent;
    let mut ref_axis = [0.0; 3];
    let mut best = f64::INFINITY;
    for a in 0..3 {
        if t[a].abs() < best {
            best = t[a].abs();
            ref_axis = [0.0; 3];
            ref_axis[a] = 1.0;
        }
    }
    let proj = ref_axis[0] * t[0] + ref_axis[1] * t[1] + ref_axis[2] * t[2];
    let mut up = [
        ref_axis[0] - proj * t[0],
        ref_axis[1] - proj * t[1],
        ref_axis[2] - proj * t[2],
    ];
    let un = (up[0] * up[0] + up[1] * up[1] + up[2] * up[2]).sqrt();
    for v in up.iter_mut() {
        *v /= un;
    }
    let side = [
        up[1] * t[2] - up[2] * t[1],
        up[2] * t[0] - up[0] * t[2],
        up[0] * t[1] - up[1] * t[0],
    ];
    matrix_to_quaternion([
        [t[0], side[0], up[0]],
        [t[1], side[1], up[1]],
        [t[2], side[2], up[2]],
    ])
}

/// Shepperd's method, column-major rotation matrix to `(w, x, y, z)`.
fn matrix_to_quaternion(m: [[f64; 3]; 3]) -> [f32; 4] {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        [
            0.25 * s,
            (m[2][1] - m[1][2]) / s,
            (m[0][2] - m[2][0]) / s,
            (m[1][0] - m[0][1]) / s,
        ]
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        [
            (m[2][1] - m[1][2]) / s,
            0.25 * s,
            (m[0][1] + m[1][0]) / s,
            (m[0][2] + m[2][0]) / s,
        ]
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        [
            (m[0][2] - m[2][0]) / s,
            (m[0][1] + m[1][0]) / s,
            0.25 * s,
            (m[1][2] + m[2][1]) / s,
        ]
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        [
            (m[1][0] - m[0][1]) / s,
            (m[0][2] + m[2][0]) / s,
            (m[1][2] + m[2][1]) / s,
            0.25 * s,
        ]
    };
    [q[0] as f32, q[1] as f32, q[2] as f32, q[3] as f32]
}

fn color_to_dc(color: [f64; 3]) -> [f32; 3] {
    [
        ((color[0] - 0.5) / SH_C0) as f32,
        ((color[1] - 0.5) / SH_C0) as f32,
        ((color[2] - 0.5) / SH_C0) as f32,
    ]
}

fn jitter(base: [f64; 3], amplitude: f64, rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        base[0] + uniform(rng, -amplitude, amplitude),
        base[1] + uniform(rng, -amplitude, amplitude),
        base[2] + uniform(rng, -amplitude, amplitude),
    ]
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}
