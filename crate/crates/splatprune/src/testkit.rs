//! Independent reference implementations used by the test suites.
//!
//! These deliberately re-derive their results with straightforward
//! brute-force code that shares no internals with the library paths they
//! check: neighborhoods come from a full quadratic scan, angles from
//! spelled-out component arithmetic, and Beta moments from quadrature.

/// Quadratic-time FPFH over all points: exhaustive k-nearest neighborhoods
/// (ties by lower index), Darboux angles from explicit component math,
/// 11-bin histograms per angle, inverse-distance neighbor blending.
pub fn reference_fpfh(
    positions: &[[f64; 3]],
    normals: &[[f64; 3]],
    k: usize,
    eps: f64,
) -> Vec<[f64; 33]> {
    let n = positions.len();
    let neighborhoods: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dx = positions[j][0] - positions[i][0];
                    let dy = positions[j][1] - positions[i][1];
                    let dz = positions[j][2] - positions[i][2];
                    (dx * dx + dy * dy + dz * dz, j)
                })
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.truncate(k.min(n.saturating_sub(1)));
            all.into_iter().map(|(d2, j)| (j, d2.sqrt())).collect()
        })
        .collect();

    let spfhs: Vec<[f64; 33]> = (0..n)
        .map(|i| {
            let mut hist = [0.0f64; 33];
            let mut pairs = 0usize;
            for &(j, _) in &neighborhoods[i] {
                if let Some((alpha, sigma, theta)) =
                    reference_pair_angles(&positions[i], &normals[i], &positions[j], &normals[j])
                {
                    hist[bin11_unit(alpha)] += 1.0;
                    hist[11 + bin11_unit(sigma)] += 1.0;
                    hist[22 + bin11_angle(theta)] += 1.0;
                    pairs += 1;
                }
            }
            if pairs > 0 {
                for block in 0..3 {
                    let total: f64 = hist[block * 11..(block + 1) * 11].iter().sum();
                    if total > 0.0 {
                        for x in hist[block * 11..(block + 1) * 11].iter_mut() {
                            *x /= total;
                        }
                    }
                }
            }
            hist
        })
        .collect();

    (0..n)
        .map(|i| {
            let mut out = spfhs[i];
            let set = &neighborhoods[i];
            if !set.is_empty() {
                for &(j, d) in set {
                    let w = 1.0 / d.max(eps);
                    for b in 0..33 {
                        out[b] += spfhs[j][b] * w / set.len() as f64;
                    }
                }
            }
            for block in 0..3 {
                let total: f64 = out[block * 11..(block + 1) * 11].iter().sum();
                if total > 0.0 {
                    for x in out[block * 11..(block + 1) * 11].iter_mut() {
                        *x /= total;
                    }
                }
            }
            out
        })
        .collect()
}

/// Darboux angles with FPFH source selection, all in explicit components.
/// Returns `None` for pairs with a degenerate frame.
fn reference_pair_angles(
    p1: &[f64; 3],
    n1: &[f64; 3],
    p2: &[f64; 3],
    n2: &[f64; 3],
) -> Option<(f64, f64, f64)> {
    let diff = [p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2]];
    let len = (diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]).sqrt();
    if len == 0.0 {
        return None;
    }
    let mut d = [diff[0] / len, diff[1] / len, diff[2] / len];

    let cos1 = (n1[0] * d[0] + n1[1] * d[1] + n1[2] * d[2]).abs();
    let cos2 = (n2[0] * d[0] + n2[1] * d[1] + n2[2] * d[2]).abs();
    let (ns, nt) = if cos1 >= cos2 {
        (n1, n2)
    } else {
        // Swapped pair: the direction runs target to source.
        d = [-d[0], -d[1], -d[2]];
        (n2, n1)
    };

    let dxu = [
        d[1] * ns[2] - d[2] * ns[1],
        d[2] * ns[0] - d[0] * ns[2],
        d[0] * ns[1] - d[1] * ns[0],
    ];
    let vlen = (dxu[0] * dxu[0] + dxu[1] * dxu[1] + dxu[2] * dxu[2]).sqrt();
    if vlen < 1e-9 {
        return None;
    }
    let v = [dxu[0] / vlen, dxu[1] / vlen, dxu[2] / vlen];
    let w = [
        ns[1] * v[2] - ns[2] * v[1],
        ns[2] * v[0] - ns[0] * v[2],
        ns[0] * v[1] - ns[1] * v[0],
    ];
    let alpha = v[0] * nt[0] + v[1] * nt[1] + v[2] * nt[2];
    let sigma = ns[0] * d[0] + ns[1] * d[1] + ns[2] * d[2];
    let theta = (w[0] * nt[0] + w[1] * nt[1] + w[2] * nt[2])
        .atan2(ns[0] * nt[0] + ns[1] * nt[1] + ns[2] * nt[2]);
    Some((alpha, sigma, theta))
}

fn bin11_unit(x: f64) -> usize {
    (((x + 1.0) * 0.5 * 11.0).floor() as isize).clamp(0, 10) as usize
}

fn bin11_angle(t: f64) -> usize {
    ((((t + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)) * 11.0).floor() as isize)
        .clamp(0, 10) as usize
}

/// Beta moments by quadrature of the density, independent of any
/// closed-form moment formula.
///
/// The substitution `x = sin^2(t)` turns the density kernel into
/// `2 sin^{2a-1}(t) cos^{2b-1}(t)`, which is bounded for `a, b >= 0.5`, so a
/// midpoint rule converges cleanly; normalization uses the kernel ratio so
/// no beta-function evaluation is involved.
pub fn beta_moments_quadrature(a: f64, b: f64, points: usize) -> (f64, f64) {
    let h = std::f64::consts::FRAC_PI_2 / points as f64;
    let mut mass = 0.0;
    let mut first = 0.0;
    let mut second = 0.0;
    for i in 0..points {
        let t = (i as f64 + 0.5) * h;
        let (sin_t, cos_t) = (t.sin(), t.cos());
        let x = sin_t * sin_t;
        let kernel = 2.0
            * ((2.0 * a - 1.0) * sin_t.ln() + (2.0 * b - 1.0) * cos_t.ln()).exp();
        mass += kernel;
        first += x * kernel;
        second += x * x * kernel;
    }
    let mean = first / mass;
    let variance = second / mass - mean * mean;
    (mean, variance)
}

/// All 24 proper rotations of the axis-aligned cube (signed permutation
/// matrices with determinant +1). These preserve axis-aligned bounding
/// boxes exactly, which is what pipeline-level rigid invariance needs.
pub fn octahedral_rotations() -> Vec<[[f64; 3]; 3]> {
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(24);
    for perm in perms {
        for bits in 0..8u32 {
            let mut m = [[0.0f64; 3]; 3];
            for (col, &row) in perm.iter().enumerate() {
                let sign = if bits & (1 << col) != 0 { -1.0 } else { 1.0 };
                m[row][col] = sign;
            }
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            if det > 0.0 {
                out.push(m);
            }
        }
    }
    out
}

/// Apply a rigid motion to a whole scene: positions get `R p + t`,
/// quaternions are composed with the rotation.
pub fn rigid_transform_scene(
    scene: &splatprune_core::SplatScene,
    r: &[[f64; 3]; 3],
    t: &[f64; 3],
) -> splatprune_core::SplatScene {
    let qr = rotation_to_quaternion(r);
    let mut out = scene.clone();
    for s in out.splats.iter_mut() {
        let p = [
            s.position[0] as f64,
            s.position[1] as f64,
            s.position[2] as f64,
        ];
        for axis in 0..3 {
            s.position[axis] =
                (r[axis][0] * p[0] + r[axis][1] * p[1] + r[axis][2] * p[2] + t[axis]) as f32;
        }
        let q = [
            s.rotation[0] as f64,
            s.rotation[1] as f64,
            s.rotation[2] as f64,
            s.rotation[3] as f64,
        ];
        let composed = quat_mul(&qr, &q);
        for (dst, src) in s.rotation.iter_mut().zip(composed) {
            *dst = src as f32;
        }
    }
    out
}

/// Hamilton product of `(w, x, y, z)` quaternions.
fn quat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Shepperd's method for a proper rotation matrix.
fn rotation_to_quaternion(m: &[[f64; 3]; 3]) -> [f64; 4] {
    let trace = m[0][0] + m[1][1] + m[2][2];
    if trace > 0.0 {
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
    }
}

/// A degree-0 scene of `n` well-separated splats with varied attributes:
/// a jittered coarse grid whose minimum point separation exceeds the voxel
/// diagonal in any orientation, so every splat keeps its own voxel under
/// box-preserving rigid motions.
pub fn scattered_scene(n: usize, seed: u64) -> splatprune_core::SplatScene {
    use rand::{Rng, SeedableRng};
    use splatprune_core::splat::GaussianSplat;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let side = (n as f64).cbrt().ceil() as usize;
    let splats = (0..n)
        .map(|k| {
            let (i, j, l) = (k % side, (k / side) % side, k / (side * side));
            let q = {
                let raw: [f64; 4] = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let l2 = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-6);
                [raw[0] / l2, raw[1] / l2, raw[2] / l2, raw[3] / l2]
            };
            GaussianSplat {
                position: [
                    (i as f64 + rng.random_range(-0.2..0.2)) as f32,
                    (j as f64 + rng.random_range(-0.2..0.2)) as f32,
                    (l as f64 + rng.random_range(-0.2..0.2)) as f32,
                ],
                scale_log: [
                    rng.random_range(-3.0f32..-1.0),
                    rng.random_range(-3.0f32..-1.0),
                    rng.random_range(-4.5f32..-3.5),
                ],
                rotation: [q[0] as f32, q[1] as f32, q[2] as f32, q[3] as f32],
                opacity_logit: rng.random_range(-3.0f32..3.0),
                sh_dc: [
                    rng.random_range(-1.5f32..1.5),
                    rng.random_range(-1.5f32..1.5),
                    rng.random_range(-1.5f32..1.5),
                ],
                sh_rest: vec![],
                extra: vec![],
            }
        })
        .collect();
    splatprune_core::SplatScene {
        splats,
        sh_degree: 0,
        property_order: crate::ply::canonical_property_order(0),
    }
}

/// A random scene for round-trip fuzzing: random SH degree, shuffled
/// property order, optional unrecognized properties, and raw random bit
/// patterns (including NaN payloads) in every field.
pub fn fuzzed_scene(rng: &mut rand_chacha::ChaCha8Rng) -> splatprune_core::SplatScene {
    use rand::seq::SliceRandom;
    use rand::Rng;
    use splatprune_core::splat::{sh_rest_len, GaussianSplat};

    let count = rng.random_range(1..=40);
    let degree = rng.random_range(0..=3u8);
    let mut property_order = crate::ply::canonical_property_order(degree);
    if rng.random_range(0..3) == 0 {
        // Some exporters skip the normals.
        property_order.retain(|p| !matches!(p.as_str(), "nx" | "ny" | "nz"));
    }
    for k in 0..rng.random_range(0..3) {
        property_order.push(format!("custom_{k}"));
    }
    property_order.shuffle(rng);
    let extra_len = property_order
        .iter()
        .filter(|p| {
            p.starts_with("custom_") || matches!(p.as_str(), "nx" | "ny" | "nz")
        })
        .count();

    let random_f32 = |rng: &mut rand_chacha::ChaCha8Rng| -> f32 {
        if rng.random_range(0..8) == 0 {
            // Raw bits: exercises NaN payloads and infinities.
            f32::from_bits(rng.random::<u32>())
        } else {
            rng.random_range(-10.0..10.0)
        }
    };

    let splats = (0..count)
        .map(|_| GaussianSplat {
            position: std::array::from_fn(|_| random_f32(rng)),
            scale_log: std::array::from_fn(|_| random_f32(rng)),
            rotation: std::array::from_fn(|_| random_f32(rng)),
            opacity_logit: random_f32(rng),
            sh_dc: std::array::from_fn(|_| random_f32(rng)),
            sh_rest: (0..sh_rest_len(degree)).map(|_| random_f32(rng)).collect(),
            extra: (0..extra_len).map(|_| random_f32(rng)).collect(),
        })
        .collect();
    splatprune_core::SplatScene {
        splats,
        sh_degree: degree,
        property_order,
    }
}

/// Exhaustive kNN oracle matching the library's ordering contract.
pub fn brute_knn(
    points: &[[f64; 3]],
    query: &[f64; 3],
    k: usize,
    exclude: Option<usize>,
) -> Vec<(u32, f64)> {
    let mut all: Vec<(f64, u32)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, p)| {
            let dx = p[0] - query[0];
            let dy = p[1] - query[1];
            let dz = p[2] - query[2];
            (dx * dx + dy * dy + dz * dz, i as u32)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_known_uniform_moments() {
        let (mean, var) = beta_moments_quadrature(1.0, 1.0, 100_000);
        assert!((mean - 0.5).abs() < 1e-9);
        assert!((var - 1.0 / 12.0).abs() < 1e-9);
    }

    #[test]
    fn quadrature_handles_half_parameters() {
        // Arcsine distribution: mean 1/2, variance 1/8.
        let (mean, var) = beta_moments_quadrature(0.5, 0.5, 100_000);
        assert!((mean - 0.5).abs() < 1e-9);
        assert!((var - 0.125).abs() < 1e-9);
    }
}
