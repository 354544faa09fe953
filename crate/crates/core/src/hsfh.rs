//! Hybrid splat feature histograms.
//!
//! Per voxel representative this produces:
//! - a 33-bin geometric block: three 11-bin histograms of Darboux frame
//!   angles between neighboring representatives, FPFH-style;
//! - an SH band power spectrum, normalized to unit sum;
//! - a histogram of neighborhood color deviations;
//! - optionally a 10-value camera alignment block.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::parallel;
use crate::spatial::{Neighbor, VoxelMapping};
use crate::splat::{GaussianSplat, SplatScene};

/// Bins per Darboux angle histogram.
pub const ANGLE_BINS: usize = 11;
/// Size of the geometric block: three concatenated angle histograms.
pub const GEOMETRIC_DIM: usize = 3 * ANGLE_BINS;
/// Default bin count for the appearance deviation histogram.
pub const DEFAULT_APPEARANCE_BINS: usize = 16;
/// Length of the optional view block.
pub const VIEW_DIM: usize = 10;

/// A camera pose reduced to what the view block needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub center: [f64; 3],
    /// Unit-length viewing axis of the camera.
    pub forward: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DarbouxError {
    /// Source and target positions coincide; no direction exists.
    CoincidentPoints,
    /// Direction is parallel to the source normal; the frame is undefined
    /// and the pair should be skipped.
    DegenerateFrame,
}

impl core::fmt::Display for DarbouxError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DarbouxError::CoincidentPoints => write!(f, "coincident points"),
            DarbouxError::DegenerateFrame => write!(f, "direction parallel to source normal"),
        }
    }
}

impl core::error::Error for DarbouxError {}

/// Descriptor of one voxel representative.
#[derive(Debug, Clone, PartialEq)]
pub struct HsfhDescriptor {
    /// Three 11-bin angle histograms, each L1-normalized (or all zero when
    /// the neighborhood is empty).
    pub geometric: [f64; GEOMETRIC_DIM],
    /// Per-degree SH energy, normalized to sum 1 (all zero if no energy).
    pub power_spectrum: Vec<f64>,
    /// Neighborhood color deviation histogram, L1-normalized or all zero.
    pub appearance_hist: Vec<f64>,
    /// Camera alignment block; absent in camera-agnostic runs.
    pub view: Option<[f64; VIEW_DIM]>,
}

impl HsfhDescriptor {
    /// Full descriptor as one flat vector (geometric, power, appearance,
    /// view when present).
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&self.geometric);
        out.extend_from_slice(&self.power_spectrum);
        out.extend_from_slice(&self.appearance_hist);
        if let Some(v) = &self.view {
            out.extend_from_slice(v);
        }
        out
    }

    pub fn dim(&self) -> usize {
        GEOMETRIC_DIM
            + self.power_spectrum.len()
            + self.appearance_hist.len()
            + if self.view.is_some() { VIEW_DIM } else { 0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DescriptorConfig {
    pub appearance_bins: usize,
    pub with_view_features: bool,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            appearance_bins: DEFAULT_APPEARANCE_BINS,
            with_view_features: false,
        }
    }
}

// ---------------------------------------------------------------------------
// vector helpers

#[inline]
fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn norm(a: &[f64; 3]) -> f64 {
    math::sqrt(dot(a, a))
}

// ---------------------------------------------------------------------------
// normals

/// Surface normal of a splat: the covariance axis with the smallest scale,
/// oriented away from `local_centroid`.
///
/// Ties on the minimum scale resolve to the highest axis index, so isotropic
/// splats yield their rotated z-axis. If the splat sits on the centroid
/// (orientation undecidable), the sign makes the largest-magnitude component
/// positive.
pub fn splat_normal(splat: &GaussianSplat, local_centroid: &[f64; 3]) -> [f64; 3] {
    let r = splat.rotation_matrix();
    let mut axis = 0usize;
    for a in 1..3 {
        if splat.scale_log[a] <= splat.scale_log[axis] {
            axis = a;
        }
    }
    let mut n = [r[0][axis], r[1][axis], r[2][axis]];
    let outward = sub(&splat.position_f64(), local_centroid);
    let d = dot(&n, &outward);
    if math::abs(d) < 1e-12 {
        let mut major = 0usize;
        for a in 1..3 {
            if math::abs(n[a]) > math::abs(n[major]) {
                major = a;
            }
        }
        if n[major] < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
    } else if d < 0.0 {
        n = [-n[0], -n[1], -n[2]];
    }
    n
}

// ---------------------------------------------------------------------------
// Darboux angles and histograms

/// Darboux frame angles `(alpha, sigma, theta)` between a source and target
/// point with unit normals.
///
/// With `d` the unit direction from source to target and the frame
/// `u = n_s`, `v = normalize(d x u)`, `w = u x v`:
/// `alpha = v . n_t`, `sigma = u . d`, `theta = atan2(w . n_t, u . n_t)`.
pub fn darboux_angles(
    p_s: &[f64; 3],
    n_s: &[f64; 3],
    p_t: &[f64; 3],
    n_t: &[f64; 3],
) -> Result<(f64, f64, f64), DarbouxError> {
    let diff = sub(p_t, p_s);
    let len = norm(&diff);
    if len == 0.0 {
        return Err(DarbouxError::CoincidentPoints);
    }
    let d = [diff[0] / len, diff[1] / len, diff[2] / len];
    let u = *n_s;
    let dxu = cross(&d, &u);
    let vlen = norm(&dxu);
    if vlen < 1e-9 {
        return Err(DarbouxError::DegenerateFrame);
    }
    let v = [dxu[0] / vlen, dxu[1] / vlen, dxu[2] / vlen];
    let w = cross(&u, &v);
    let alpha = dot(&v, n_t);
    let sigma = dot(&u, &d);
    let theta = math::atan2(dot(&w, n_t), dot(&u, n_t));
    Ok((alpha, sigma, theta))
}

#[inline]
fn bin_cos(x: f64) -> usize {
    let idx = math::floor((x + 1.0) * 0.5 * ANGLE_BINS as f64) as isize;
    idx.clamp(0, ANGLE_BINS as isize - 1) as usize
}

#[inline]
fn bin_theta(t: f64) -> usize {
    let idx = math::floor((t + core::f64::consts::PI) / (2.0 * core::f64::consts::PI)
        * ANGLE_BINS as f64) as isize;
    idx.clamp(0, ANGLE_BINS as isize - 1) as usize
}

/// Simplified point feature histogram of point `i` over its neighbors.
///
/// For each pair the source is the endpoint whose normal is closer in angle
/// to the connecting line (ties keep `i` as source). Degenerate pairs are
/// skipped; an empty neighborhood yields the all-zero histogram.
pub fn spfh(
    positions: &[[f64; 3]],
    normals: &[[f64; 3]],
    i: usize,
    neighbors: &[u32],
) -> [f64; GEOMETRIC_DIM] {
    let mut hist = [0.0f64; GEOMETRIC_DIM];
    let mut pairs = 0usize;
    for &j in neighbors {
        let j = j as usize;
        let diff = sub(&positions[j], &positions[i]);
        let len = norm(&diff);
        if len == 0.0 {
            continue;
        }
        let d = [diff[0] / len, diff[1] / len, diff[2] / len];
        let cos_i = math::abs(dot(&normals[i], &d));
        let cos_j = math::abs(dot(&normals[j], &d));
        let (s, t) = if cos_i >= cos_j { (i, j) } else { (j, i) };
        let angles = match darboux_angles(&positions[s], &normals[s], &positions[t], &normals[t]) {
            Ok(a) => a,
            Err(_) => continue,
        };
        hist[bin_cos(angles.0)] += 1.0;
        hist[ANGLE_BINS + bin_cos(angles.1)] += 1.0;
        hist[2 * ANGLE_BINS + bin_theta(angles.2)] += 1.0;
        pairs += 1;
    }
    if pairs > 0 {
        normalize_blocks(&mut hist);
    }
    hist
}

/// Normalize each 11-bin block to unit sum; all-zero blocks stay zero.
fn normalize_blocks(hist: &mut [f64; GEOMETRIC_DIM]) {
    for b in 0..3 {
        let block = &mut hist[b * ANGLE_BINS..(b + 1) * ANGLE_BINS];
        let total: f64 = block.iter().sum();
        if total > 0.0 {
            for x in block.iter_mut() {
                *x /= total;
            }
        }
    }
}

/// Fast point feature histogram: the center SPFH plus the inverse-distance
/// weighted mean of neighbor SPFHs, each block renormalized.
pub fn fpfh_from_spfh(
    spfhs: &[[f64; GEOMETRIC_DIM]],
    i: usize,
    neighbors: &[Neighbor],
    eps: f64,
) -> [f64; GEOMETRIC_DIM] {
    let mut out = spfhs[i];
    if !neighbors.is_empty() {
        let inv_k = 1.0 / neighbors.len() as f64;
        for &(j, d) in neighbors {
            let w = 1.0 / math::fmax(d, eps);
            let nb = &spfhs[j as usize];
            for (o, x) in out.iter_mut().zip(nb.iter()) {
                *o += inv_k * w * x;
            }
        }
    }
    normalize_blocks(&mut out);
    out
}

/// SPFH + FPFH over a whole point set with per-point neighbor lists.
pub fn fpfh_all(
    positions: &[[f64; 3]],
    normals: &[[f64; 3]],
    neighbor_sets: &[Vec<Neighbor>],
    eps: f64,
) -> Vec<[f64; GEOMETRIC_DIM]> {
    let spfhs: Vec<[f64; GEOMETRIC_DIM]> = parallel::map_indexed(positions.len(), |i| {
        let ids: Vec<u32> = neighbor_sets[i].iter().map(|&(j, _)| j).collect();
        spfh(positions, normals, i, &ids)
    });
    parallel::map_indexed(positions.len(), |i| {
        fpfh_from_spfh(&spfhs, i, &neighbor_sets[i], eps)
    })
}

// ---------------------------------------------------------------------------
// appearance

/// Per-degree SH energy of one splat: squared coefficients summed over the
/// color channels of every order in the band. Normalized to unit sum, or all
/// zero when the total is below 1e-20.
pub fn sh_power_spectrum(splat: &GaussianSplat) -> Vec<f64> {
    let per_channel = splat.sh_rest.len() / 3;
    // Smallest band count (L + 1) whose capacity covers the coefficients.
    let mut bands = 1usize;
    while bands * bands - 1 < per_channel {
        bands += 1;
    }
    let mut power = vec![0.0f64; bands];
    let dc = splat.sh_dc_f64();
    power[0] = dc[0] * dc[0] + dc[1] * dc[1] + dc[2] * dc[2];
    for ch in 0..3 {
        for k in 0..per_channel {
            let v = splat.sh_rest[ch * per_channel + k] as f64;
            power[band_of_rest_index(k)] += v * v;
        }
    }
    let total: f64 = power.iter().sum();
    if total < 1e-20 {
        for x in power.iter_mut() {
            *x = 0.0;
        }
    } else {
        for x in power.iter_mut() {
            *x /= total;
        }
    }
    power
}

/// Degree of the k-th per-channel higher-order coefficient:
/// degree `l` covers indices `l^2 - 1 .. (l+1)^2 - 1`.
#[inline]
fn band_of_rest_index(k: usize) -> usize {
    let mut l = 1usize;
    while (l + 1) * (l + 1) - 1 <= k {
        l += 1;
    }
    l
}

/// Histogram of color deviation magnitudes over `[0, d_max]`; values above
/// `d_max` land in the top bin. Empty input yields the all-zero histogram.
pub fn appearance_histogram(deviations: &[f64], d_max: f64, bins: usize) -> Vec<f64> {
    let mut hist = vec![0.0f64; bins];
    if deviations.is_empty() {
        return hist;
    }
    for &d in deviations {
        let idx = if d_max > 0.0 {
            (math::floor(d / d_max * bins as f64) as isize).clamp(0, bins as isize - 1) as usize
        } else {
            0
        };
        hist[idx] += 1.0;
    }
    let total = deviations.len() as f64;
    for x in hist.iter_mut() {
        *x /= total;
    }
    hist
}

/// Euclidean distances of each neighbor's mean color from the mean color of
/// the neighbor set.
pub fn color_deviations(neighbor_colors: &[[f64; 3]]) -> Vec<f64> {
    if neighbor_colors.is_empty() {
        return Vec::new();
    }
    let inv = 1.0 / neighbor_colors.len() as f64;
    let mut mean = [0.0f64; 3];
    for c in neighbor_colors {
        for a in 0..3 {
            mean[a] += c[a];
        }
    }
    for m in mean.iter_mut() {
        *m *= inv;
    }
    neighbor_colors
        .iter()
        .map(|c| norm(&sub(c, &mean)))
        .collect()
}

// ---------------------------------------------------------------------------
// view features

/// Camera alignment block: `[min, mean, max]` of normalized distance,
/// `|n . view_dir|`, and `|n . forward|` across cameras, plus the clamped
/// normalized camera count.
pub fn view_features(
    position: &[f64; 3],
    normal: &[f64; 3],
    cameras: &[Camera],
    bbox_diagonal: f64,
) -> Option<[f64; VIEW_DIM]> {
    if cameras.is_empty() {
        return None;
    }
    let scale = if bbox_diagonal > 0.0 {
        bbox_diagonal
    } else {
        1.0
    };
    let mut agg = [[f64::INFINITY, 0.0, f64::NEG_INFINITY]; 3];
    for cam in cameras {
        let to_splat = sub(position, &cam.center);
        let dist = norm(&to_splat);
        let view_dir = if dist > 0.0 {
            [to_splat[0] / dist, to_splat[1] / dist, to_splat[2] / dist]
        } else {
            cam.forward
        };
        let vals = [
            dist / scale,
            math::abs(dot(normal, &view_dir)),
            math::abs(dot(normal, &cam.forward)),
        ];
        for (slot, v) in agg.iter_mut().zip(vals) {
            slot[0] = math::fmin(slot[0], v);
            slot[1] += v;
            slot[2] = math::fmax(slot[2], v);
        }
    }
    let inv = 1.0 / cameras.len() as f64;
    let count_feature = math::fmin(cameras.len() as f64, 32.0) / 32.0;
    Some([
        agg[0][0],
        agg[0][1] * inv,
        agg[0][2],
        agg[1][0],
        agg[1][1] * inv,
        agg[1][2],
        agg[2][0],
        agg[2][1] * inv,
        agg[2][2],
        count_feature,
    ])
}

// ---------------------------------------------------------------------------
// whole-scene descriptor computation

/// Normal per voxel representative: the normal of the member splat with the
/// highest activated opacity, oriented away from the mean of the neighbor
/// centroids.
pub fn representative_normals(
    scene: &SplatScene,
    mapping: &VoxelMapping,
    neighbor_sets: &[Vec<Neighbor>],
) -> Vec<[f64; 3]> {
    parallel::map_indexed(mapping.voxel_count(), |v| {
        let rec = &mapping.representatives[v];
        let mut best = rec.member_ids[0];
        let mut best_opacity = scene.splats[best as usize].opacity_linear();
        for &i in &rec.member_ids[1..] {
            let o = scene.splats[i as usize].opacity_linear();
            if o > best_opacity {
                best = i;
                best_opacity = o;
            }
        }
        let local_centroid = if neighbor_sets[v].is_empty() {
            rec.centroid
        } else {
            let inv = 1.0 / neighbor_sets[v].len() as f64;
            let mut c = [0.0; 3];
            for &(j, _) in &neighbor_sets[v] {
                let nc = &mapping.representatives[j as usize].centroid;
                for a in 0..3 {
                    c[a] += nc[a];
                }
            }
            [c[0] * inv, c[1] * inv, c[2] * inv]
        };
        splat_normal(&scene.splats[best as usize], &local_centroid)
    })
}

/// Full HSFH descriptors for every voxel representative.
pub fn compute_descriptors(
    scene: &SplatScene,
    mapping: &VoxelMapping,
    neighbor_sets: &[Vec<Neighbor>],
    config: &DescriptorConfig,
    cameras: Option<&[Camera]>,
    bbox_diagonal: f64,
) -> Vec<HsfhDescriptor> {
    let v = mapping.voxel_count();
    let centroids = mapping.centroids();
    let normals = representative_normals(scene, mapping, neighbor_sets);
    let eps = 1e-9 * mapping.voxel_size;
    let geometric = fpfh_all(&centroids, &normals, neighbor_sets, eps);

    // Appearance pass 1: every neighbor color deviation in the scene, in
    // fixed (voxel, neighbor) order, for the scene-level percentile.
    let per_voxel_devs: Vec<Vec<f64>> = parallel::map_indexed(v, |i| {
        let colors: Vec<[f64; 3]> = neighbor_sets[i]
            .iter()
            .map(|&(j, _)| mapping.representatives[j as usize].mean_sh_dc)
            .collect();
        color_deviations(&colors)
    });
    let mut all_devs: Vec<f64> = per_voxel_devs.iter().flatten().copied().collect();
    all_devs.sort_unstable_by(f64::total_cmp);
    let d_max = percentile_99(&all_devs);

    parallel::map_indexed(v, |i| {
        let power = normalize_or_zero(&mapping.representatives[i].mean_power_spectrum);
        let appearance_hist =
            appearance_histogram(&per_voxel_devs[i], d_max, config.appearance_bins);
        let view = match (config.with_view_features, cameras) {
            (true, Some(cams)) => view_features(&centroids[i], &normals[i], cams, bbox_diagonal),
            _ => None,
        };
        HsfhDescriptor {
            geometric: geometric[i],
            power_spectrum: power,
            appearance_hist,
            view,
        }
    })
}

fn percentile_99(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    // Nearest-rank percentile: ceil(0.99 n).
    let rank = (math::ceil(sorted.len() as f64 * 0.99) as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn normalize_or_zero(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if total < 1e-20 {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|x| x / total).collect()
    }
}
