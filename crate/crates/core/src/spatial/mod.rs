//! Scene-scale geometry: bounding box, voxelized downsampling, exact kNN,
//! and distance-weighted voxel-to-splat interpolation.

mod kdtree;

pub use kdtree::{dist2, KdTree, Neighbor};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use smallvec::SmallVec;

use crate::hsfh;
use crate::math;
use crate::parallel;
use crate::splat::SplatScene;

/// Default voxel edge as a fraction of the scene bounding box diagonal.
pub const DEFAULT_VOXEL_FRAC: f64 = 0.015;
/// Default neighborhood size for voxel-level descriptors and evidence.
pub const DEFAULT_K_NEIGHBORS: usize = 16;
/// Default number of voxel representatives blended per splat.
pub const DEFAULT_INTERP_M: usize = 4;
/// Voxel edge used when the scene bounding box is degenerate (diagonal 0).
pub const DEGENERATE_VOXEL_SIZE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpatialError {
    EmptyScene,
    InvalidFraction,
    KTooLarge { k: usize, available: usize },
    LengthMismatch { expected: usize, got: usize },
}

impl core::fmt::Display for SpatialError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpatialError::EmptyScene => write!(f, "scene contains no splats"),
            SpatialError::InvalidFraction => {
                write!(f, "voxel fraction must be in (0, 0.1]")
            }
            SpatialError::KTooLarge { k, available } => {
                write!(f, "k = {k} exceeds the {available} available points")
            }
            SpatialError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} per-voxel values, got {got}")
            }
        }
    }
}

impl core::error::Error for SpatialError {}

/// Tight axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn diagonal(&self) -> f64 {
        let dx = self.max[0] - self.min[0];
        let dy = self.max[1] - self.min[1];
        let dz = self.max[2] - self.min[2];
        math::sqrt(dx * dx + dy * dy + dz * dz)
    }
}

/// Bounding box over all splat positions.
pub fn bbox(scene: &SplatScene) -> Result<BoundingBox, SpatialError> {
    bbox_of_points(&scene.positions_f64()).ok_or(SpatialError::EmptyScene)
}

pub fn bbox_of_points(points: &[[f64; 3]]) -> Option<BoundingBox> {
    if points.is_empty() {
        return None;
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            min[a] = math::fmin(min[a], p[a]);
            max[a] = math::fmax(max[a], p[a]);
        }
    }
    Some(BoundingBox { min, max })
}

/// One occupied voxel: member splats and their averaged attributes.
#[derive(Debug, Clone)]
pub struct VoxelRecord {
    /// Unweighted mean of member positions.
    pub centroid: [f64; 3],
    /// Unweighted mean of member activated opacities.
    pub mean_opacity: f64,
    /// Unweighted mean of member DC SH coefficients.
    pub mean_sh_dc: [f64; 3],
    /// Unweighted mean of per-member normalized SH band power spectra.
    pub mean_power_spectrum: Vec<f64>,
    /// Member splat indices in scene order.
    pub member_ids: Vec<u32>,
}

impl VoxelRecord {
    pub fn member_count(&self) -> usize {
        self.member_ids.len()
    }
}

/// Voxelized view of a scene: representatives, ownership, and the
/// inverse-distance weights used to carry voxel-level values back to splats.
#[derive(Debug, Clone)]
pub struct VoxelMapping {
    pub voxel_size: f64,
    pub representatives: Vec<VoxelRecord>,
    /// Owning voxel per splat.
    pub splat_to_voxel: Vec<u32>,
    /// Per splat: `(voxel index, weight)` pairs, weights nonnegative, sum 1.
    pub interp: Vec<SmallVec<[(u32, f64); 4]>>,
}

impl VoxelMapping {
    pub fn voxel_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn centroids(&self) -> Vec<[f64; 3]> {
        self.representatives.iter().map(|r| r.centroid).collect()
    }
}

/// Group splats into grid cells of edge `voxel_frac * bbox diagonal` and
/// average their attributes. Interpolation weights use the default
/// [`DEFAULT_INTERP_M`] blend size.
pub fn voxel_downsample(scene: &SplatScene, voxel_frac: f64) -> Result<VoxelMapping, SpatialError> {
    voxel_downsample_m(scene, voxel_frac, DEFAULT_INTERP_M)
}

/// As [`voxel_downsample`] with an explicit per-splat blend size `interp_m`.
pub fn voxel_downsample_m(
    scene: &SplatScene,
    voxel_frac: f64,
    interp_m: usize,
) -> Result<VoxelMapping, SpatialError> {
    if !(voxel_frac > 0.0 && voxel_frac <= 0.1) {
        return Err(SpatialError::InvalidFraction);
    }
    let bb = bbox(scene)?;
    let diag = bb.diagonal();
    let voxel_size = if diag > 0.0 {
        voxel_frac * diag
    } else {
        DEGENERATE_VOXEL_SIZE
    };

    let n = scene.len();
    let positions = scene.positions_f64();

    // Cells keyed by integer coordinates anchored at bbox.min; voxel ids are
    // assigned in first-encounter (splat scan) order so the result does not
    // depend on map internals.
    let mut cell_ids: BTreeMap<(i64, i64, i64), u32> = BTreeMap::new();
    let mut splat_to_voxel = Vec::with_capacity(n);
    let mut members: Vec<Vec<u32>> = Vec::new();
    for (i, p) in positions.iter().enumerate() {
        let key = (
            math::floor((p[0] - bb.min[0]) / voxel_size) as i64,
            math::floor((p[1] - bb.min[1]) / voxel_size) as i64,
            math::floor((p[2] - bb.min[2]) / voxel_size) as i64,
        );
        let next_id = members.len() as u32;
        let id = *cell_ids.entry(key).or_insert(next_id);
        if id == next_id {
            members.push(Vec::new());
        }
        members[id as usize].push(i as u32);
        splat_to_voxel.push(id);
    }

    let bands = scene.sh_degree as usize + 1;
    let representatives: Vec<VoxelRecord> = parallel::map_indexed(members.len(), |v| {
        let ids = &members[v];
        let inv = 1.0 / ids.len() as f64;
        let mut centroid = [0.0; 3];
        let mut mean_opacity = 0.0;
        let mut mean_sh_dc = [0.0; 3];
        let mut mean_power = alloc::vec![0.0; bands];
        for &i in ids {
            let s = &scene.splats[i as usize];
            let p = s.position_f64();
            for a in 0..3 {
                centroid[a] += p[a];
                mean_sh_dc[a] += s.sh_dc[a] as f64;
            }
            mean_opacity += s.opacity_linear();
            let spectrum = hsfh::sh_power_spectrum(s);
            for (acc, x) in mean_power.iter_mut().zip(&spectrum) {
                *acc += x;
            }
        }
        for a in 0..3 {
            centroid[a] *= inv;
            mean_sh_dc[a] *= inv;
        }
        mean_opacity *= inv;
        for x in mean_power.iter_mut() {
            *x *= inv;
        }
        VoxelRecord {
            centroid,
            mean_opacity,
            mean_sh_dc,
            mean_power_spectrum: mean_power,
            member_ids: ids.clone(),
        }
    });

    let centroids: Vec<[f64; 3]> = representatives.iter().map(|r| r.centroid).collect();
    let interp = build_interp(&positions, &centroids, interp_m, voxel_size);

    Ok(VoxelMapping {
        voxel_size,
        representatives,
        splat_to_voxel,
        interp,
    })
}

/// Inverse-distance weights over the `m` nearest voxel representatives.
fn build_interp(
    positions: &[[f64; 3]],
    centroids: &[[f64; 3]],
    m: usize,
    voxel_size: f64,
) -> Vec<SmallVec<[(u32, f64); 4]>> {
    let tree = KdTree::new(centroids);
    let m = m.max(1).min(centroids.len());
    let eps = 1e-9 * voxel_size;
    parallel::map_indexed(positions.len(), |i| {
        let hits = tree.knn(&positions[i], m);
        let mut pairs: SmallVec<[(u32, f64); 4]> = SmallVec::with_capacity(hits.len());
        let mut total = 0.0;
        for (v, d) in &hits {
            let w = 1.0 / (d + eps);
            total += w;
            pairs.push((*v, w));
        }
        for p in pairs.iter_mut() {
            p.1 /= total;
        }
        pairs
    })
}

/// Exact k nearest neighbors of `query` among `points`, ascending by
/// distance with index tie-break. One-shot convenience over [`KdTree`].
pub fn knn(points: &[[f64; 3]], query: &[f64; 3], k: usize) -> Result<Vec<Neighbor>, SpatialError> {
    if k < 1 || k > points.len() {
        return Err(SpatialError::KTooLarge {
            k,
            available: points.len(),
        });
    }
    Ok(KdTree::new(points).knn(query, k))
}

/// As [`knn`] from a point's own position, excluding itself by index.
pub fn knn_from(
    points: &[[f64; 3]],
    query_index: usize,
    k: usize,
) -> Result<Vec<Neighbor>, SpatialError> {
    if k < 1 || k + 1 > points.len() {
        return Err(SpatialError::KTooLarge {
            k,
            available: points.len().saturating_sub(1),
        });
    }
    Ok(KdTree::new(points).knn_excluding(&points[query_index], k, query_index as u32))
}

/// Per-voxel neighbor sets over representative centroids, self excluded.
/// `k` is clamped to `voxel_count - 1`; a single-voxel scene gets empty sets.
pub fn voxel_knn_sets(mapping: &VoxelMapping, k: usize) -> Vec<Vec<Neighbor>> {
    let centroids = mapping.centroids();
    let v = centroids.len();
    let k = k.min(v.saturating_sub(1));
    if k == 0 {
        return alloc::vec![Vec::new(); v];
    }
    let tree = KdTree::new(&centroids);
    parallel::map_indexed(v, |i| tree.knn_excluding(&centroids[i], k, i as u32))
}

/// Carry one per-voxel value to every splat through the stored weights.
pub fn interpolate_to_splats(
    voxel_values: &[f64],
    mapping: &VoxelMapping,
) -> Result<Vec<f64>, SpatialError> {
    if voxel_values.len() != mapping.voxel_count() {
        return Err(SpatialError::LengthMismatch {
            expected: mapping.voxel_count(),
            got: voxel_values.len(),
        });
    }
    Ok(parallel::map_indexed(mapping.interp.len(), |i| {
        mapping.interp[i]
            .iter()
            .map(|&(v, w)| w * voxel_values[v as usize])
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::{GaussianSplat, SplatScene};
    use alloc::vec;

    fn scene_at(points: &[[f32; 3]]) -> SplatScene {
        scene_with(points, |_| (2.0, [0.3, 0.3, 0.3]))
    }

    fn scene_with(
        points: &[[f32; 3]],
        attrs: impl Fn(usize) -> (f32, [f32; 3]),
    ) -> SplatScene {
        let splats = points
            .iter()
            .enumerate()
            .map(|(i, &position)| {
                let (opacity_logit, sh_dc) = attrs(i);
                GaussianSplat {
                    position,
                    scale_log: [-3.0; 3],
                    rotation: [1.0, 0.0, 0.0, 0.0],
                    opacity_logit,
                    sh_dc,
                    sh_rest: vec![],
                    extra: vec![],
                }
            })
            .collect();
        SplatScene {
            splats,
            sh_degree: 0,
            property_order: vec![],
        }
    }

    #[test]
    fn bbox_two_points_diagonal() {
        let scene = scene_at(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        let bb = bbox(&scene).unwrap();
        assert!((bb.diagonal() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bbox_cube_corners() {
        let mut pts = Vec::new();
        for x in [0.0, 2.0] {
            for y in [0.0, 2.0] {
                for z in [0.0, 2.0] {
                    pts.push([x, y, z]);
                }
            }
        }
        let scene = scene_at(&pts);
        let bb = bbox(&scene).unwrap();
        assert!((bb.diagonal() - 2.0 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bbox_empty_scene_errors() {
        let scene = scene_at(&[]);
        assert_eq!(bbox(&scene), Err(SpatialError::EmptyScene));
    }

    #[test]
    fn degenerate_bbox_uses_fallback_voxel_size() {
        let scene = scene_at(&[[5.0, 5.0, 5.0]]);
        let m = voxel_downsample(&scene, 0.015).unwrap();
        assert_eq!(m.voxel_size, DEGENERATE_VOXEL_SIZE);
        assert_eq!(m.voxel_count(), 1);
        assert_eq!(m.representatives[0].member_count(), 1);
    }

    #[test]
    fn cube_cluster_collapses_to_single_voxel() {
        // Eight corners of a small cube, plus one far point that stretches
        // the bounding box until one voxel swallows the whole cluster. The
        // representative centroid is the unweighted corner mean.
        let mut pts: Vec<[f32; 3]> = Vec::new();
        for x in [0.0f32, 0.01] {
            for y in [0.0f32, 0.01] {
                for z in [0.0f32, 0.01] {
                    pts.push([x, y, z]);
                }
            }
        }
        pts.push([1.0, 0.0, 0.0]);
        let scene = scene_at(&pts);
        let m = voxel_downsample(&scene, 0.1).unwrap();
        let cluster_voxel = m.splat_to_voxel[0];
        for i in 0..8 {
            assert_eq!(m.splat_to_voxel[i], cluster_voxel);
        }
        let rec = &m.representatives[cluster_voxel as usize];
        assert_eq!(rec.member_count(), 8);
        for a in 0..3 {
            assert!((rec.centroid[a] - 0.005).abs() < 1e-9);
        }
        let total: usize = m.representatives.iter().map(|r| r.member_count()).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn far_apart_points_get_own_voxels() {
        let scene = scene_at(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]);
        let m = voxel_downsample(&scene, 0.05).unwrap();
        assert_eq!(m.voxel_count(), 2);
        assert_eq!(m.representatives[0].member_count(), 1);
        assert_eq!(m.representatives[1].member_count(), 1);
    }

    #[test]
    fn member_counts_sum_to_scene_size() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<[f32; 3]> = (0..1000)
            .map(|_| {
                [
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-4.0..4.0),
                ]
            })
            .collect();
        let scene = scene_at(&pts);
        let m = voxel_downsample(&scene, 0.02).unwrap();
        let total: usize = m.representatives.iter().map(|r| r.member_count()).sum();
        assert_eq!(total, 1000);
        for (i, &v) in m.splat_to_voxel.iter().enumerate() {
            assert!(m.representatives[v as usize]
                .member_ids
                .contains(&(i as u32)));
        }
    }

    #[test]
    fn invalid_fraction_rejected() {
        let scene = scene_at(&[[0.0; 3], [1.0, 0.0, 0.0]]);
        assert!(matches!(
            voxel_downsample(&scene, 0.0),
            Err(SpatialError::InvalidFraction)
        ));
        assert!(matches!(
            voxel_downsample(&scene, 0.2),
            Err(SpatialError::InvalidFraction)
        ));
    }

    #[test]
    fn translation_covariant_partition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<[f32; 3]> = (0..300)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let shifted: Vec<[f32; 3]> = pts
            .iter()
            .map(|p| [p[0] + 13.25, p[1] - 7.5, p[2] + 0.125])
            .collect();
        let m1 = voxel_downsample(&scene_at(&pts), 0.02).unwrap();
        let m2 = voxel_downsample(&scene_at(&shifted), 0.02).unwrap();
        assert_eq!(m1.splat_to_voxel, m2.splat_to_voxel);
        for (a, b) in m1.representatives.iter().zip(&m2.representatives) {
            assert_eq!(a.member_ids, b.member_ids);
        }
    }

    #[test]
    fn interpolation_partition_of_unity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<[f32; 3]> = (0..400)
            .map(|_| {
                [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ]
            })
            .collect();
        let scene = scene_at(&pts);
        let m = voxel_downsample(&scene, 0.03).unwrap();
        let c = 0.7318;
        let field = vec![c; m.voxel_count()];
        let out = interpolate_to_splats(&field, &m).unwrap();
        for x in out {
            assert!((x - c).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_equidistant_symmetry() {
        // Two voxels with values 0 and 1; a point exactly between their
        // centroids receives 0.5.
        let scene = scene_at(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]);
        let m = voxel_downsample_m(&scene, 0.05, 2).unwrap();
        assert_eq!(m.voxel_count(), 2);
        let vals = [0.0, 1.0];
        let w = super::build_interp(&[[5.0, 0.0, 0.0]], &m.centroids(), 2, m.voxel_size);
        let got: f64 = w[0].iter().map(|&(v, wt)| wt * vals[v as usize]).sum();
        assert!((got - 0.5).abs() < 1e-9);
    }

    #[test]
    fn interpolation_at_centroid_matches_voxel_value() {
        let scene = scene_at(&[[1.0, 2.0, 3.0]]);
        let m = voxel_downsample(&scene, 0.015).unwrap();
        let out = interpolate_to_splats(&[0.42], &m).unwrap();
        assert!((out[0] - 0.42).abs() < 1e-12);
    }

    #[test]
    fn interpolation_length_mismatch() {
        let scene = scene_at(&[[0.0; 3], [5.0, 0.0, 0.0]]);
        let m = voxel_downsample(&scene, 0.05).unwrap();
        assert!(matches!(
            interpolate_to_splats(&[1.0], &m),
            Err(SpatialError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn knn_errors_and_self_exclusion() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(matches!(
            knn(&pts, &[0.0; 3], 4),
            Err(SpatialError::KTooLarge { .. })
        ));
        let hits = knn_from(&pts, 1, 2).unwrap();
        assert_eq!(hits[0].0, 0);
        assert_eq!(hits[1].0, 2);
    }
}
