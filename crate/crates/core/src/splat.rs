//! Gaussian splat primitives in their stored (pre-activation) form, plus the
//! activations that turn them into usable quantities: sigmoid opacity,
//! exponentiated scales, and the full 3x3 covariance.
//!
//! Stored fields are kept as `f32` exactly as they appear in the source file
//! so a scene can be written back bit-for-bit. All derived math is `f64`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

/// Number of higher-degree SH scalars for degree `l` (3 channels).
#[inline]
pub fn sh_rest_len(sh_degree: u8) -> usize {
    let n = (sh_degree as usize + 1) * (sh_degree as usize + 1);
    3 * (n - 1)
}

/// Infer the SH degree from the number of `f_rest_*` scalars, if valid.
#[inline]
pub fn sh_degree_from_rest_len(len: usize) -> Option<u8> {
    match len {
        0 => Some(0),
        9 => Some(1),
        24 => Some(2),
        45 => Some(3),
        _ => None,
    }
}

/// One Gaussian primitive, fields in stored form.
///
/// `rotation` is the raw `(w, x, y, z)` quaternion as stored, not necessarily
/// unit length; use [`GaussianSplat::rotation_normalized`] for computation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSplat {
    pub position: [f32; 3],
    /// Log of the per-axis standard deviation.
    pub scale_log: [f32; 3],
    /// Quaternion `(w, x, y, z)`, unnormalized as stored.
    pub rotation: [f32; 4],
    /// Pre-sigmoid opacity.
    pub opacity_logit: f32,
    /// Degree-0 SH coefficient per color channel (`f_dc_0..2`).
    pub sh_dc: [f32; 3],
    /// Higher-degree SH coefficients, channel-major (`f_rest_*`).
    pub sh_rest: Vec<f32>,
    /// Values of unrecognized properties, preserved for round-tripping in
    /// the order they appear in the scene's property list.
    pub extra: Vec<f32>,
}

impl GaussianSplat {
    /// Activated opacity `1 / (1 + exp(-logit))` in `[0, 1]`.
    pub fn opacity_linear(&self) -> f64 {
        sigmoid(self.opacity_logit as f64)
    }

    /// Unit quaternion `(w, x, y, z)`; identity if the stored norm is zero.
    pub fn rotation_normalized(&self) -> [f64; 4] {
        let q = [
            self.rotation[0] as f64,
            self.rotation[1] as f64,
            self.rotation[2] as f64,
            self.rotation[3] as f64,
        ];
        let n = math::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        if n > 0.0 {
            [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
        } else {
            [1.0, 0.0, 0.0, 0.0]
        }
    }

    /// Rotation matrix of the normalized quaternion, columns are the rotated axes.
    pub fn rotation_matrix(&self) -> [[f64; 3]; 3] {
        quat_to_matrix(self.rotation_normalized())
    }

    /// Covariance `R diag(exp(scale_log))^2 R^T`.
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let r = self.rotation_matrix();
        let s2 = [
            math::exp(2.0 * self.scale_log[0] as f64),
            math::exp(2.0 * self.scale_log[1] as f64),
            math::exp(2.0 * self.scale_log[2] as f64),
        ];
        let mut cov = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for (k, sk) in s2.iter().enumerate() {
                    acc += r[i][k] * sk * r[j][k];
                }
                cov[i][j] = acc;
            }
        }
        cov
    }

    pub fn position_f64(&self) -> [f64; 3] {
        [
            self.position[0] as f64,
            self.position[1] as f64,
            self.position[2] as f64,
        ]
    }

    pub fn sh_dc_f64(&self) -> [f64; 3] {
        [
            self.sh_dc[0] as f64,
            self.sh_dc[1] as f64,
            self.sh_dc[2] as f64,
        ]
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn quat_to_matrix(q: [f64; 4]) -> [[f64; 3]; 3] {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// An ordered splat collection sharing one SH degree.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatScene {
    pub splats: Vec<GaussianSplat>,
    pub sh_degree: u8,
    /// Vertex property names in source order, preserved so the scene can be
    /// written back with the original layout.
    pub property_order: Vec<String>,
}

impl SplatScene {
    pub fn len(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    /// Positions as `f64` for geometric work.
    pub fn positions_f64(&self) -> Vec<[f64; 3]> {
        self.splats.iter().map(|s| s.position_f64()).collect()
    }

    /// Activated per-splat opacities.
    pub fn opacities_linear(&self) -> Vec<f64> {
        self.splats.iter().map(|s| s.opacity_linear()).collect()
    }

    /// New scene containing exactly the splats at `ids`, in the given order.
    /// Stored fields are moved over untouched, so the survivors' bytes are
    /// identical to the source.
    pub fn subset(&self, ids: &[u32]) -> SplatScene {
        SplatScene {
            splats: ids.iter().map(|&i| self.splats[i as usize].clone()).collect(),
            sh_degree: self.sh_degree,
            property_order: self.property_order.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn splat_with(rotation: [f32; 4], scale_log: [f32; 3]) -> GaussianSplat {
        GaussianSplat {
            position: [0.0; 3],
            scale_log,
            rotation,
            opacity_logit: 0.0,
            sh_dc: [0.0; 3],
            sh_rest: Vec::new(),
            extra: Vec::new(),
        }
    }

    #[test]
    fn opacity_midpoint_and_saturation() {
        let mut s = splat_with([1.0, 0.0, 0.0, 0.0], [0.0; 3]);
        assert_eq!(s.opacity_linear(), 0.5);
        s.opacity_logit = 50.0;
        assert!((s.opacity_linear() - 1.0).abs() < 1e-12);
        s.opacity_logit = -50.0;
        assert!(s.opacity_linear() < 1e-12);
    }

    #[test]
    fn opacity_inverse_sigmoid_check() {
        // logit(0.1) = ln(0.1/0.9) = -2.1972...
        let mut s = splat_with([1.0, 0.0, 0.0, 0.0], [0.0; 3]);
        s.opacity_logit = -2.1972;
        assert!((s.opacity_linear() - 0.1).abs() < 1e-4);
    }

    #[test]
    fn covariance_identity_and_axis_scale() {
        let s = splat_with([1.0, 0.0, 0.0, 0.0], [0.0; 3]);
        let c = s.covariance();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c[i][j] - want).abs() < 1e-12);
            }
        }

        let s = splat_with([1.0, 0.0, 0.0, 0.0], [core::f32::consts::LN_2, 0.0, 0.0]);
        let c = s.covariance();
        assert!((c[0][0] - 4.0).abs() < 1e-6);
        assert!((c[1][1] - 1.0).abs() < 1e-12);
        assert!((c[2][2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_eigenvalues_match_scales() {
        // Eigen-decomposition oracle: eigenvalues of the covariance are the
        // squared exponentiated scales, for an arbitrary rotation.
        let q = [0.3f32, -0.5, 0.7, 0.2];
        let scale_log = [0.25f32, -0.8, 0.4];
        let s = splat_with(q, scale_log);
        let c = s.covariance();

        let m = nalgebra::Matrix3::from_fn(|i, j| c[i][j]);
        let sym = nalgebra::SymmetricEigen::new(m);
        let mut got: Vec<f64> = sym.eigenvalues.iter().copied().collect();
        let mut want: Vec<f64> = scale_log
            .iter()
            .map(|&l| (2.0 * l as f64).exp())
            .collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "eigenvalue {g} vs scale {w}");
        }

        // Reconstruction check: symmetric within 1e-9.
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[i][j] - c[j][i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quaternion_normalization_preserves_rotation() {
        // The matrix of q and of 3.7*q must agree once q is normalized.
        let s1 = splat_with([0.3, -0.5, 0.7, 0.2], [0.0; 3]);
        let s2 = splat_with([1.11, -1.85, 2.59, 0.74], [0.0; 3]);
        let (m1, m2) = (s1.rotation_matrix(), s2.rotation_matrix());
        for i in 0..3 {
            for j in 0..3 {
                assert!((m1[i][j] - m2[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn subset_preserves_fields_and_order() {
        let mut splats = Vec::new();
        for i in 0..10 {
            let mut s = splat_with([1.0, 0.0, 0.0, 0.0], [0.0; 3]);
            s.position = [i as f32, 0.0, 0.0];
            splats.push(s);
        }
        let scene = SplatScene {
            splats,
            sh_degree: 0,
            property_order: Vec::new(),
        };
        let sub = scene.subset(&[1, 4, 7]);
        assert_eq!(sub.len(), 3);
        assert_eq!(sub.splats[0].position[0], 1.0);
        assert_eq!(sub.splats[1].position[0], 4.0);
        assert_eq!(sub.splats[2].position[0], 7.0);
    }
}
