//! Rigid-body primitives shared by the world and kinematics modules.
//!
//! Trigonometry goes through `libm` so that replay is bit-identical across
//! platforms; `std` trig defers to the system math library.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Rotation of `angle` radians about unit `axis` (Rodrigues).
pub fn rotation_about(axis: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    let t = 1.0 - c;
    let (x, y, z) = (axis.x, axis.y, axis.z);
    Mat3::new(
        c + x * x * t,
        x * y * t - z * s,
        x * z * t + y * s,
        y * x * t + z * s,
        c + y * y * t,
        y * z * t - x * s,
        z * x * t - y * s,
        z * y * t + x * s,
        c + z * z * t,
    )
}

/// Rotation vector (axis * angle) of `r`.
pub fn rotation_log(r: &Mat3) -> Vec3 {
    let w = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let sin_norm = w.norm();
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let angle = libm::atan2(sin_norm, cos);
    if sin_norm > 1e-9 {
        return w * (angle / sin_norm);
    }
    if cos > 0.0 {
        // Near identity: first-order expansion, angle ~= |w|.
        return w;
    }
    // Near a half turn: axis from the symmetric part.
    let b = (r + Mat3::identity()) * 0.5;
    let diag = [b[(0, 0)], b[(1, 1)], b[(2, 2)]];
    let k = (0..3).fold(0, |best, i| if diag[i] > diag[best] { i } else { best });
    let mut axis = Vec3::new(b[(0, k)], b[(1, k)], b[(2, k)]);
    axis /= axis.norm();
    axis * angle
}

/// Angle of the relative rotation between `a` and `b`.
pub fn rotation_distance(a: &Mat3, b: &Mat3) -> f64 {
    rotation_log(&(a * b.transpose())).norm()
}

pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    let ortho = (r * r.transpose() - Mat3::identity()).abs().max() < tol;
    ortho && (r.determinant() - 1.0).abs() < tol
}

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quat {
    fn from(v: [f64; 4]) -> Self {
        Quat { w: v[0], x: v[1], y: v[2], z: v[3] }
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Quat {
        let n = self.norm();
        Quat { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn from_yaw(yaw: f64) -> Quat {
        let h = yaw * 0.5;
        Quat { w: libm::cos(h), x: 0.0, y: 0.0, z: libm::sin(h) }
    }

    /// Shepperd's method; result is normalized with non-negative `w`.
    pub fn from_matrix(m: &Mat3) -> Quat {
        let tr = m.trace();
        let q = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            Quat {
                w: 0.25 * s,
                x: (m[(2, 1)] - m[(1, 2)]) / s,
                y: (m[(0, 2)] - m[(2, 0)]) / s,
                z: (m[(1, 0)] - m[(0, 1)]) / s,
            }
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Quat {
                w: (m[(2, 1)] - m[(1, 2)]) / s,
                x: 0.25 * s,
                y: (m[(0, 1)] + m[(1, 0)]) / s,
                z: (m[(0, 2)] + m[(2, 0)]) / s,
            }
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Quat {
                w: (m[(0, 2)] - m[(2, 0)]) / s,
                x: (m[(0, 1)] + m[(1, 0)]) / s,
                y: 0.25 * s,
                z: (m[(1, 2)] + m[(2, 1)]) / s,
            }
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Quat {
                w: (m[(1, 0)] - m[(0, 1)]) / s,
                x: (m[(0, 2)] + m[(2, 0)]) / s,
                y: (m[(1, 2)] + m[(2, 1)]) / s,
                z: 0.25 * s,
            }
        };
        let q = q.normalized();
        if q.w < 0.0 {
            Quat { w: -q.w, x: -q.x, y: -q.y, z: -q.z }
        } else {
            q
        }
    }

    pub fn to_matrix(&self) -> Mat3 {
        let Quat { w, x, y, z } = *self;
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

/// Position (meters) plus orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    #[serde(default = "identity_quat")]
    pub orientation: Quat,
}

fn identity_quat() -> Quat {
    Quat::IDENTITY
}

impl Pose {
    pub fn at(position: [f64; 3]) -> Pose {
        Pose { position, orientation: Quat::IDENTITY }
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::from(self.position)
    }

    pub fn to_transform(&self) -> Transform {
        Transform::from_parts(&self.orientation.to_matrix(), &self.translation())
    }
}

/// 4x4 homogeneous rigid transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform(pub Matrix4<f64>);

impl Transform {
    pub fn identity() -> Self {
        Transform(Matrix4::identity())
    }

    pub fn from_parts(rotation: &Mat3, translation: &Vec3) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(translation);
        Transform(m)
    }

    pub fn translation_only(t: &Vec3) -> Self {
        Self::from_parts(&Mat3::identity(), t)
    }

    pub fn rotation(&self) -> Mat3 {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vec3 {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn compose(&self, other: &Transform) -> Transform {
        Transform(self.0 * other.0)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p + self.translation()
    }

    /// Rotation block orthonormal with unit determinant and a `[0,0,0,1]` last row.
    pub fn is_valid(&self, tol: f64) -> bool {
        let row = self.0.row(3);
        let last_row_ok = row[0].abs() < tol && row[1].abs() < tol && row[2].abs() < tol && (row[3] - 1.0).abs() < tol;
        last_row_ok && is_rotation(&self.rotation(), tol) && self.0.iter().all(|v| v.is_finite())
    }

    pub fn to_pose(&self) -> Pose {
        let t = self.translation();
        Pose { position: [t.x, t.y, t.z], orientation: Quat::from_matrix(&self.rotation()) }
    }
}

/// Even-odd point-in-polygon test; points on an edge count as inside.
pub fn point_in_polygon(p: [f64; 2], polygon: &[[f64; 2]]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        // on-segment check
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let within = p[0] >= a[0].min(b[0]) - 1e-12
            && p[0] <= a[0].max(b[0]) + 1e-12
            && p[1] >= a[1].min(b[1]) - 1e-12
            && p[1] <= a[1].max(b[1]) + 1e-12;
        if cross.abs() < 1e-12 && within {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}
