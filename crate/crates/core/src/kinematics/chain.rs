use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::KinematicsError;
use crate::geometry::{rotation_about, Pose, Transform, Vec3};

/// One revolute joint followed by a rigid offset to the next joint frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub axis: [f64; 3],
    pub offset: [f64; 3],
    pub limits: [f64; 2],
    /// Point mass placed at the midpoint of `offset`.
    #[serde(default)]
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub links: Vec<Link>,
    /// Mount of the first joint relative to the torso frame.
    pub base_offset: Pose,
    /// Maximum mass one arm may carry alone (kg).
    pub payload_limit: f64,
    /// Resting configuration, used at scene load.
    pub rest: Vec<f64>,
}

/// Per-joint world data produced while composing the chain.
pub(crate) struct JointFrame {
    pub origin: Vec3,
    pub axis: Vec3,
    pub link_end: Vec3,
}

impl KinematicChain {
    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.links.len() < 6 {
            return Err(KinematicsError::InvalidChain(format!("{} joints, need at least 6", self.links.len())));
        }
        for (i, l) in self.links.iter().enumerate() {
            let n = Vec3::from(l.axis).norm();
            if (n - 1.0).abs() > 1e-9 {
                return Err(KinematicsError::InvalidChain(format!("joint {i} axis is not unit length")));
            }
            if l.limits[0] > l.limits[1] {
                return Err(KinematicsError::InvalidChain(format!("joint {i} has lo > hi")));
            }
            if !l.offset.iter().all(|v| v.is_finite()) || !l.mass.is_finite() || l.mass < 0.0 {
                return Err(KinematicsError::InvalidChain(format!("joint {i} has a non-finite offset or mass")));
            }
        }
        if self.rest.len() != self.links.len() || !self.within_limits(&self.rest) {
            return Err(KinematicsError::InvalidChain("rest configuration outside limits".into()));
        }
        Ok(())
    }

    pub fn check_dim(&self, q: &[f64]) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch { expected: self.dof(), got: q.len() });
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof() && self.links.iter().zip(q).all(|(l, &v)| v >= l.limits[0] && v <= l.limits[1])
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (l, v) in self.links.iter().zip(q.iter_mut()) {
            *v = v.clamp(l.limits[0], l.limits[1]);
        }
    }

    /// End-effector transform in the torso frame.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Transform, KinematicsError> {
        self.check_dim(q)?;
        Ok(self.compose(q, &Transform::identity(), |_| {}))
    }

    /// Compose `mount * base_offset * prod(R_i(q_i) * T_i)`, calling `visit`
    /// with each joint's frame data.
    pub(crate) fn compose(&self, q: &[f64], mount: &Transform, mut visit: impl FnMut(JointFrame)) -> Transform {
        let mut t = mount.compose(&self.base_offset.to_transform());
        for (link, &angle) in self.links.iter().zip(q) {
            let axis_local = Vec3::from(link.axis);
            let origin = t.translation();
            let axis = t.rotation() * axis_local;
            let joint = Transform::from_parts(&rotation_about(&axis_local, angle), &Vec3::zeros());
            t = t.compose(&joint).compose(&Transform::translation_only(&Vec3::from(link.offset)));
            visit(JointFrame { origin, axis, link_end: t.translation() });
        }
        t
    }

    /// Geometric Jacobian (6 x dof, linear rows first) with the end effector
    /// expressed under `mount`.
    pub(crate) fn jacobian(&self, q: &[f64], mount: &Transform) -> (Transform, DMatrix<f64>) {
        let mut frames = Vec::with_capacity(self.dof());
        let ee = self.compose(q, mount, |f| frames.push(f));
        let p = ee.translation();
        let mut j = DMatrix::zeros(6, self.dof());
        for (i, f) in frames.iter().enumerate() {
            let lin = f.axis.cross(&(p - f.origin));
            for r in 0..3 {
                j[(r, i)] = lin[r];
                j[(r + 3, i)] = f.axis[r];
            }
        }
        (ee, j)
    }

    /// Sum of link lengths, an upper bound on the reach from the first joint.
    pub fn reach(&self) -> f64 {
        self.links.iter().map(|l| Vec3::from(l.offset).norm()).sum()
    }

    /// Mirror image across the sagittal (x-z) plane. Joint angles keep their
    /// meaning: `mirror.fk(q) = M * fk(q) * M` with `M = diag(1, -1, 1)`.
    pub fn mirrored(&self) -> KinematicChain {
        let reflect = |v: [f64; 3]| [v[0], -v[1], v[2]];
        let links = self
            .links
            .iter()
            .map(|l| Link {
                // axial vectors pick up the reflection's determinant
                axis: [-l.axis[0], l.axis[1], -l.axis[2]],
                offset: reflect(l.offset),
                limits: l.limits,
                mass: l.mass,
            })
            .collect();
        let r = self.base_offset.orientation.to_matrix();
        let m = nalgebra::Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0));
        let base_offset = Pose {
            position: reflect(self.base_offset.position),
            orientation: crate::geometry::Quat::from_matrix(&(m * r * m)),
        };
        KinematicChain { links, base_offset, payload_limit: self.payload_limit, rest: self.rest.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn one_joint() -> KinematicChain {
        KinematicChain {
            links: vec![Link { axis: [0.0, 0.0, 1.0], offset: [1.0, 0.0, 0.0], limits: [-3.0, 3.0], mass: 0.0 }],
            base_offset: Pose::at([0.0; 3]),
            payload_limit: 1.0,
            rest: vec![0.0],
        }
    }

    #[test]
    fn single_revolute_quarter_turn() {
        let t = one_joint().forward_kinematics(&[FRAC_PI_2]).unwrap();
        assert!((t.translation() - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_configuration_is_static_offsets() {
        let chain = crate::kinematics::RobotModel::builtin(crate::kinematics::Embodiment::X1).right.clone();
        let q = vec![0.0; chain.dof()];
        let t = chain.forward_kinematics(&q).unwrap();
        let mut expected = Vec3::from(chain.base_offset.position);
        for l in &chain.links {
            expected += Vec3::from(l.offset);
        }
        assert!((t.translation() - expected).norm() < 1e-12);
        assert!((t.rotation() - nalgebra::Matrix3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            one_joint().forward_kinematics(&[0.0, 1.0]),
            Err(KinematicsError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn mirror_reflects_fk() {
        let chain = crate::kinematics::RobotModel::builtin(crate::kinematics::Embodiment::H1).right.clone();
        let mirror = chain.mirrored();
        let q = [0.4, -0.3, 0.7, -1.1, 0.2, 0.5, -0.4];
        let a = chain.forward_kinematics(&q).unwrap().0;
        let b = mirror.forward_kinematics(&q).unwrap().0;
        let m = nalgebra::Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, 1.0));
        assert!((m * a * m - b).abs().max() < 1e-12);
    }
}
