use super::chain::KinematicChain;
use crate::geometry::{Mat3, Transform, Vec3};
use crate::rng::SplitMix64;

pub const WORKSPACE_SAMPLES: usize = 10_000;
/// A point is inside the sampled workspace if some sample lies this close.
pub const WORKSPACE_RADIUS: f64 = 0.06;

#[derive(Clone, Debug)]
pub struct WorkspaceSample {
    pub q: Vec<f64>,
    /// End-effector position in the torso frame.
    pub position: Vec3,
    pub rotation: Mat3,
}

/// FK-sampled arm workspace. Sample 0 is the rest configuration.
#[derive(Clone, Debug)]
pub struct Workspace {
    samples: Vec<WorkspaceSample>,
    max_radius: f64,
    origin: Vec3,
}

impl Workspace {
    pub fn sample(chain: &KinematicChain, seed: u64) -> Workspace {
        let mut rng = SplitMix64::new(seed);
        let eval = |q: Vec<f64>| {
            let t = chain.compose(&q, &Transform::identity(), |_| {});
            WorkspaceSample { q, position: t.translation(), rotation: t.rotation() }
        };
        let mut samples = Vec::with_capacity(WORKSPACE_SAMPLES);
        samples.push(eval(chain.rest.clone()));
        while samples.len() < WORKSPACE_SAMPLES {
            let q = chain.links.iter().map(|l| rng.uniform(l.limits[0], l.limits[1])).collect();
            samples.push(eval(q));
        }
        let origin = Vec3::from(chain.base_offset.position);
        let max_radius = samples.iter().map(|s| (s.position - origin).norm()).fold(0.0, f64::max);
        Workspace { samples, max_radius, origin }
    }

    pub fn samples(&self) -> &[WorkspaceSample] {
        &self.samples
    }

    /// Nearest sample (lowest index on ties) within [`WORKSPACE_RADIUS`].
    pub fn nearest_within(&self, p: &Vec3) -> Option<(usize, f64)> {
        if (p - self.origin).norm() > self.max_radius + WORKSPACE_RADIUS {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in self.samples.iter().enumerate() {
            let d = (s.position - p).norm_squared();
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        best.map(|(i, d)| (i, d.sqrt())).filter(|&(_, d)| d <= WORKSPACE_RADIUS)
    }

    /// Up to `k` samples within [`WORKSPACE_RADIUS`], nearest first.
    pub fn nearest_k_within(&self, p: &Vec3, k: usize) -> Vec<(usize, f64)> {
        if (p - self.origin).norm() > self.max_radius + WORKSPACE_RADIUS {
            return vec![];
        }
        let r2 = WORKSPACE_RADIUS * WORKSPACE_RADIUS;
        let mut hits: Vec<(usize, f64)> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, (s.position - p).norm_squared()))
            .filter(|&(_, d)| d <= r2)
            .collect();
        hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        hits.into_iter().map(|(i, d)| (i, d.sqrt())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{Embodiment, RobotModel};

    #[test]
    fn rest_pose_is_inside() {
        let m = RobotModel::builtin(Embodiment::X1);
        let ws = Workspace::sample(&m.right, 1);
        let rest = m.right.forward_kinematics(&m.right.rest).unwrap().translation();
        assert_eq!(ws.nearest_within(&rest), Some((0, 0.0)));
    }

    #[test]
    fn far_point_is_outside() {
        let m = RobotModel::builtin(Embodiment::X1);
        let ws = Workspace::sample(&m.right, 1);
        assert!(ws.nearest_within(&Vec3::new(3.0, 0.0, 0.0)).is_none());
    }
}
