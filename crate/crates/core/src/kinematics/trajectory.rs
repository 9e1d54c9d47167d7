use serde::{Deserialize, Serialize};

use super::KinematicsError;

pub const DEFAULT_WAYPOINTS: usize = 20;
/// Largest change of any coordinate between consecutive waypoints.
pub const DEFAULT_STEP_BOUND: f64 = 0.1;

/// Joint-space path over full configurations (`[left.., right.., lift]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Vec<f64>>,
    pub ticks_per_waypoint: u32,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn ticks(&self) -> u64 {
        self.waypoints.len() as u64 * self.ticks_per_waypoint as u64
    }

    pub fn max_step(&self) -> f64 {
        self.waypoints
            .windows(2)
            .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Cubic ease-in/ease-out time scaling `3t^2 - 2t^3`.
pub fn ease(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn max_step_for(delta: f64, n: usize) -> f64 {
    let steps = (n - 1) as f64;
    (1..n).map(|k| ease(k as f64 / steps) - ease((k - 1) as f64 / steps)).fold(0.0, f64::max) * delta
}

/// Interpolate from `start` to `goal` with `n` waypoints, raising `n` until
/// no coordinate moves more than `step_bound` between waypoints.
pub fn interpolate_trajectory(start: &[f64], goal: &[f64], n: usize, step_bound: f64) -> Result<Trajectory, KinematicsError> {
    if n < 2 {
        return Err(KinematicsError::WaypointCount(n));
    }
    if start.len() != goal.len() {
        return Err(KinematicsError::DimensionMismatch { expected: start.len(), got: goal.len() });
    }
    let delta = start.iter().zip(goal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut n = n;
    if delta > 0.0 && step_bound > 0.0 {
        // peak slope of the ease curve is 1.5
        n = n.max((1.5 * delta / step_bound).ceil() as usize + 1);
        while max_step_for(delta, n) > step_bound {
            n += 1;
        }
    }
    let steps = (n - 1) as f64;
    let mut waypoints = Vec::with_capacity(n);
    waypoints.push(start.to_vec());
    for k in 1..n - 1 {
        let s = ease(k as f64 / steps);
        waypoints.push(start.iter().zip(goal).map(|(a, b)| a + s * (b - a)).collect());
    }
    waypoints.push(goal.to_vec());
    Ok(Trajectory { waypoints, ticks_per_waypoint: 1 })
}
