//! Deterministic simulator and benchmark harness for bimanual humanoid
//! household planning.

pub mod contingency;
pub mod episode;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod planner;
pub mod proprio;
pub mod protocol;
pub mod rng;
pub mod tasks;
pub mod world;
