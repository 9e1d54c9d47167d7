//! Proprioceptive motion features: joint-position frames, a vector-quantized
//! linear motion tokenizer trained with EMA codebook updates, and the
//! motion-based position embedding of observation tokens.

mod matrix;
mod mpe;
mod quantizer;

use serde::{Deserialize, Serialize};

use crate::kinematics::Trajectory;

pub use mpe::{mpe_grid, mpe_index, MpeIndex};
pub use quantizer::{
    ema_update, quantize, train_quantizer, vqvae_gradients, vqvae_loss, Codebook, Gradients, LinearAutoencoder, LossTerms,
    TrainConfig, TrainedQuantizer, DEFAULT_CODEBOOK_SIZE, DEFAULT_DECAY, DEFAULT_LATENT_DIM, EMA_EPSILON,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProprioError {
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("training diverged at epoch {epoch}")]
    NonFinite { epoch: usize },
}

/// `T x d` joint-position frames, one row per waypoint. Columns follow the
/// full configuration order: left arm joints, right arm joints, torso lift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionFeature {
    pub frames: Vec<Vec<f64>>,
}

impl MotionFeature {
    pub fn new(frames: Vec<Vec<f64>>) -> Result<MotionFeature, ProprioError> {
        let d = frames.first().ok_or(ProprioError::EmptyTrajectory)?.len();
        for f in &frames {
            if f.len() != d {
                return Err(ProprioError::Dimension { expected: d, got: f.len() });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(ProprioError::Argument("non-finite joint value".into()));
            }
        }
        Ok(MotionFeature { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }
}

pub fn extract_motion_feature(traj: &Trajectory) -> Result<MotionFeature, ProprioError> {
    MotionFeature::new(traj.waypoints.clone())
}

