use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{matrix, MotionFeature, ProprioError};
use crate::rng::SplitMix64;

pub const DEFAULT_LATENT_DIM: usize = 8;
pub const DEFAULT_CODEBOOK_SIZE: usize = 64;
pub const DEFAULT_DECAY: f64 = 0.99;
/// Floor on EMA counts when normalizing sums into codes.
pub const EMA_EPSILON: f64 = 1e-5;

/// `M x d'` codes with their EMA statistics. Statistics start at zero; a code
/// is only rewritten once some latent has been assigned to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    #[serde(with = "matrix")]
    pub codes: DMatrix<f64>,
    pub ema_counts: Vec<f64>,
    #[serde(with = "matrix")]
    pub ema_sums: DMatrix<f64>,
    pub decay: f64,
}

impl Codebook {
    pub fn new(codes: DMatrix<f64>, decay: f64) -> Result<Codebook, ProprioError> {
        let (m, d) = codes.shape();
        Codebook::with_statistics(codes, vec![0.0; m], DMatrix::zeros(m, d), decay)
    }

    pub fn with_statistics(
        codes: DMatrix<f64>,
        ema_counts: Vec<f64>,
        ema_sums: DMatrix<f64>,
        decay: f64,
    ) -> Result<Codebook, ProprioError> {
        let (m, d) = codes.shape();
        if m < 2 {
            return Err(ProprioError::Argument(format!("codebook needs at least 2 codes, got {m}")));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(ProprioError::Argument(format!("decay {decay} outside (0, 1)")));
        }
        if ema_counts.len() != m {
            return Err(ProprioError::Dimension { expected: m, got: ema_counts.len() });
        }
        if ema_sums.shape() != (m, d) {
            return Err(ProprioError::Dimension { expected: m * d, got: ema_sums.len() });
        }
        if codes.iter().chain(ema_sums.iter()).any(|v| !v.is_finite()) || ema_counts.iter().any(|c| !(*c >= 0.0)) {
            return Err(ProprioError::Argument("codebook entries must be finite with non-negative counts".into()));
        }
        Ok(Codebook { codes, ema_counts, ema_sums, decay })
    }

    pub fn size(&self) -> usize {
        self.codes.nrows()
    }

    pub fn dim(&self) -> usize {
        self.codes.ncols()
    }

    pub fn code(&self, k: usize) -> DVector<f64> {
        self.codes.row(k).transpose()
    }
}

/// Linear tokenizer: `z = E m`, reconstruction `D e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearAutoencoder {
    /// `d' x d`
    #[serde(with = "matrix")]
    pub encoder: DMatrix<f64>,
    /// `d x d'`
    #[serde(with = "matrix")]
    pub decoder: DMatrix<f64>,
}

impl LinearAutoencoder {
    pub fn new(encoder: DMatrix<f64>, decoder: DMatrix<f64>) -> Result<LinearAutoencoder, ProprioError> {
        if decoder.shape() != (encoder.ncols(), encoder.nrows()) {
            return Err(ProprioError::Dimension { expected: encoder.len(), got: decoder.len() });
        }
        if encoder.iter().chain(decoder.iter()).any(|v| !v.is_finite()) {
            return Err(ProprioError::Argument("autoencoder entries must be finite".into()));
        }
        Ok(LinearAutoencoder { encoder, decoder })
    }

    /// Entries uniform in `+-1/sqrt(fan_in)`.
    pub fn random(input_dim: usize, latent_dim: usize, rng: &mut SplitMix64) -> LinearAutoencoder {
        let se = 1.0 / (input_dim as f64).sqrt();
        let sd = 1.0 / (latent_dim as f64).sqrt();
        let encoder = DMatrix::from_fn(latent_dim, input_dim, |_, _| rng.uniform(-se, se));
        let decoder = DMatrix::from_fn(input_dim, latent_dim, |_, _| rng.uniform(-sd, sd));
        LinearAutoencoder { encoder, decoder }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.ncols()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.nrows()
    }

    pub fn encode(&self, frame: &[f64]) -> DVector<f64> {
        &self.encoder * DVector::from_column_slice(frame)
    }

    pub fn decode(&self, code: &DVector<f64>) -> DVector<f64> {
        &self.decoder * code
    }
}

/// Nearest code by Euclidean distance, lowest index on ties.
pub fn quantize(z: &DVector<f64>, cb: &Codebook) -> Result<(usize, DVector<f64>), ProprioError> {
    if z.len() != cb.dim() {
        return Err(ProprioError::Dimension { expected: cb.dim(), got: z.len() });
    }
    let mut best = (0, f64::INFINITY);
    for k in 0..cb.size() {
        let d: f64 = cb.codes.row(k).iter().zip(z.iter()).map(|(c, v)| (c - v) * (c - v)).sum();
        if d < best.1 {
            best = (k, d);
        }
    }
    Ok((best.0, cb.code(best.0)))
}

/// Frame-averaged terms of the VQ objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub reconstruction: f64,
    /// `alpha * |sg[z] - e|^2`
    pub codebook: f64,
    /// `beta * |z - sg[e]|^2`
    pub commitment: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub encoder: DMatrix<f64>,
    pub decoder: DMatrix<f64>,
}

fn check(m: &MotionFeature, ae: &LinearAutoencoder, cb: &Codebook, alpha: f64, beta: f64) -> Result<(), ProprioError> {
    if m.is_empty() {
        return Err(ProprioError::EmptyTrajectory);
    }
    if m.dim() != ae.input_dim() {
        return Err(ProprioError::Dimension { expected: ae.input_dim(), got: m.dim() });
    }
    if cb.dim() != ae.latent_dim() {
        return Err(ProprioError::Dimension { expected: ae.latent_dim(), got: cb.dim() });
    }
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(ProprioError::Argument(format!("alpha {alpha} and beta {beta} must be non-negative")));
    }
    Ok(())
}

pub fn vqvae_loss(m: &MotionFeature, ae: &LinearAutoencoder, cb: &Codebook, alpha: f64, beta: f64) -> Result<LossTerms, ProprioError> {
    check(m, ae, cb, alpha, beta)?;
    let (mut rec, mut gap) = (0.0, 0.0);
    for f in &m.frames {
        let z = ae.encode(f);
        let (_, e) = quantize(&z, cb)?;
        rec += (ae.decode(&e) - DVector::from_column_slice(f)).norm_squared();
        gap += (&z - &e).norm_squared();
    }
    let t = m.len() as f64;
    let (reconstruction, codebook, commitment) = (rec / t, alpha * gap / t, beta * gap / t);
    Ok(LossTerms { total: reconstruction + codebook + commitment, reconstruction, codebook, commitment })
}

/// Gradient of [`vqvae_loss`] with respect to the encoder and decoder. The
/// decoder sees `z + sg[e - z]` (straight-through), and every `sg[..]` is a
/// constant, so the codebook term contributes nothing here.
pub fn vqvae_gradients(m: &MotionFeature, ae: &LinearAutoencoder, cb: &Codebook, alpha: f64, beta: f64) -> Result<Gradients, ProprioError> {
    check(m, ae, cb, alpha, beta)?;
    let t = m.len() as f64;
    let mut de = DMatrix::zeros(ae.latent_dim(), ae.input_dim());
    let mut dd = DMatrix::zeros(ae.input_dim(), ae.latent_dim());
    for f in &m.frames {
        let x = DVector::from_column_slice(f);
        let z = &ae.encoder * &x;
        let (_, e) = quantize(&z, cb)?;
        let r = &ae.decoder * &e - &x;
        dd += (&r * e.transpose()) * (2.0 / t);
        let gz = ae.decoder.transpose() * &r * (2.0 / t) + (&z - &e) * (2.0 * beta / t);
        de += gz * x.transpose();
    }
    Ok(Gradients { encoder: de, decoder: dd })
}

/// One EMA step over `(latent, assigned index)` pairs.
pub fn ema_update(cb: &Codebook, batch: &[(DVector<f64>, usize)]) -> Result<Codebook, ProprioError> {
    let (m, d) = cb.codes.shape();
    let mut counts = vec![0.0; m];
    let mut sums = DMatrix::zeros(m, d);
    for (z, k) in batch {
        if *k >= m {
            return Err(ProprioError::Argument(format!("code index {k} out of range for {m} codes")));
        }
        if z.len() != d {
            return Err(ProprioError::Dimension { expected: d, got: z.len() });
        }
        counts[*k] += 1.0;
        let mut row = sums.row_mut(*k);
        row += z.transpose();
    }
    let g = cb.decay;
    let mut out = cb.clone();
    for k in 0..m {
        out.ema_counts[k] = g * cb.ema_counts[k] + (1.0 - g) * counts[k];
        let s = cb.ema_sums.row(k) * g + sums.row(k) * (1.0 - g);
        out.ema_sums.set_row(k, &s);
        if out.ema_counts[k] > 0.0 {
            let c = s / out.ema_counts[k].max(EMA_EPSILON);
            out.codes.set_row(k, &c);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lr: f64,
    pub seed: u64,
    pub latent_dim: usize,
    pub codebook_size: usize,
    pub decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            alpha: 1.0,
            beta: 0.25,
            lr: 0.1,
            seed: 0,
            latent_dim: DEFAULT_LATENT_DIM,
            codebook_size: DEFAULT_CODEBOOK_SIZE,
            decay: DEFAULT_DECAY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedQuantizer {
    pub autoencoder: LinearAutoencoder,
    pub codebook: Codebook,
    /// Total loss after each epoch.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent on the autoencoder with one EMA codebook
/// update per epoch. Codes start as encodings of frames drawn with `seed`.
pub fn train_quantizer(dataset: &[MotionFeature], cfg: &TrainConfig) -> Result<TrainedQuantizer, ProprioError> {
    let first = dataset.first().ok_or_else(|| ProprioError::Argument("empty dataset".into()))?;
    let frames: Vec<Vec<f64>> = dataset.iter().flat_map(|m| m.frames.iter().cloned()).collect();
    let all = MotionFeature::new(frames)?;
    if all.dim() != first.dim() {
        return Err(ProprioError::Dimension { expected: first.dim(), got: all.dim() });
    }
    if cfg.latent_dim == 0 {
        return Err(ProprioError::Argument("latent dimension must be positive".into()));
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let mut ae = LinearAutoencoder::random(all.dim(), cfg.latent_dim, &mut rng);
    let mut codes = DMatrix::zeros(cfg.codebook_size, cfg.latent_dim);
    for k in 0..cfg.codebook_size {
        let z = ae.encode(&all.frames[rng.next_below(all.len())]);
        codes.set_row(k, &z.transpose());
    }
    let mut cb = Codebook::new(codes, cfg.decay)?;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let g = vqvae_gradients(&all, &ae, &cb, cfg.alpha, cfg.beta)?;
        ae.encoder -= g.encoder * cfg.lr;
        ae.decoder -= g.decoder * cfg.lr;
        let mut batch = Vec::with_capacity(all.len());
        for f in &all.frames {
            let z = ae.encode(f);
            let (k, _) = quantize(&z, &cb)?;
            batch.push((z, k));
        }
        cb = ema_update(&cb, &batch)?;
        let loss = vqvae_loss(&all, &ae, &cb, cfg.alpha, cfg.beta)?.total;
        if !loss.is_finite() || ae.encoder.iter().chain(ae.decoder.iter()).any(|v| !v.is_finite()) {
            return Err(ProprioError::NonFinite { epoch });
        }
        history.push(loss);
    }
    Ok(TrainedQuantizer { autoencoder: ae, codebook: cb, loss_history: history })
}
