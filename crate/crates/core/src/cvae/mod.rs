//! Conditional variational autoencoder over decisions.
//!
//! The encoder maps `(x, onehot(c))` to the mean and log-variance of a
//! diagonal Gaussian `q(z | x, c)`; the decoder maps `(z, onehot(c))` through
//! a sigmoid to a reconstruction in `[0, 1]^d`. The prior is `N(0, I)` for
//! both labels. Gradients of the weighted negative ELBO are computed by hand
//! through the reparameterized sample.
//!
//! Setting `conditional = false` drops the label input entirely, which gives
//! the plain VAE used by the VAE-guided baseline.

mod adam;
mod io;
mod mlp;
mod train;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::types::{Decision, LabeledDecision};

pub use adam::Adam;
pub use train::{train, EpochStats, TrainReport};

use mlp::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    /// Sum of squared errors over coordinates.
    SquaredError,
    /// Bernoulli cross-entropy, for binary one-hot codecs.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvaeConfig {
    pub latent_dim: usize,
    /// Hidden widths; `None` means two layers of `max(32, 4 * latent_dim)`.
    pub encoder_hidden: Option<Vec<usize>>,
    pub decoder_hidden: Option<Vec<usize>>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// KL weight (eta).
    pub kl_weight: f64,
    /// w(1).
    pub weight_feasible: f64,
    /// w(0); `None` balances classes with (#feasible / #infeasible).
    pub weight_infeasible: Option<f64>,
    pub reconstruction: Reconstruction,
    /// When false, the label is not fed to either coder.
    pub conditional: bool,
    pub seed: u64,
}

impl Default for CvaeConfig {
    fn default() -> Self {
        CvaeConfig {
            latent_dim: 10,
            encoder_hidden: None,
            decoder_hidden: None,
            epochs: 1000,
            batch_size: 64,
            learning_rate: 1e-4,
            kl_weight: 0.1,
            weight_feasible: 1.0,
            weight_infeasible: None,
            reconstruction: Reconstruction::SquaredError,
            conditional: true,
            seed: 0,
        }
    }
}

impl CvaeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("cvae: {msg}")));
        if self.latent_dim == 0 {
            return bad("latent_dim must be at least 1");
        }
        if !(self.kl_weight >= 0.0) {
            return bad("kl_weight must be non-negative");
        }
        if !(self.weight_feasible >= 0.0) || self.weight_infeasible.is_some_and(|w| !(w >= 0.0)) {
            return bad("feasibility weights must be non-negative");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        let widths = [&self.encoder_hidden, &self.decoder_hidden];
        if widths.iter().any(|h| h.as_ref().is_some_and(|h| h.contains(&0))) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }

    fn default_hidden(&self) -> Vec<usize> {
        let width = (4 * self.latent_dim).max(32);
        vec![width, width]
    }

    pub fn resolved_encoder_hidden(&self) -> Vec<usize> {
        self.encoder_hidden.clone().unwrap_or_else(|| self.default_hidden())
    }

    pub fn resolved_decoder_hidden(&self) -> Vec<usize> {
        self.decoder_hidden.clone().unwrap_or_else(|| self.default_hidden())
    }

    fn condition_dim(&self) -> usize {
        if self.conditional {
            2
        } else {
            0
        }
    }
}

/// Diagonal Gaussian over the latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussian {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl LatentGaussian {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `mean + exp(log_var / 2) * eps`.
    pub fn reparameterize(&self, eps: &[f64]) -> Result<Vec<f64>> {
        if eps.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: eps.len(),
            });
        }
        Ok(self
            .mean
            .iter()
            .zip(&self.log_var)
            .zip(eps)
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect())
    }

    /// KL divergence to the standard normal prior.
    pub fn kl_to_standard_normal(&self) -> f64 {
        0.5 * self
            .mean
            .iter()
            .zip(&self.log_var)
            .map(|(m, lv)| m * m + lv.exp() - lv - 1.0)
            .sum::<f64>()
    }
}

/// Per-label weights on the reconstruction term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub feasible: f64,
    pub infeasible: f64,
}

impl LossWeights {
    pub const UNIT: LossWeights = LossWeights {
        feasible: 1.0,
        infeasible: 1.0,
    };

    fn of(&self, feasible: bool) -> f64 {
        if feasible {
            self.feasible
        } else {
            self.infeasible
        }
    }
}

/// Batch-averaged loss terms and the gradient over all parameters
/// (encoder first, then decoder).
#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub reconstruction: f64,
    pub kl: f64,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvaeModel {
    input_dim: usize,
    config: CvaeConfig,
    encoder: Mlp,
    decoder: Mlp,
}

impl CvaeModel {
    /// Freshly initialized model drawing weights from `rng`.
    pub fn new(input_dim: usize, config: CvaeConfig, rng: &mut Stream) -> Result<Self> {
        config.validate()?;
        let (enc, dec) = layer_sizes(input_dim, &config);
        Ok(CvaeModel {
            input_dim,
            encoder: Mlp::glorot(enc, rng),
            decoder: Mlp::glorot(dec, rng),
            config,
        })
    }

    /// Model with every weight and bias set to zero.
    pub fn zeros(input_dim: usize, config: CvaeConfig) -> Result<Self> {
        config.validate()?;
        let (enc, dec) = layer_sizes(input_dim, &config);
        Ok(CvaeModel {
            input_dim,
            encoder: Mlp::zeros(enc),
            decoder: Mlp::zeros(dec),
            config,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    pub fn config(&self) -> &CvaeConfig {
        &self.config
    }

    pub fn is_conditional(&self) -> bool {
        self.config.conditional
    }

    pub fn encoder_sizes(&self) -> &[usize] {
        self.encoder.sizes()
    }

    pub fn decoder_sizes(&self) -> &[usize] {
        self.decoder.sizes()
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.params().len() + self.decoder.params().len()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.encoder.params().to_vec();
        p.extend_from_slice(self.decoder.params());
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let split = self.encoder.params().len();
        self.encoder.params_mut().copy_from_slice(&params[..split]);
        self.decoder.params_mut().copy_from_slice(&params[split..]);
        Ok(())
    }

    fn apply_update(&mut self, adam: &mut Adam, gradient: &[f64]) {
        let mut params = self.parameters();
        adam.step(&mut params, gradient);
        self.set_parameters(&params).expect("parameter count is fixed");
    }

    fn with_condition(&self, v: &[f64], feasible: bool) -> Vec<f64> {
        let mut input = Vec::with_capacity(v.len() + 2);
        input.extend_from_slice(v);
        if self.config.conditional {
            input.extend_from_slice(if feasible { &[0.0, 1.0] } else { &[1.0, 0.0] });
        }
        input
    }

    /// Parameters of `q(z | x, c)`.
    pub fn encode(&self, x: &[f64], feasible: bool) -> Result<LatentGaussian> {
        check_len(self.input_dim, x.len())?;
        let out = self.encoder.forward(&self.with_condition(x, feasible));
        Ok(split_gaussian(out.output(), self.latent_dim()))
    }

    /// Decoder mean of `p(x | z, c)`, squashed into the unit box.
    pub fn decode(&self, z: &[f64], feasible: bool) -> Result<Decision> {
        check_len(self.latent_dim(), z.len())?;
        let out = self.decoder.forward(&self.with_condition(z, feasible));
        Ok(Decision::clamped(out.output().iter().map(|&a| sigmoid(a)).collect()))
    }

    /// Weighted negative ELBO averaged over `batch`, one noise draw per item,
    /// together with its exact gradient.
    pub fn elbo_loss(
        &self,
        batch: &[LabeledDecision],
        eps: &[Vec<f64>],
        weights: LossWeights,
    ) -> Result<LossEval> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        check_len(batch.len(), eps.len())?;
        let dz = self.latent_dim();
        let n_enc = self.encoder.params().len();
        let mut gradient = vec![0.0; self.parameter_count()];
        let (mut loss, mut recon_total, mut kl_total) = (0.0, 0.0, 0.0);
        let eta = self.config.kl_weight;

        for (item, eps) in batch.iter().zip(eps) {
            check_len(self.input_dim, item.decision.dim())?;
            check_len(dz, eps.len())?;
            let x = item.decision.as_slice();
            let w = weights.of(item.feasible);

            let enc_fwd = self.encoder.forward(&self.with_condition(x, item.feasible));
            let q = split_gaussian(enc_fwd.output(), dz);
            let z = q.reparameterize(eps)?;
            let dec_fwd = self.decoder.forward(&self.with_condition(&z, item.feasible));
            let logits = dec_fwd.output();

            let (recon, grad_logits) = reconstruction_term(self.config.reconstruction, x, logits);
            let kl = q.kl_to_standard_normal();
            loss += w * recon + eta * kl;
            recon_total += recon;
            kl_total += kl;

            let grad_logits: Vec<f64> = grad_logits.into_iter().map(|g| w * g).collect();
            let (g_enc, g_dec) = gradient.split_at_mut(n_enc);
            let grad_dec_in = self.decoder.backward(&dec_fwd, &grad_logits, g_dec);

            let mut grad_enc_out = vec![0.0; 2 * dz];
            for i in 0..dz {
                let (mu, lv) = (q.mean[i], q.log_var[i]);
                let gz = grad_dec_in[i];
                let sd = (0.5 * lv).exp();
                grad_enc_out[i] = gz + eta * mu;
                grad_enc_out[dz + i] = gz * eps[i] * 0.5 * sd + eta * 0.5 * (lv.exp() - 1.0);
            }
            self.encoder.backward(&enc_fwd, &grad_enc_out, g_enc);
        }

        let n = batch.len() as f64;
        for g in &mut gradient {
            *g /= n;
        }
        Ok(LossEval {
            loss: loss / n,
            reconstruction: recon_total / n,
            kl: kl_total / n,
            gradient,
        })
    }

    /// Decoded encoder mean, the deterministic reconstruction of `x`.
    pub fn reconstruct(&self, x: &[f64], feasible: bool) -> Result<Decision> {
        let q = self.encode(x, feasible)?;
        self.decode(&q.mean, feasible)
    }
}

/// Draws `count` latent points from `q(z | x, c = 1)`, each around a
/// uniformly chosen member of `feasible`.
pub fn sample_feasible_latents(
    model: &CvaeModel,
    feasible: &[Decision],
    count: usize,
    rng: &mut Stream,
) -> Result<Vec<Vec<f64>>> {
    sample_feasible_latents_scaled(model, feasible, count, rng, 1.0)
}

/// As [`sample_feasible_latents`] with the noise multiplied by `eps_scale`;
/// a scale of zero returns encoder means.
pub fn sample_feasible_latents_scaled(
    model: &CvaeModel,
    feasible: &[Decision],
    count: usize,
    rng: &mut Stream,
    eps_scale: f64,
) -> Result<Vec<Vec<f64>>> {
    if feasible.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    let dz = model.latent_dim();
    (0..count)
        .map(|_| {
            let x = &feasible[rng.random_range(0..feasible.len())];
            let q = model.encode(x, true)?;
            let eps: Vec<f64> = (0..dz)
                .map(|_| eps_scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            q.reparameterize(&eps)
        })
        .collect()
}

pub(crate) fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// Reconstruction loss and its gradient with respect to the decoder logits.
fn reconstruction_term(mode: Reconstruction, x: &[f64], logits: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = x
        .iter()
        .zip(logits)
        .map(|(&xi, &a)| {
            let p = sigmoid(a);
            match mode {
                Reconstruction::SquaredError => {
                    let r = p - xi;
                    loss += r * r;
                    2.0 * r * p * (1.0 - p)
                }
                Reconstruction::Bernoulli => {
                    loss += softplus(a) - xi * a;
                    p - xi
                }
            }
        })
        .collect();
    (loss, grad)
}

fn split_gaussian(out: &[f64], dz: usize) -> LatentGaussian {
    LatentGaussian {
        mean: out[..dz].to_vec(),
        log_var: out[dz..2 * dz].to_vec(),
    }
}

fn layer_sizes(input_dim: usize, config: &CvaeConfig) -> (Vec<usize>, Vec<usize>) {
    let cond = config.condition_dim();
    let dz = config.latent_dim;
    let mut enc = vec![input_dim + cond];
    enc.extend(config.resolved_encoder_hidden());
    enc.push(2 * dz);
    let mut dec = vec![dz + cond];
    dec.extend(config.resolved_decoder_hidden());
    dec.push(input_dim);
    (enc, dec)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[cfg(test)]
mod tests;
