//! Exact Gaussian-process regression with a Matérn-5/2 kernel and the
//! lower-confidence-bound acquisition.

mod linalg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::squared_distance;

pub use linalg::cholesky;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let p = KernelParams {
            lengthscale,
            signal_variance,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lengthscale.is_finite()
            && self.lengthscale > 0.0
            && self.signal_variance.is_finite()
            && self.signal_variance > 0.0
            && self.noise_variance.is_finite()
            && self.noise_variance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid kernel parameters {self:?}")))
        }
    }

    fn from_distance(&self, r: f64) -> f64 {
        let s = 5f64.sqrt() * r / self.lengthscale;
        self.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
    }
}

/// Matérn-5/2 covariance between `a` and `b`.
pub fn kernel_eval(p: &KernelParams, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(p.from_distance(squared_distance(a, b).sqrt()))
}

/// How kernel hyperparameters are chosen at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hyperparameters {
    Fixed(KernelParams),
    /// Grid search maximizing the log marginal likelihood.
    Auto,
}

const LENGTHSCALE_FACTORS: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
const SIGNAL_VARIANCES: [f64; 3] = [0.5, 1.0, 2.0];
const NOISE_VARIANCES: [f64; 3] = [1e-6, 1e-4, 1e-2];

/// Candidate hyperparameters searched by [`Hyperparameters::Auto`].
pub fn hyperparameter_grid(dim: usize) -> Vec<KernelParams> {
    let root = (dim.max(1) as f64).sqrt();
    let mut grid = Vec::with_capacity(54);
    for &f in &LENGTHSCALE_FACTORS {
        for &s2 in &SIGNAL_VARIANCES {
            for &n2 in &NOISE_VARIANCES {
                grid.push(KernelParams {
                    lengthscale: f * root,
                    signal_variance: s2,
                    noise_variance: n2,
                });
            }
        }
    }
    grid
}

/// A fitted GP. Targets are standardized internally; predictions are
/// reported in the original units.
#[derive(Debug, Clone)]
pub struct GpState {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    params: KernelParams,
    y_mean: f64,
    y_scale: f64,
    /// Lower-triangular factor of K + (noise + jitter) I, row-major m x m.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    log_marginal_likelihood: f64,
}

impl GpState {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Extra diagonal added during factorization (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    /// `(K + sigma^2 I)^{-1} (y - mean)` on standardized targets.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Mean and scale used to standardize the targets.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_scale)
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Posterior mean and standard deviation of the latent function at `z`.
    pub fn posterior(&self, z: &[f64]) -> Result<(f64, f64)> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let m = self.len();
        let kstar: Vec<f64> = self
            .points
            .iter()
            .map(|p| self.params.from_distance(squared_distance(p, z).sqrt()))
            .collect();
        let mean: f64 = kstar.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let v = linalg::forward_substitute(&self.chol, m, &kstar);
        let var = (self.params.signal_variance - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
        Ok((self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt()))
    }

    /// `mu(z) - sqrt(beta) * sigma(z)`.
    pub fn lcb(&self, z: &[f64], beta: f64) -> Result<f64> {
        let (mu, sigma) = self.posterior(z)?;
        Ok(mu - beta.sqrt() * sigma)
    }

    /// Index and point of the candidate with the smallest LCB; ties go to the
    /// lowest index.
    pub fn select_candidate<'a>(&self, candidates: &'a [Vec<f64>], beta: f64) -> Result<(usize, &'a [f64])> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in candidates.iter().enumerate() {
            let score = self.lcb(c, beta)?;
            if best.is_none_or(|(_, b)| score < b) {
                best = Some((i, score));
            }
        }
        let (i, _) = best.ok_or(Error::EmptyCandidates)?;
        Ok((i, &candidates[i]))
    }
}

/// Fits a GP to `(points, values)`.
pub fn fit(points: &[Vec<f64>], values: &[f64], hyper: Hyperparameters) -> Result<GpState> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if points.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    let m = points.len();
    let y_mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / m as f64;
    let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let y: Vec<f64> = values.iter().map(|v| (v - y_mean) / y_scale).collect();

    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..i {
            let d = squared_distance(&points[i], &points[j]).sqrt();
            dist[i * m + j] = d;
            dist[j * m + i] = d;
        }
    }

    let candidates = match hyper {
        Hyperparameters::Fixed(p) => {
            p.validate()?;
            vec![p]
        }
        Hyperparameters::Auto => hyperparameter_grid(dim),
    };

    let mut best: Option<Factored> = None;
    let mut last_err = Error::NonPositiveDefinite;
    for params in candidates {
        match factor(&dist, m, &y, params) {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.lml > b.lml) {
                    best = Some(f);
                }
            }
            Err(e) => last_err = e,
        }
    }
    let f = best.ok_or(last_err)?;
    Ok(GpState {
        points: points.to_vec(),
        values: values.to_vec(),
        params: f.params,
        y_mean,
        y_scale,
        chol: f.chol,
        alpha: f.alpha,
        jitter: f.jitter,
        log_marginal_likelihood: f.lml,
    })
}

struct Factored {
    params: KernelParams,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

const JITTER_LEVELS: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

fn factor(dist: &[f64], m: usize, y: &[f64], params: KernelParams) -> Result<Factored> {
    let mut k: Vec<f64> = dist.iter().map(|&r| params.from_distance(r)).collect();
    for i in 0..m {
        k[i * m + i] += params.noise_variance;
    }
    let mean_diag = (0..m).map(|i| k[i * m + i]).sum::<f64>() / m as f64;

    let mut jitter = 0.0;
    let mut chol = cholesky(&k, m);
    for level in JITTER_LEVELS {
        if chol.is_some() {
            break;
        }
        jitter = level * mean_diag;
        let mut kj = k.clone();
        for i in 0..m {
            kj[i * m + i] += jitter;
        }
        chol = cholesky(&kj, m);
    }
    let chol = chol.ok_or(Error::NonPositiveDefinite)?;

    let alpha = linalg::cholesky_solve(&chol, m, y);
    let data_fit: f64 = y.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let log_det: f64 = (0..m).map(|i| chol[i * m + i].ln()).sum();
    let lml = -0.5 * data_fit - log_det - 0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln();
    Ok(Factored {
        params,
        chol,
        alpha,
        jitter,
        lml,
    })
}

/// Exploration weight for the LCB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSchedule {
    Constant { beta: f64 },
    /// `beta_t = 2 log(m t^2 pi^2 / (6 delta))` with `m` the candidate count.
    Theoretical { delta: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Constant { beta: 1.0 }
    }
}

impl BetaSchedule {
    pub fn beta(&self, t: usize, candidates: usize) -> f64 {
        match *self {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::Theoretical { delta } => {
                let t = t.max(1) as f64;
                let m = candidates.max(1) as f64;
                2.0 * (m * t * t * std::f64::consts::PI.powi(2) / (6.0 * delta)).ln()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaSchedule::Constant { beta } if beta >= 0.0 && beta.is_finite() => Ok(()),
            BetaSchedule::Theoretical { delta } if delta > 0.0 && delta < 1.0 => Ok(()),
            _ => Err(Error::InvalidConfig(format!("invalid beta schedule {self:?}"))),
        }
    }
}
