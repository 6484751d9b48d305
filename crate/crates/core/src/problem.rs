//! Black-box problems: a noisy objective plus a feasibility oracle over the
//! unit box.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cvae::Reconstruction;
use crate::error::Result;
use crate::rng::Stream;
use crate::types::Decision;

pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Noise-free objective at a canonical decision.
    fn objective(&self, x: &Decision) -> Result<f64>;

    /// Feasibility oracle `h`. Deterministic in `x`.
    fn is_feasible(&self, x: &Decision) -> bool;

    /// Maps a raw decision onto the problem's codec image (e.g. rounds a
    /// relaxed assignment to one-hot). Identity for continuous problems.
    fn canonicalize(&self, x: &Decision) -> Decision {
        x.clone()
    }

    /// Standard deviation of additive Gaussian observation noise.
    fn noise_std(&self) -> f64 {
        0.0
    }

    /// Local move used by simulated annealing.
    fn neighbor(&self, x: &Decision, rng: &mut Stream) -> Decision {
        perturb_coordinate(x, 0.1, rng)
    }

    /// Likelihood family suited to this problem's decisions.
    fn reconstruction(&self) -> Reconstruction {
        Reconstruction::SquaredError
    }
}

/// Adds `N(0, step^2)` to one uniformly chosen coordinate and clamps.
pub fn perturb_coordinate(x: &Decision, step: f64, rng: &mut Stream) -> Decision {
    let mut v = x.as_slice().to_vec();
    if !v.is_empty() {
        let i = rng.random_range(0..v.len());
        v[i] += step * rng.sample::<f64, _>(StandardNormal);
    }
    Decision::clamped(v)
}

/// A problem assembled from closures, handy for tests and quick studies.
pub struct ClosureProblem<F, H> {
    name: String,
    dim: usize,
    objective: F,
    feasible: H,
    noise_std: f64,
}

impl<F, H> ClosureProblem<F, H>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    H: Fn(&[f64]) -> bool + Send + Sync,
{
    pub fn new(name: impl Into<String>, dim: usize, objective: F, feasible: H) -> Self {
        ClosureProblem {
            name: name.into(),
            dim,
            objective,
            feasible,
            noise_std: 0.0,
        }
    }

    pub fn with_noise(mut self, std: f64) -> Self {
        self.noise_std = std;
        self
    }
}

impl<F, H> Problem for ClosureProblem<F, H>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    H: Fn(&[f64]) -> bool + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn objective(&self, x: &Decision) -> Result<f64> {
        x.check_dim(self.dim)?;
        Ok((self.objective)(x))
    }

    fn is_feasible(&self, x: &Decision) -> bool {
        (self.feasible)(x)
    }

    fn noise_std(&self) -> f64 {
        self.noise_std
    }
}

/// Evaluates `f_hat(x) = f(x) + noise` and logs every evaluated decision.
pub struct NoisyEvaluator<'a> {
    problem: &'a dyn Problem,
    rng: Stream,
    evaluated: Vec<Decision>,
}

impl<'a> NoisyEvaluator<'a> {
    pub fn new(problem: &'a dyn Problem, rng: Stream) -> Self {
        NoisyEvaluator {
            problem,
            rng,
            evaluated: Vec::new(),
        }
    }

    pub fn evaluate(&mut self, x: &Decision) -> Result<f64> {
        let f = self.problem.objective(x)?;
        let std = self.problem.noise_std();
        // The noise stream is consumed only when noise is enabled.
        let noise = if std > 0.0 {
            std * self.rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        self.evaluated.push(x.clone());
        Ok(f + noise)
    }

    pub fn count(&self) -> usize {
        self.evaluated.len()
    }

    pub fn into_evaluated(self) -> Vec<Decision> {
        self.evaluated
    }
}
