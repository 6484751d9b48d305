//! Optimizers behind a common trait, selectable by name.
//!
//! `cagebo` searches the latent space of a conditional VAE, `vae-bo` the
//! latent space of a plain VAE trained on feasible decisions only, `bo` runs
//! GP-LCB directly on decisions, and `sa` is simulated annealing over the
//! problem's neighborhood moves.

mod bo;
mod latent;
pub mod report;
mod sa;
mod session;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cvae::{CvaeConfig, CvaeModel, TrainReport};
use crate::error::{Error, Result};
use crate::gp::BetaSchedule;
use crate::problem::Problem;
use crate::rng::RngSeed;
use crate::types::{Dataset, Decision, EvaluationRecord};

pub use bo::VanillaBo;
pub use latent::{indirect_decision, indirect_objective, Indirect, LatentBo};
pub use sa::SimulatedAnnealing;

/// Settings of the GP search loop shared by the BO-style methods; `initial`
/// and `iterations` also fix the budget of simulated annealing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CageboConfig {
    /// T.
    pub iterations: usize,
    /// |X_0|.
    pub initial: usize,
    /// Candidates scored by the acquisition per iteration.
    pub candidates: usize,
    pub beta: BetaSchedule,
    /// Multiplier on the encoder noise when sampling latent candidates.
    pub latent_spread: f64,
    /// Rounds of local search on the acquisition around the chosen
    /// candidate, halving the step each round.
    pub refine_rounds: usize,
    /// Initial standard deviation of the local search steps.
    pub refine_scale: f64,
    /// Prefer candidates whose decision has not been evaluated yet.
    pub skip_repeats: bool,
}

impl Default for CageboConfig {
    fn default() -> Self {
        CageboConfig {
            iterations: 100,
            initial: 10,
            candidates: 512,
            beta: BetaSchedule::default(),
            latent_spread: 1.0,
            refine_rounds: 3,
            refine_scale: 0.25,
            skip_repeats: true,
        }
    }
}

impl CageboConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial == 0 {
            return Err(Error::InvalidConfig("search: initial must be at least 1".into()));
        }
        if self.candidates == 0 {
            return Err(Error::InvalidConfig("search: candidates must be at least 1".into()));
        }
        if !(self.latent_spread >= 0.0 && self.latent_spread.is_finite()) {
            return Err(Error::InvalidConfig("search: latent_spread must be non-negative".into()));
        }
        if !(self.refine_scale >= 0.0 && self.refine_scale.is_finite()) {
            return Err(Error::InvalidConfig("search: refine_scale must be non-negative".into()));
        }
        self.beta.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    /// T_0; defaults to the spread of the initial values.
    pub initial_temperature: Option<f64>,
    /// Geometric cooling factor gamma.
    pub cooling: f64,
    /// Neighbor draws per step before falling back to a random pool member.
    pub max_proposals: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            initial_temperature: None,
            cooling: 0.95,
            max_proposals: 1000,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_temperature.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidConfig("sa: initial_temperature must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.cooling) {
            return Err(Error::InvalidConfig("sa: cooling must lie in [0, 1]".into()));
        }
        if self.max_proposals == 0 {
            return Err(Error::InvalidConfig("sa: max_proposals must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoConfig {
    /// Std of Gaussian perturbations around evaluated decisions.
    pub perturbation_std: f64,
    /// Share of candidates drawn uniformly from the unit box.
    pub uniform_fraction: f64,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            perturbation_std: 0.1,
            uniform_fraction: 0.5,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.perturbation_std >= 0.0) || !(0.0..=1.0).contains(&self.uniform_fraction) {
            return Err(Error::InvalidConfig(
                "bo: perturbation_std must be >= 0 and uniform_fraction in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// The `optimizer` block of an experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub search: CageboConfig,
    pub sa: SaConfig,
    pub bo: BoConfig,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        self.sa.validate()?;
        self.bo.validate()
    }
}

/// Everything a factory may need to build an optimizer.
#[derive(Debug, Clone, Default)]
pub struct MethodSettings {
    pub cvae: CvaeConfig,
    pub optimizer: OptimizerConfig,
    /// Skip training and use this model (latent methods only).
    pub pretrained: Option<Arc<CvaeModel>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub method: String,
    pub seed: u64,
    /// The evaluated initial design, iteration 0.
    pub initial: Vec<EvaluationRecord>,
    /// One record per iteration, 1..=T.
    pub trace: Vec<EvaluationRecord>,
    /// Seconds since the start of the run when each trace record was made.
    pub trace_seconds: Vec<f64>,
    pub incumbent: Decision,
    pub incumbent_value: f64,
    pub seconds: f64,
    /// How often post-decoding replaced a decision.
    pub projections: usize,
    /// Every decision passed to the objective, in order.
    pub evaluated: Vec<Decision>,
    pub training: Option<TrainReport>,
}

impl RunResult {
    pub fn evaluations(&self) -> usize {
        self.evaluated.len()
    }

    pub fn best_initial(&self) -> f64 {
        self.initial.iter().map(|r| r.value).fold(f64::INFINITY, f64::min)
    }

    /// Best-so-far after the initial design (index 0) and each iteration.
    pub fn best_curve(&self) -> Vec<f64> {
        let mut curve = vec![self.best_initial()];
        curve.extend(self.trace.iter().map(|r| r.best));
        curve
    }
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(&self, dataset: &Dataset, problem: &dyn Problem, seed: RngSeed) -> Result<RunResult>;
}

pub type Factory = fn(&MethodSettings) -> Result<Box<dyn Optimizer>>;

/// Name-to-factory table.
#[derive(Clone)]
pub struct Registry {
    entries: Vec<(&'static str, Factory)>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: Vec::new() }
    }

    /// `cagebo`, `bo`, `sa`, `vae-bo`.
    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register("cagebo", |s| Ok(Box::new(LatentBo::cagebo(s)?)));
        r.register("bo", |s| Ok(Box::new(VanillaBo::new(s)?)));
        r.register("sa", |s| Ok(Box::new(SimulatedAnnealing::new(s)?)));
        r.register("vae-bo", |s| Ok(Box::new(LatentBo::vae_bo(s)?)));
        r
    }

    /// Adds or replaces an entry.
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(entry) => entry.1 = factory,
            None => self.entries.push((name, factory)),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str, settings: &MethodSettings) -> Result<Box<dyn Optimizer>> {
        let (_, factory) = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "method",
                name: name.to_string(),
            })?;
        factory(settings)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

/// Index of the pool member nearest to `x` in Euclidean distance; ties go to
/// the lowest index.
pub fn nearest_index(x: &[f64], pool: &[Decision]) -> Result<usize> {
    if pool.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in pool.iter().enumerate() {
        if p.dim() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: p.dim(),
            });
        }
        let d = crate::types::squared_distance(p, x);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Ok(best)
}

/// Projects a decision onto the closest member of the feasible pool.
pub fn post_decode(x: &[f64], pool: &[Decision]) -> Result<Decision> {
    Ok(pool[nearest_index(x, pool)?].clone())
}
