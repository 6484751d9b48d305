//! Bookkeeping shared by every optimizer: the initial design, the feasible
//! pool, the evaluation budget, and the trace.

use std::time::Instant;

use rand::seq::index::sample;

use crate::cvae::TrainReport;
use crate::error::{Error, Result};
use crate::problem::{NoisyEvaluator, Problem};
use crate::rng::RngSeed;
use crate::types::{Dataset, Decision, EvaluationRecord};

use super::RunResult;

pub(crate) struct Session<'a> {
    method: &'static str,
    seed: RngSeed,
    start: Instant,
    evaluator: NoisyEvaluator<'a>,
    pool: Vec<Decision>,
    initial: Vec<EvaluationRecord>,
    trace: Vec<EvaluationRecord>,
    trace_seconds: Vec<f64>,
    best: Option<(Decision, f64)>,
    projections: usize,
    pub training: Option<TrainReport>,
}

impl<'a> Session<'a> {
    /// Draws `initial` decisions from the dataset's feasible items without
    /// replacement and evaluates them.
    pub fn start(
        method: &'static str,
        dataset: &Dataset,
        problem: &'a dyn Problem,
        seed: RngSeed,
        initial: usize,
        start: Instant,
    ) -> Result<Self> {
        if dataset.dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: dataset.dim(),
            });
        }
        let pool = dataset.feasible_subset()?;
        if pool.len() < initial {
            return Err(Error::InvalidConfig(format!(
                "{initial} initial points requested but only {} feasible decisions available",
                pool.len()
            )));
        }
        let mut rng = seed.stream("initial");
        let picks = sample(&mut rng, pool.len(), initial).into_vec();
        let mut session = Session {
            method,
            seed,
            start,
            evaluator: NoisyEvaluator::new(problem, seed.stream("noise")),
            pool,
            initial: Vec::with_capacity(initial),
            trace: Vec::new(),
            trace_seconds: Vec::new(),
            best: None,
            projections: 0,
            training: None,
        };
        for i in picks {
            let x = session.pool[i].clone();
            let y = session.evaluator.evaluate(&x)?;
            let best = session.note_best(&x, y);
            session.initial.push(EvaluationRecord {
                iteration: 0,
                latent: None,
                decision: x,
                projected: false,
                value: y,
                best,
            });
        }
        Ok(session)
    }

    pub fn pool(&self) -> &[Decision] {
        &self.pool
    }

    pub fn initial(&self) -> &[EvaluationRecord] {
        &self.initial
    }

    pub fn set_initial_latents(&mut self, latents: Vec<Vec<f64>>) {
        for (r, z) in self.initial.iter_mut().zip(latents) {
            r.latent = Some(z);
        }
    }

    /// Appends an oracle-certified decision unless it is already pooled.
    pub fn add_feasible(&mut self, x: &Decision) {
        if !self.pool.contains(x) {
            self.pool.push(x.clone());
        }
    }

    pub fn evaluate(&mut self, x: &Decision) -> Result<f64> {
        self.evaluator.evaluate(x)
    }

    pub fn record(&mut self, latent: Option<Vec<f64>>, decision: Decision, projected: bool, value: f64) {
        let best = self.note_best(&decision, value);
        if projected {
            self.projections += 1;
        }
        self.trace.push(EvaluationRecord {
            iteration: self.trace.len() + 1,
            latent,
            decision,
            projected,
            value,
            best,
        });
        self.trace_seconds.push(self.start.elapsed().as_secs_f64());
    }

    fn note_best(&mut self, x: &Decision, y: f64) -> f64 {
        match &self.best {
            Some((_, b)) if *b <= y => *b,
            _ => {
                self.best = Some((x.clone(), y));
                y
            }
        }
    }

    pub fn finish(self) -> RunResult {
        let (incumbent, incumbent_value) = self.best.expect("initial design is non-empty");
        RunResult {
            method: self.method.to_string(),
            seed: self.seed.0,
            initial: self.initial,
            trace: self.trace,
            trace_seconds: self.trace_seconds,
            incumbent,
            incumbent_value,
            seconds: self.start.elapsed().as_secs_f64(),
            projections: self.projections,
            evaluated: self.evaluator.into_evaluated(),
            training: self.training,
        }
    }
}
