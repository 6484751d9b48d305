//! Simulated annealing over the problem's neighborhood moves.

use std::time::Instant;

use rand::Rng;

use crate::error::Result;
use crate::problem::Problem;
use crate::rng::RngSeed;
use crate::types::Dataset;

use super::session::Session;
use super::{MethodSettings, Optimizer, RunResult, SaConfig};

/// Starts from the best initial point. Each step draws neighbors until one
/// is feasible (infeasible proposals are rejected outright), evaluates it,
/// and accepts it by the Metropolis rule at temperature `T_0 * gamma^k`.
#[derive(Debug, Clone)]
pub struct SimulatedAnnealing {
    initial: usize,
    iterations: usize,
    sa: SaConfig,
}

impl SimulatedAnnealing {
    pub fn new(settings: &MethodSettings) -> Result<Self> {
        settings.optimizer.search.validate()?;
        settings.optimizer.sa.validate()?;
        Ok(SimulatedAnnealing {
            initial: settings.optimizer.search.initial,
            iterations: settings.optimizer.search.iterations,
            sa: settings.optimizer.sa.clone(),
        })
    }
}

/// Metropolis acceptance probability for a move from `current` to
/// `proposed` at `temperature` (minimization).
pub(crate) fn acceptance_probability(current: f64, proposed: f64, temperature: f64) -> f64 {
    if proposed <= current {
        1.0
    } else if temperature > 0.0 {
        (-(proposed - current) / temperature).exp()
    } else {
        0.0
    }
}

impl Optimizer for SimulatedAnnealing {
    fn name(&self) -> &'static str {
        "sa"
    }

    fn run(&self, dataset: &Dataset, problem: &dyn Problem, seed: RngSeed) -> Result<RunResult> {
        let start = Instant::now();
        let mut session = Session::start("sa", dataset, problem, seed, self.initial, start)?;
        let init = session.initial();
        let values: Vec<f64> = init.iter().map(|r| r.value).collect();
        let start_index = (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .expect("initial design is non-empty");
        let mut current = init[start_index].decision.clone();
        let mut current_value = values[start_index];
        let t0 = self.sa.initial_temperature.unwrap_or_else(|| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        });

        let mut rng = seed.stream("sa");
        for k in 0..self.iterations {
            let mut proposal = None;
            for _ in 0..self.sa.max_proposals {
                let y = problem.neighbor(&current, &mut rng);
                if problem.is_feasible(&y) {
                    proposal = Some(y);
                    break;
                }
            }
            let proposal = match proposal {
                Some(p) => p,
                None => session.pool()[rng.random_range(0..session.pool().len())].clone(),
            };
            if problem.is_feasible(&proposal) {
                session.add_feasible(&proposal);
            }
            let y = session.evaluate(&proposal)?;
            let temperature = t0 * self.sa.cooling.powi(k as i32);
            let u: f64 = rng.random();
            if u < acceptance_probability(current_value, y, temperature) {
                current = proposal.clone();
                current_value = y;
            }
            session.record(None, proposal, false, y);
        }
        Ok(session.finish())
    }
}
