//! GP-LCB directly over the unit box.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::gp::{fit, Hyperparameters};
use crate::problem::Problem;
use crate::rng::RngSeed;
use crate::types::{Dataset, Decision};

use super::session::Session;
use super::{nearest_index, BoConfig, CageboConfig, MethodSettings, Optimizer, RunResult};

/// Candidates mix uniform points with perturbations of evaluated decisions;
/// infeasible picks are projected onto the feasible pool. The GP is fit on
/// the selected points and the values they led to.
#[derive(Debug, Clone)]
pub struct VanillaBo {
    search: CageboConfig,
    bo: BoConfig,
}

impl VanillaBo {
    pub fn new(settings: &MethodSettings) -> Result<Self> {
        settings.optimizer.search.validate()?;
        settings.optimizer.bo.validate()?;
        Ok(VanillaBo {
            search: settings.optimizer.search.clone(),
            bo: settings.optimizer.bo.clone(),
        })
    }
}

impl Optimizer for VanillaBo {
    fn name(&self) -> &'static str {
        "bo"
    }

    fn run(&self, dataset: &Dataset, problem: &dyn Problem, seed: RngSeed) -> Result<RunResult> {
        let start = Instant::now();
        let mut session = Session::start("bo", dataset, problem, seed, self.search.initial, start)?;
        let d = problem.dim();
        let mut points: Vec<Vec<f64>> = session.initial().iter().map(|r| r.decision.to_vec()).collect();
        let mut values: Vec<f64> = session.initial().iter().map(|r| r.value).collect();
        let mut evaluated: Vec<Decision> = session.initial().iter().map(|r| r.decision.clone()).collect();

        let mut rng = seed.stream("candidates");
        let n = self.search.candidates;
        let uniform = (n as f64 * self.bo.uniform_fraction).round() as usize;
        for t in 1..=self.search.iterations {
            let gp = fit(&points, &values, Hyperparameters::Auto)?;
            let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(n);
            for _ in 0..uniform {
                candidates.push((0..d).map(|_| rng.random::<f64>()).collect());
            }
            while candidates.len() < n {
                let center = &evaluated[rng.random_range(0..evaluated.len())];
                candidates.push(
                    center
                        .iter()
                        .map(|v| {
                            let step: f64 = rng.sample(StandardNormal);
                            (v + self.bo.perturbation_std * step).clamp(0.0, 1.0)
                        })
                        .collect(),
                );
            }
            let beta = self.search.beta.beta(t, candidates.len());
            let (_, pick) = gp.select_candidate(&candidates, beta)?;
            let pick = pick.to_vec();
            let x = problem.canonicalize(&Decision::clamped(pick.clone()));
            let (decision, projected) = if problem.is_feasible(&x) {
                session.add_feasible(&x);
                (x, false)
            } else {
                (session.pool()[nearest_index(&x, session.pool())?].clone(), true)
            };
            let y = session.evaluate(&decision)?;
            evaluated.push(decision.clone());
            session.record(Some(pick.clone()), decision, projected, y);
            points.push(pick);
            values.push(y);
        }
        Ok(session.finish())
    }
}
