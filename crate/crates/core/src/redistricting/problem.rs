use crate::cvae::Reconstruction;
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::rng::Stream;
use crate::types::Decision;

use super::generate::random_border_move;
use super::workload::{evaluate_plan, PlanEvaluation};
use super::{check_admissible, plan_decode, plan_encode, DistrictingInstance, Plan};

/// Workload-variance minimization over one-hot encoded plans.
#[derive(Debug, Clone)]
pub struct DistrictingProblem {
    instance: DistrictingInstance,
}

impl DistrictingProblem {
    pub fn new(instance: DistrictingInstance) -> Self {
        DistrictingProblem { instance }
    }

    pub fn instance(&self) -> &DistrictingInstance {
        &self.instance
    }

    pub fn decode(&self, x: &[f64]) -> Result<Plan> {
        plan_decode(x, self.instance.regions(), self.instance.zones())
    }

    pub fn encode(&self, plan: &Plan) -> Result<Decision> {
        plan_encode(plan, self.instance.zones())
    }

    pub fn evaluate(&self, x: &Decision) -> Result<PlanEvaluation> {
        evaluate_plan(&self.instance, &self.decode(x)?)
    }
}

impl Problem for DistrictingProblem {
    fn name(&self) -> &str {
        "districting"
    }

    fn dim(&self) -> usize {
        self.instance.decision_dim()
    }

    fn objective(&self, x: &Decision) -> Result<f64> {
        let plan = self.decode(x)?;
        check_admissible(&self.instance, &plan).map_err(Error::InfeasiblePlan)?;
        Ok(evaluate_plan(&self.instance, &plan)?.variance)
    }

    /// Contiguous, non-empty zones small enough for the exact queueing solve.
    fn is_feasible(&self, x: &Decision) -> bool {
        self.decode(x)
            .is_ok_and(|plan| check_admissible(&self.instance, &plan).is_ok())
    }

    fn canonicalize(&self, x: &Decision) -> Decision {
        match self.decode(x).and_then(|p| self.encode(&p)) {
            Ok(d) => d,
            Err(_) => x.clone(),
        }
    }

    fn neighbor(&self, x: &Decision, rng: &mut Stream) -> Decision {
        match self.decode(x) {
            Ok(plan) => {
                let moved = random_border_move(&self.instance, &plan, rng);
                self.encode(&moved).unwrap_or_else(|_| x.clone())
            }
            Err(_) => x.clone(),
        }
    }

    fn reconstruction(&self) -> Reconstruction {
        Reconstruction::Bernoulli
    }
}
