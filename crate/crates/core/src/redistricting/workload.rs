//! Per-zone workloads and the plan-level variance objective.

use serde::Serialize;

use crate::error::{Error, Result};

use super::hypercube::{hypercube_steady_state, MAX_ZONE_UNITS};
use super::{check_plan, DistrictingInstance, Plan};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneEvaluation {
    pub zone: usize,
    pub members: Vec<usize>,
    /// Total call rate of the zone.
    pub arrival_rate: f64,
    /// Mean dispatch travel time over served calls.
    pub mean_travel: f64,
    /// Busy time per unit time: `(mean_travel + 1/mu) * arrival_rate`.
    pub workload: f64,
    pub loss_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEvaluation {
    pub zones: Vec<ZoneEvaluation>,
    /// Population variance of the zone workloads.
    pub variance: f64,
}

impl PlanEvaluation {
    pub fn workloads(&self) -> Vec<f64> {
        self.zones.iter().map(|z| z.workload).collect()
    }
}

pub fn zone_workload(
    instance: &DistrictingInstance,
    zone: usize,
    members: &[usize],
) -> Result<ZoneEvaluation> {
    let state = hypercube_steady_state(instance, members)?;
    let members = state.members().to_vec();
    let lambda: Vec<f64> = members.iter().map(|&m| instance.arrival()[m]).collect();
    let arrival_rate: f64 = lambda.iter().sum();
    let loss = state.loss_probability();

    let mut weighted = 0.0;
    for (s, &p) in state.probabilities().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (origin, &lam) in lambda.iter().enumerate() {
            if let Some(u) = state.dispatched_unit(s, origin) {
                weighted += p * lam * instance.travel(members[u], members[origin]);
            }
        }
    }
    let served = arrival_rate * (1.0 - loss);
    let mean_travel = if served > 0.0 { weighted / served } else { 0.0 };
    Ok(ZoneEvaluation {
        zone,
        workload: (mean_travel + 1.0 / instance.service_rate()) * arrival_rate,
        members,
        arrival_rate,
        mean_travel,
        loss_probability: loss,
    })
}

/// Evaluates every zone of a feasible plan.
pub fn evaluate_plan(instance: &DistrictingInstance, plan: &Plan) -> Result<PlanEvaluation> {
    check_plan(instance, plan).map_err(Error::InfeasiblePlan)?;
    let zones = (0..instance.zones())
        .map(|j| {
            let members = plan.members(j);
            if members.len() > MAX_ZONE_UNITS {
                return Err(Error::ZoneTooLarge {
                    size: members.len(),
                    cap: MAX_ZONE_UNITS,
                });
            }
            zone_workload(instance, j, &members)
        })
        .collect::<Result<Vec<_>>>()?;
    let workloads: Vec<f64> = zones.iter().map(|z| z.workload).collect();
    Ok(PlanEvaluation {
        variance: population_variance(&workloads),
        zones,
    })
}

pub fn workload_variance(instance: &DistrictingInstance, plan: &Plan) -> Result<f64> {
    Ok(evaluate_plan(instance, plan)?.variance)
}

pub(crate) fn population_variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}
