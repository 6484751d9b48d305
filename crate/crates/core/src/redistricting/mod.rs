//! Police districting: assign regions to zones so that per-zone workloads
//! from a hypercube queueing model are as even as possible.

mod generate;
mod hypercube;
mod problem;
mod render;
mod workload;

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Decision;

pub use generate::{atlanta_like_instance, generate_labeled_plans, grid_instance, random_border_move};
pub use hypercube::{
    hypercube_steady_state, hypercube_steady_state_with, Solver, SteadyState, DENSE_SOLVE_MAX_UNITS,
    MAX_ZONE_UNITS,
};
pub use problem::DistrictingProblem;
pub use render::render_plan_svg;
pub use workload::{evaluate_plan, workload_variance, zone_workload, PlanEvaluation, ZoneEvaluation};

/// Regions, their adjacency and travel times, and the demand they generate.
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictingInstance {
    zones: usize,
    neighbors: Vec<Vec<usize>>,
    travel: Vec<Vec<f64>>,
    arrival: Vec<f64>,
    service_rate: f64,
    coords: Option<Vec<[f64; 2]>>,
    base_plan: Option<Plan>,
}

impl DistrictingInstance {
    /// Validates and builds an instance. `edges` are unordered region pairs.
    pub fn new(
        zones: usize,
        edges: &[[usize; 2]],
        travel: Vec<Vec<f64>>,
        arrival: Vec<f64>,
        service_rate: f64,
    ) -> Result<Self> {
        let l = arrival.len();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if l == 0 || zones == 0 || zones > l {
            return bad(format!("need 1 <= J <= L, got L = {l}, J = {zones}"));
        }
        if !(service_rate.is_finite() && service_rate > 0.0) {
            return bad(format!("service rate must be positive, got {service_rate}"));
        }
        if let Some(v) = arrival.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return bad(format!("arrival rates must be non-negative, got {v}"));
        }
        if travel.len() != l || travel.iter().any(|row| row.len() != l) {
            return bad(format!("travel matrix must be {l}x{l}"));
        }
        for (i, row) in travel.iter().enumerate() {
            if row[i] != 0.0 || row.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return bad("travel times must be non-negative with zero diagonal".into());
            }
        }
        let mut neighbors = vec![Vec::new(); l];
        for &[a, b] in edges {
            if a >= l || b >= l || a == b {
                return bad(format!("invalid adjacency pair ({a}, {b})"));
            }
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let all: Vec<usize> = (0..l).collect();
        if !induced_connected(&neighbors, &all) {
            return bad("region graph is not connected".into());
        }
        Ok(DistrictingInstance {
            zones,
            neighbors,
            travel,
            arrival,
            service_rate,
            coords: None,
            base_plan: None,
        })
    }

    /// Attaches drawing coordinates, one per region.
    pub fn with_coords(mut self, coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.len() != self.regions() {
            return Err(Error::DimensionMismatch {
                expected: self.regions(),
                got: coords.len(),
            });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    /// Attaches a reference plan; it must be admissible.
    pub fn with_base_plan(mut self, plan: Plan) -> Result<Self> {
        check_plan(&self, &plan).map_err(Error::InfeasibleBase)?;
        self.base_plan = Some(plan);
        Ok(self)
    }

    pub fn regions(&self) -> usize {
        self.arrival.len()
    }

    pub fn zones(&self) -> usize {
        self.zones
    }

    pub fn neighbors(&self, region: usize) -> &[usize] {
        &self.neighbors[region]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Each undirected edge once, `a < b`.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut out = Vec::new();
        for (a, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| b > a).map(|&b| [a, b]));
        }
        out
    }

    pub fn travel(&self, from: usize, to: usize) -> f64 {
        self.travel[from][to]
    }

    pub fn travel_matrix(&self) -> &[Vec<f64>] {
        &self.travel
    }

    pub fn arrival(&self) -> &[f64] {
        &self.arrival
    }

    pub fn service_rate(&self) -> f64 {
        self.service_rate
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn base_plan(&self) -> Option<&Plan> {
        self.base_plan.as_ref()
    }

    /// Length of the one-hot codec image.
    pub fn decision_dim(&self) -> usize {
        self.regions() * self.zones
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<InstanceFile>(text)?.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(rename = "L")]
    regions: usize,
    #[serde(rename = "J")]
    zones: usize,
    mu: f64,
    lambda: Vec<f64>,
    adjacency: Vec<[usize; 2]>,
    travel: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_plan: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<[f64; 2]>>,
}

impl From<&DistrictingInstance> for InstanceFile {
    fn from(inst: &DistrictingInstance) -> Self {
        InstanceFile {
            regions: inst.regions(),
            zones: inst.zones,
            mu: inst.service_rate,
            lambda: inst.arrival.clone(),
            adjacency: inst.edges(),
            travel: inst.travel.clone(),
            base_plan: inst.base_plan.as_ref().map(|p| p.0.clone()),
            coords: inst.coords.clone(),
        }
    }
}

impl TryFrom<InstanceFile> for DistrictingInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.lambda.len() != file.regions {
            return Err(Error::DimensionMismatch {
                expected: file.regions,
                got: file.lambda.len(),
            });
        }
        let mut inst =
            DistrictingInstance::new(file.zones, &file.adjacency, file.travel, file.lambda, file.mu)?;
        if let Some(coords) = file.coords {
            inst = inst.with_coords(coords)?;
        }
        if let Some(plan) = file.base_plan {
            inst = inst.with_base_plan(Plan(plan))?;
        }
        Ok(inst)
    }
}

/// Zone index per region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan(pub Vec<usize>);

impl Plan {
    pub fn assignment(&self) -> &[usize] {
        &self.0
    }

    /// Regions of `zone` in increasing order.
    pub fn members(&self, zone: usize) -> Vec<usize> {
        (0..self.0.len()).filter(|&l| self.0[l] == zone).collect()
    }

    pub fn zone_sizes(&self, zones: usize) -> Vec<usize> {
        let mut sizes = vec![0; zones];
        for &j in &self.0 {
            if j < zones {
                sizes[j] += 1;
            }
        }
        sizes
    }

    /// Whether `region` touches a region of another zone.
    pub fn is_border(&self, instance: &DistrictingInstance, region: usize) -> bool {
        instance
            .neighbors(region)
            .iter()
            .any(|&n| self.0[n] != self.0[region])
    }
}

/// The first rule a plan breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Length { expected: usize, got: usize },
    ZoneIndex { region: usize, zone: usize },
    EmptyZone(usize),
    Contiguity(usize),
    ZoneSize { zone: usize, size: usize, cap: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Length { expected, got } => {
                write!(f, "plan length: expected {expected} regions, got {got}")
            }
            Violation::ZoneIndex { region, zone } => {
                write!(f, "zone index: region {region} assigned to nonexistent zone {zone}")
            }
            Violation::EmptyZone(j) => write!(f, "non-empty: zone {j} has no regions"),
            Violation::Contiguity(j) => write!(f, "contiguity: zone {j} is not connected"),
            Violation::ZoneSize { zone, size, cap } => {
                write!(f, "zone size: zone {zone} has {size} regions, cap is {cap}")
            }
        }
    }
}

/// Checks shape, non-empty zones, and contiguity, in that order.
pub fn check_plan(instance: &DistrictingInstance, plan: &Plan) -> std::result::Result<(), Violation> {
    let l = instance.regions();
    if plan.0.len() != l {
        return Err(Violation::Length {
            expected: l,
            got: plan.0.len(),
        });
    }
    if let Some(region) = plan.0.iter().position(|&j| j >= instance.zones) {
        return Err(Violation::ZoneIndex {
            region,
            zone: plan.0[region],
        });
    }
    let sizes = plan.zone_sizes(instance.zones);
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Violation::EmptyZone(j));
    }
    for j in 0..instance.zones {
        if !induced_connected(&instance.neighbors, &plan.members(j)) {
            return Err(Violation::Contiguity(j));
        }
    }
    Ok(())
}

/// Like [`check_plan`], plus the per-zone cap of the exact queueing solve.
pub fn check_admissible(
    instance: &DistrictingInstance,
    plan: &Plan,
) -> std::result::Result<(), Violation> {
    check_plan(instance, plan)?;
    match plan
        .zone_sizes(instance.zones)
        .iter()
        .position(|&s| s > MAX_ZONE_UNITS)
    {
        Some(zone) => Err(Violation::ZoneSize {
            zone,
            size: plan.zone_sizes(instance.zones)[zone],
            cap: MAX_ZONE_UNITS,
        }),
        None => Ok(()),
    }
}

/// 1 iff every zone is non-empty and induces a connected subgraph.
pub fn feasibility_oracle(instance: &DistrictingInstance, plan: &Plan) -> bool {
    check_plan(instance, plan).is_ok()
}

// Breadth-first search restricted to `nodes`.
fn induced_connected(neighbors: &[Vec<usize>], nodes: &[usize]) -> bool {
    let Some(&start) = nodes.first() else {
        return true;
    };
    let mut inside = vec![false; neighbors.len()];
    for &n in nodes {
        inside[n] = true;
    }
    let mut seen = vec![false; neighbors.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &neighbors[u] {
            if inside[v] && !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == nodes.len()
}

/// Flattened one-hot matrix, region-major.
pub fn plan_encode(plan: &Plan, zones: usize) -> Result<Decision> {
    let mut x = vec![0.0; plan.0.len() * zones];
    for (l, &j) in plan.0.iter().enumerate() {
        if j >= zones {
            return Err(Error::DimensionMismatch {
                expected: zones,
                got: j + 1,
            });
        }
        x[l * zones + j] = 1.0;
    }
    Decision::new(x)
}

/// Per-region argmax over its zone block; ties go to the lowest zone.
pub fn plan_decode(x: &[f64], regions: usize, zones: usize) -> Result<Plan> {
    if zones == 0 || x.len() != regions * zones {
        return Err(Error::DimensionMismatch {
            expected: regions * zones,
            got: x.len(),
        });
    }
    Ok(Plan(
        x.chunks(zones)
            .map(|block| {
                let mut best = 0;
                for (j, v) in block.iter().enumerate() {
                    if *v > block[best] {
                        best = j;
                    }
                }
                best
            })
            .collect(),
    ))
}
