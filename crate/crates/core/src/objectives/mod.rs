//! Synthetic benchmark problems and their implicit-constraint datasets.

mod functions;
mod search;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cvae::{CvaeConfig, CvaeModel};
use crate::error::{Error, Result};
use crate::problem::{perturb_coordinate, Problem};
use crate::rng::{RngSeed, Stream};
use crate::types::{Dataset, Decision, LabeledDecision};

pub use functions::{
    ackley, keane_bump, michalewicz, test_function, Ackley, KeaneBump, Michalewicz, TestFunction,
    TEST_FUNCTIONS,
};
pub use search::grid_refine_minimum;

/// Declarative description of a synthetic benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticProblemSpec {
    pub function: String,
    pub d: usize,
    /// Box bounds; the function's standard domain when omitted.
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
    #[serde(default)]
    pub noise_std: f64,
}

impl SyntheticProblemSpec {
    pub fn domain(&self) -> Result<(Box<dyn TestFunction>, Vec<f64>, Vec<f64>)> {
        let function = test_function(&self.function)?;
        let (lo, hi) = function.default_domain(self.d);
        let lower = self.lower.clone().unwrap_or(lo);
        let upper = self.upper.clone().unwrap_or(hi);
        Ok((function, lower, upper))
    }
}

/// Membership in a finite list of decisions, up to a max-norm tolerance.
#[derive(Debug, Clone)]
pub struct MatchingOracle {
    // Sorted by first coordinate for range lookups.
    points: Vec<Decision>,
    tolerance: f64,
}

impl MatchingOracle {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;

    pub fn new(mut points: Vec<Decision>, tolerance: f64) -> Self {
        points.sort_by(|a, b| first(a).total_cmp(&first(b)));
        MatchingOracle { points, tolerance }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let key = x.first().copied().unwrap_or(0.0);
        let start = self.points.partition_point(|p| first(p) < key - self.tolerance);
        self.points[start..]
            .iter()
            .take_while(|p| first(p) <= key + self.tolerance)
            .any(|p| {
                p.dim() == x.len()
                    && p.iter().zip(x).all(|(a, b)| (a - b).abs() <= self.tolerance)
            })
    }
}

fn first(d: &Decision) -> f64 {
    d.first().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone)]
pub enum Constraint {
    Unconstrained,
    /// Euclidean ball in domain coordinates.
    Disk { center: Vec<f64>, radius: f64 },
    /// Feasible iff the decision matches a listed feasible decision.
    Matching(MatchingOracle),
}

impl Constraint {
    /// Disk centered in the box with radius 30% of the smallest half-width.
    pub fn default_disk(lower: &[f64], upper: &[f64]) -> Constraint {
        let center = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
        let half = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| 0.5 * (u - l))
            .fold(f64::INFINITY, f64::min);
        Constraint::Disk {
            center,
            radius: 0.3 * half,
        }
    }
}

/// A benchmark function over a scaled box with an implicit constraint.
/// Decisions live in `[0, 1]^d` and are mapped affinely onto the box.
#[derive(Debug)]
pub struct SyntheticProblem {
    function: Box<dyn TestFunction>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    constraint: Constraint,
    noise_std: f64,
    step: f64,
}

impl SyntheticProblem {
    pub fn new(
        function: Box<dyn TestFunction>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        constraint: Constraint,
    ) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidConfig("box bounds must be non-empty and equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(Error::InvalidConfig("box upper bounds must exceed lower bounds".into()));
        }
        if let Constraint::Disk { center, radius } = &constraint {
            if center.len() != lower.len() || !(*radius >= 0.0) {
                return Err(Error::InvalidConfig("disk center/radius mismatch the box".into()));
            }
        }
        Ok(SyntheticProblem {
            function,
            lower,
            upper,
            constraint,
            noise_std: 0.0,
            step: 0.1,
        })
    }

    pub fn from_spec(spec: &SyntheticProblemSpec, constraint: Constraint) -> Result<Self> {
        let (function, lower, upper) = spec.domain()?;
        if lower.len() != spec.d {
            return Err(Error::DimensionMismatch {
                expected: spec.d,
                got: lower.len(),
            });
        }
        Ok(SyntheticProblem::new(function, lower, upper, constraint)?.with_noise(spec.noise_std))
    }

    pub fn with_noise(mut self, std: f64) -> Self {
        self.noise_std = std;
        self
    }

    /// Standard deviation of coordinate moves used by simulated annealing.
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn function(&self) -> &dyn TestFunction {
        self.function.as_ref()
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn to_domain(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| l + v * (u - l))
            .collect()
    }

    pub fn from_domain(&self, y: &[f64]) -> Decision {
        Decision::clamped(
            y.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(v, (l, u))| (v - l) / (u - l))
                .collect(),
        )
    }

    /// Whether a domain-scaled point satisfies the constraint.
    pub fn domain_feasible(&self, y: &[f64]) -> bool {
        match &self.constraint {
            Constraint::Unconstrained => true,
            Constraint::Disk { center, radius } => {
                y.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= *radius
            }
            Constraint::Matching(oracle) => oracle.contains(&self.from_domain(y)),
        }
    }
}

impl Problem for SyntheticProblem {
    fn name(&self) -> &str {
        self.function.name()
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn objective(&self, x: &Decision) -> Result<f64> {
        x.check_dim(self.dim())?;
        self.function.evaluate(&self.to_domain(x))
    }

    fn is_feasible(&self, x: &Decision) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match &self.constraint {
            Constraint::Matching(oracle) => oracle.contains(x),
            _ => self.domain_feasible(&self.to_domain(x)),
        }
    }

    fn noise_std(&self) -> f64 {
        self.noise_std
    }

    fn neighbor(&self, x: &Decision, rng: &mut Stream) -> Decision {
        perturb_coordinate(x, self.step, rng)
    }
}

/// Random-decoder implicit constraint: `n / 2` uniform latent samples pushed
/// through a freshly initialized decoder are the feasible decisions, `n / 2`
/// uniform points of the box are the infeasible ones. The oracle accepts
/// exactly the feasible list.
pub fn make_random_decoder_dataset(
    seed: RngSeed,
    n: usize,
    latent_dim: usize,
    d: usize,
) -> Result<(Dataset, MatchingOracle)> {
    if n % 2 != 0 {
        return Err(Error::InvalidConfig(format!("dataset size must be even, got {n}")));
    }
    let config = CvaeConfig {
        latent_dim,
        ..CvaeConfig::default()
    };
    let decoder = CvaeModel::new(d, config, &mut seed.stream("random-decoder/init"))?;
    let mut latent_rng = seed.stream("random-decoder/latent");
    let feasible: Vec<Decision> = (0..n / 2)
        .map(|_| {
            let z: Vec<f64> = (0..latent_dim).map(|_| latent_rng.random::<f64>()).collect();
            decoder.decode(&z, true)
        })
        .collect::<Result<_>>()?;
    let oracle = MatchingOracle::new(feasible.clone(), MatchingOracle::DEFAULT_TOLERANCE);

    let mut rng = seed.stream("random-decoder/infeasible");
    let mut items: Vec<LabeledDecision> = feasible
        .into_iter()
        .map(|x| LabeledDecision::new(x, true))
        .collect();
    while items.len() < n {
        let x = Decision::clamped((0..d).map(|_| rng.random::<f64>()).collect());
        if !oracle.contains(&x) {
            items.push(LabeledDecision::new(x, false));
        }
    }
    Ok((Dataset::new(d, items)?, oracle))
}

/// `n` uniform points of the unit box labeled by the problem's oracle.
pub fn label_uniform_samples(problem: &dyn Problem, n: usize, seed: RngSeed) -> Result<Dataset> {
    let d = problem.dim();
    let mut rng = seed.stream("uniform-dataset");
    let items = (0..n)
        .map(|_| {
            let x = Decision::clamped((0..d).map(|_| rng.random::<f64>()).collect());
            let c = problem.is_feasible(&x);
            LabeledDecision::new(x, c)
        })
        .collect();
    Dataset::new(d, items)
}

#[cfg(test)]
mod tests;
