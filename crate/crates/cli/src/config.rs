//! Experiment configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use cagebo_core::cvae::{CvaeConfig, Reconstruction};
use cagebo_core::objectives::{
    label_uniform_samples, make_random_decoder_dataset, Constraint, MatchingOracle, SyntheticProblem,
    SyntheticProblemSpec,
};
use cagebo_core::optimizer::OptimizerConfig;
use cagebo_core::redistricting::{
    atlanta_like_instance, generate_labeled_plans, grid_instance, DistrictingInstance, DistrictingProblem,
};
use cagebo_core::{Dataset, Error, Problem, RngSeed};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    /// Dataset file; `<output_dir>/dataset.json` when omitted.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    /// Pretrained model for the latent methods. Without it every seed
    /// trains its own model.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default = "default_method")]
    pub method: String,
    /// Fields of the model configuration; the reconstruction likelihood
    /// follows the problem unless given.
    #[serde(default)]
    pub cvae: Map<String, Value>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Seed of dataset generation.
    #[serde(default)]
    pub data_seed: u64,
    pub output_dir: PathBuf,
}

fn default_method() -> String {
    "cagebo".into()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Synthetic {
        function: String,
        d: usize,
        #[serde(default)]
        lower: Option<Vec<f64>>,
        #[serde(default)]
        upper: Option<Vec<f64>>,
        #[serde(default)]
        noise_std: f64,
        #[serde(default)]
        constraint: ConstraintConfig,
        /// Number of labeled samples to generate.
        #[serde(default = "default_samples")]
        n: usize,
    },
    Districting {
        instance: InstanceConfig,
        #[serde(default = "default_samples")]
        n: usize,
        /// Maximum number of border moves away from the base plan.
        #[serde(default = "default_radius")]
        radius: usize,
    },
}

fn default_samples() -> usize {
    2000
}

fn default_radius() -> usize {
    3
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintConfig {
    #[default]
    None,
    /// Ball in domain coordinates; centered with 30% of the smallest
    /// half-width by default.
    Disk {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        radius: Option<f64>,
    },
    /// Feasible decisions are decoder images of uniform latent samples;
    /// the oracle matches against the dataset's feasible items.
    RandomDecoder {
        #[serde(default = "default_decoder_latent")]
        latent_dim: usize,
    },
}

fn default_decoder_latent() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    File { path: PathBuf },
    Grid {
        width: usize,
        height: usize,
        zones: usize,
        #[serde(default)]
        seed: u64,
    },
    Atlanta {
        #[serde(default = "default_regions")]
        regions: usize,
        #[serde(default = "default_zones")]
        zones: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_regions() -> usize {
    78
}

fn default_zones() -> usize {
    6
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must not be empty".into()));
        }
        self.optimizer.validate()?;
        self.cvae_config(Reconstruction::SquaredError)?;
        if let ProblemConfig::Districting {
            instance: InstanceConfig::File { path },
            ..
        } = &self.problem
        {
            if !path.exists() {
                return Err(Error::InvalidConfig(format!("instance file {} not found", path.display())));
            }
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| self.output_dir.join("dataset.json"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.output_dir.join("model.json"))
    }

    /// The `cvae` block with the problem's likelihood filled in.
    pub fn cvae_config(&self, problem_default: Reconstruction) -> Result<CvaeConfig, Error> {
        let mut block = self.cvae.clone();
        if !block.contains_key("reconstruction") {
            block.insert(
                "reconstruction".into(),
                serde_json::to_value(problem_default).expect("enum serializes"),
            );
        }
        let config: CvaeConfig = serde_json::from_value(Value::Object(block))
            .map_err(|e| Error::InvalidConfig(format!("cvae: {e}")))?;
        config.validate()?;
        Ok(config)
    }
}

/// A problem ready to optimize, plus what its commands need to know.
pub enum Built {
    Synthetic(SyntheticProblem),
    Districting(DistrictingProblem),
}

impl Built {
    pub fn problem(&self) -> &dyn Problem {
        match self {
            Built::Synthetic(p) => p,
            Built::Districting(p) => p,
        }
    }
}

impl ProblemConfig {
    pub fn instance(&self) -> anyhow::Result<Option<DistrictingInstance>> {
        let ProblemConfig::Districting { instance, .. } = self else {
            return Ok(None);
        };
        let inst = match instance {
            InstanceConfig::File { path } => DistrictingInstance::load(path)
                .with_context(|| format!("loading instance {}", path.display()))?,
            InstanceConfig::Grid {
                width,
                height,
                zones,
                seed,
            } => grid_instance(*width, *height, *zones, RngSeed(*seed))?,
            InstanceConfig::Atlanta { regions, zones, seed } => {
                atlanta_like_instance(*regions, *zones, RngSeed(*seed))?
            }
        };
        Ok(Some(inst))
    }

    fn synthetic(&self, constraint: Constraint) -> anyhow::Result<SyntheticProblem> {
        let ProblemConfig::Synthetic {
            function,
            d,
            lower,
            upper,
            noise_std,
            ..
        } = self
        else {
            unreachable!("called on a synthetic block");
        };
        let spec = SyntheticProblemSpec {
            function: function.clone(),
            d: *d,
            lower: lower.clone(),
            upper: upper.clone(),
            noise_std: *noise_std,
        };
        Ok(SyntheticProblem::from_spec(&spec, constraint)?)
    }

    fn disk(&self, center: &Option<Vec<f64>>, radius: &Option<f64>) -> anyhow::Result<Constraint> {
        let probe = self.synthetic(Constraint::Unconstrained)?;
        let (lo, hi) = probe.bounds();
        let Constraint::Disk {
            center: c0,
            radius: r0,
        } = Constraint::default_disk(lo, hi)
        else {
            unreachable!()
        };
        Ok(Constraint::Disk {
            center: center.clone().unwrap_or(c0),
            radius: radius.unwrap_or(r0),
        })
    }

    /// Generates the labeled dataset.
    pub fn generate(&self, seed: RngSeed) -> anyhow::Result<Dataset> {
        match self {
            ProblemConfig::Synthetic { d, constraint, n, .. } => match constraint {
                ConstraintConfig::RandomDecoder { latent_dim } => {
                    Ok(make_random_decoder_dataset(seed, *n, *latent_dim, *d)?.0)
                }
                ConstraintConfig::None => {
                    let p = self.synthetic(Constraint::Unconstrained)?;
                    Ok(label_uniform_samples(&p, *n, seed)?)
                }
                ConstraintConfig::Disk { center, radius } => {
                    let p = self.synthetic(self.disk(center, radius)?)?;
                    Ok(label_uniform_samples(&p, *n, seed)?)
                }
            },
            ProblemConfig::Districting { n, radius, .. } => {
                let inst = self.instance()?.expect("districting block");
                let base = inst
                    .base_plan()
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfig("instance has no base_plan".into()))?;
                Ok(generate_labeled_plans(&inst, &base, *n, seed, *radius)?)
            }
        }
    }

    /// Builds the problem; random-decoder oracles match the dataset's
    /// feasible items.
    pub fn build(&self, dataset: &Dataset) -> anyhow::Result<Built> {
        match self {
            ProblemConfig::Synthetic { constraint, .. } => {
                let c = match constraint {
                    ConstraintConfig::None => Constraint::Unconstrained,
                    ConstraintConfig::Disk { center, radius } => self.disk(center, radius)?,
                    ConstraintConfig::RandomDecoder { .. } => Constraint::Matching(MatchingOracle::new(
                        dataset.feasible_subset()?,
                        MatchingOracle::DEFAULT_TOLERANCE,
                    )),
                };
                Ok(Built::Synthetic(self.synthetic(c)?))
            }
            ProblemConfig::Districting { .. } => Ok(Built::Districting(DistrictingProblem::new(
                self.instance()?.expect("districting block"),
            ))),
        }
    }
}
