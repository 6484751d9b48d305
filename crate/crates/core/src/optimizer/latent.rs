//! GP-LCB in the latent space of a (conditional) VAE.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cvae::{sample_feasible_latents_scaled, train, CvaeConfig, CvaeModel};
use crate::error::{Error, Result};
use crate::gp::{fit, GpState, Hyperparameters};
use crate::problem::Problem;
use crate::rng::{RngSeed, Stream};
use crate::types::{Dataset, Decision};

use super::session::Session;
use super::{nearest_index, CageboConfig, MethodSettings, Optimizer, RunResult};

/// Outcome of evaluating a latent point.
#[derive(Debug, Clone, PartialEq)]
pub struct Indirect {
    pub value: f64,
    /// The decision actually evaluated.
    pub decision: Decision,
    pub projected: bool,
}

/// Decodes `z` under the feasible label and evaluates the result, or its
/// nearest pool member when the oracle rejects it. `evaluate` is the
/// (possibly noisy) objective. The pool is not modified; callers append
/// `decision` when `projected` is false.
pub fn indirect_objective<E>(
    z: &[f64],
    model: &CvaeModel,
    problem: &dyn Problem,
    pool: &[Decision],
    mut evaluate: E,
) -> Result<Indirect>
where
    E: FnMut(&Decision) -> Result<f64>,
{
    let (decision, projected) = indirect_decision(z, model, problem, pool)?;
    Ok(Indirect {
        value: evaluate(&decision)?,
        decision,
        projected,
    })
}

/// The decision `indirect_objective` would evaluate at `z`, and whether it
/// was projected.
pub fn indirect_decision(
    z: &[f64],
    model: &CvaeModel,
    problem: &dyn Problem,
    pool: &[Decision],
) -> Result<(Decision, bool)> {
    if pool.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    let x = problem.canonicalize(&model.decode(z, true)?);
    if problem.is_feasible(&x) {
        Ok((x, false))
    } else {
        Ok((pool[nearest_index(&x, pool)?].clone(), true))
    }
}

/// CageBO (conditional model) or VAE-BO (unconditional model).
#[derive(Debug, Clone)]
pub struct LatentBo {
    name: &'static str,
    cvae: CvaeConfig,
    search: CageboConfig,
    pretrained: Option<Arc<CvaeModel>>,
}

impl LatentBo {
    pub fn cagebo(settings: &MethodSettings) -> Result<Self> {
        Self::build("cagebo", true, settings)
    }

    pub fn vae_bo(settings: &MethodSettings) -> Result<Self> {
        Self::build("vae-bo", false, settings)
    }

    fn build(name: &'static str, conditional: bool, settings: &MethodSettings) -> Result<Self> {
        settings.optimizer.search.validate()?;
        let cvae = CvaeConfig {
            conditional,
            ..settings.cvae.clone()
        };
        cvae.validate()?;
        Ok(LatentBo {
            name,
            cvae,
            search: settings.optimizer.search.clone(),
            pretrained: settings.pretrained.clone(),
        })
    }
}

impl LatentBo {
    /// LCB minimizer over the candidates, refined locally. With
    /// `skip_repeats`, falls back down the LCB ranking to the first
    /// candidate whose decision has not been evaluated yet.
    #[allow(clippy::too_many_arguments)]
    fn choose(
        &self,
        gp: &GpState,
        candidates: &[Vec<f64>],
        beta: f64,
        model: &CvaeModel,
        problem: &dyn Problem,
        pool: &[Decision],
        seen: &HashSet<Vec<u64>>,
        rng: &mut Stream,
    ) -> Result<Vec<f64>> {
        let (first, z) = gp.select_candidate(candidates, beta)?;
        let z = refine_acquisition(gp, z.to_vec(), beta, &self.search, rng)?;
        if !self.search.skip_repeats || !seen.contains(&key(&indirect_decision(&z, model, problem, pool)?.0)) {
            return Ok(z);
        }
        let mut ranked: Vec<(f64, usize)> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != first)
            .map(|(i, c)| gp.lcb(c, beta).map(|s| (s, i)))
            .collect::<Result<_>>()?;
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, i) in ranked {
            if !seen.contains(&key(&indirect_decision(&candidates[i], model, problem, pool)?.0)) {
                return Ok(candidates[i].clone());
            }
        }
        Ok(z)
    }
}

fn key(x: &Decision) -> Vec<u64> {
    x.as_slice().iter().map(|v| v.to_bits()).collect()
}

impl Optimizer for LatentBo {
    fn name(&self) -> &'static str {
        self.name
    }

    fn run(&self, dataset: &Dataset, problem: &dyn Problem, seed: RngSeed) -> Result<RunResult> {
        let start = Instant::now();
        // Check the data before paying for training.
        let mut session = Session::start(self.name, dataset, problem, seed, self.search.initial, start)?;
        let model = match &self.pretrained {
            Some(m) => m.as_ref().clone(),
            None => {
                let config = CvaeConfig {
                    seed: seed.derive("cvae").0,
                    ..self.cvae.clone()
                };
                let (model, report) = train(dataset, &config)?;
                session.training = Some(report);
                model
            }
        };
        if model.input_dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: model.input_dim(),
            });
        }

        let mut latents: Vec<Vec<f64>> = session
            .initial()
            .iter()
            .map(|r| model.encode(&r.decision, true).map(|q| q.mean))
            .collect::<Result<_>>()?;
        let mut values: Vec<f64> = session.initial().iter().map(|r| r.value).collect();
        session.set_initial_latents(latents.clone());

        let mut rng = seed.stream("candidates");
        let mut local_rng = seed.stream("refine");
        let mut seen: HashSet<Vec<u64>> = session.initial().iter().map(|r| key(&r.decision)).collect();
        for t in 1..=self.search.iterations {
            let gp = fit(&latents, &values, Hyperparameters::Auto)?;
            let candidates = sample_feasible_latents_scaled(
                &model,
                session.pool(),
                self.search.candidates,
                &mut rng,
                self.search.latent_spread,
            )?;
            let beta = self.search.beta.beta(t, candidates.len());
            let pool = session.pool().to_vec();
            let z = self.choose(&gp, &candidates, beta, &model, problem, &pool, &seen, &mut local_rng)?;
            let out = indirect_objective(&z, &model, problem, &pool, |x| session.evaluate(x))?;
            if !out.projected {
                session.add_feasible(&out.decision);
            }
            seen.insert(key(&out.decision));
            session.record(Some(z.clone()), out.decision, out.projected, out.value);
            latents.push(z);
            values.push(out.value);
        }
        Ok(session.finish())
    }
}

/// Shrinking random local search on the LCB around `start`; keeps `start`
/// unless a perturbation scores strictly lower.
pub(crate) fn refine_acquisition(
    gp: &GpState,
    start: Vec<f64>,
    beta: f64,
    search: &CageboConfig,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    let per_round = (search.candidates / 8).max(1);
    let mut best = start;
    let mut score = gp.lcb(&best, beta)?;
    let mut step = search.refine_scale;
    for _ in 0..search.refine_rounds {
        if step == 0.0 {
            break;
        }
        let local: Vec<Vec<f64>> = (0..per_round)
            .map(|_| {
                best.iter()
                    .map(|c| c + step * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let (_, z) = gp.select_candidate(&local, beta)?;
        let s = gp.lcb(z, beta)?;
        if s < score {
            score = s;
            best = z.to_vec();
        }
        step *= 0.5;
    }
    Ok(best)
}
