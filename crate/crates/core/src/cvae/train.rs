use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{Adam, CvaeConfig, CvaeModel, LossWeights};
use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::types::{Dataset, LabeledDecision};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean weighted negative ELBO over the epoch's minibatches.
    pub loss: f64,
    /// Mean unweighted reconstruction term.
    pub reconstruction: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// ELBO estimates per epoch (negated losses).
    pub fn elbo(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| -e.loss).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,reconstruction,kl\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.loss, e.reconstruction, e.kl));
        }
        out
    }
}

/// Reconstruction weights: w(1) from the config, w(0) either explicit or the
/// feasible-to-infeasible ratio.
pub(crate) fn resolve_weights(config: &CvaeConfig, items: &[LabeledDecision]) -> LossWeights {
    let n_feasible = items.iter().filter(|i| i.feasible).count();
    let n_infeasible = items.len() - n_feasible;
    let infeasible = config.weight_infeasible.unwrap_or(if n_infeasible == 0 {
        1.0
    } else {
        n_feasible as f64 / n_infeasible as f64
    });
    LossWeights {
        feasible: config.weight_feasible,
        infeasible,
    }
}

/// Trains a model on `dataset` with Adam. Unconditional configs see only the
/// feasible items.
pub fn train(dataset: &Dataset, config: &CvaeConfig) -> Result<(CvaeModel, TrainReport)> {
    config.validate()?;
    let items: Vec<LabeledDecision> = if config.conditional {
        dataset.items().to_vec()
    } else {
        dataset.items().iter().filter(|i| i.feasible).cloned().collect()
    };
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let weights = resolve_weights(config, &items);

    let seed = RngSeed(config.seed);
    let mut model = CvaeModel::new(dataset.dim(), config.clone(), &mut seed.stream("cvae/init"))?;
    let mut shuffle_rng = seed.stream("cvae/shuffle");
    let mut eps_rng = seed.stream("cvae/eps");
    let mut adam = Adam::new(model.parameter_count(), config.learning_rate);
    let mut report = TrainReport::default();
    let dz = config.latent_dim;

    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss, mut recon, mut kl) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| items[i].clone()));
            let eps: Vec<Vec<f64>> = (0..batch.len())
                .map(|_| (0..dz).map(|_| eps_rng.sample(StandardNormal)).collect())
                .collect();
            let eval = model.elbo_loss(&batch, &eps, weights)?;
            if !eval.loss.is_finite() || eval.gradient.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergedTraining { epoch });
            }
            let share = batch.len() as f64 / items.len() as f64;
            loss += eval.loss * share;
            recon += eval.reconstruction * share;
            kl += eval.kl * share;
            model.apply_update(&mut adam, &eval.gradient);
        }
        report.epochs.push(EpochStats {
            epoch,
            loss,
            reconstruction: recon,
            kl,
        });
    }
    Ok((model, report))
}
