use proptest::prelude::*;

use super::*;
use crate::rng::RngSeed;
use crate::types::Dataset;

fn tiny_config(latent: usize, hidden: usize) -> CvaeConfig {
    CvaeConfig {
        latent_dim: latent,
        encoder_hidden: Some(vec![hidden]),
        decoder_hidden: Some(vec![hidden]),
        ..CvaeConfig::default()
    }
}

fn dec(v: &[f64]) -> Decision {
    Decision::new(v.to_vec()).unwrap()
}

/// Plain-loop forward pass over serialized layer slices.
fn oracle_forward(layers: &[&[f64]], sizes: &[usize], input: &[f64]) -> Vec<f64> {
    let mut a = input.to_vec();
    for (l, layer) in layers.iter().enumerate() {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let mut next = vec![0.0; n_out];
        for o in 0..n_out {
            let mut s = layer[n_in * n_out + o];
            for i in 0..n_in {
                s += layer[o * n_in + i] * a[i];
            }
            next[o] = if l + 1 < layers.len() { s.tanh() } else { s };
        }
        a = next;
    }
    a
}

#[test]
fn zero_model_encodes_to_prior_and_decodes_to_half() {
    let model = CvaeModel::zeros(3, tiny_config(2, 4)).unwrap();
    let q = model.encode(&[0.1, 0.9, 0.3], true).unwrap();
    assert_eq!(q.mean, vec![0.0, 0.0]);
    assert_eq!(q.log_var, vec![0.0, 0.0]);
    assert_eq!(model.decode(&[1.3, -2.0], false).unwrap().as_slice(), &[0.5, 0.5, 0.5]);
}

#[test]
fn wrong_lengths_are_rejected() {
    let model = CvaeModel::zeros(3, tiny_config(2, 4)).unwrap();
    assert!(matches!(
        model.encode(&[0.1, 0.2], true),
        Err(Error::DimensionMismatch { expected: 3, got: 2 })
    ));
    assert!(matches!(
        model.decode(&[0.1, 0.2, 0.3], true),
        Err(Error::DimensionMismatch { expected: 2, got: 3 })
    ));
    let q = LatentGaussian { mean: vec![0.0], log_var: vec![0.0] };
    assert!(q.reparameterize(&[1.0, 2.0]).is_err());
}

#[test]
fn forward_passes_match_plain_loop_oracle() {
    let model = CvaeModel::new(4, tiny_config(3, 5), &mut RngSeed(11).stream("t")).unwrap();
    let x = [0.2, 0.7, 0.1, 0.95];
    for &c in &[false, true] {
        let mut input = x.to_vec();
        input.extend_from_slice(if c { &[0.0, 1.0] } else { &[1.0, 0.0] });
        let expect = oracle_forward(&model.encoder.layer_slices(), model.encoder.sizes(), &input);
        let q = model.encode(&x, c).unwrap();
        for i in 0..3 {
            assert!((q.mean[i] - expect[i]).abs() < 1e-14);
            assert!((q.log_var[i] - expect[3 + i]).abs() < 1e-14);
        }

        let z = [0.3, -1.2, 0.8];
        let mut input = z.to_vec();
        input.extend_from_slice(if c { &[0.0, 1.0] } else { &[1.0, 0.0] });
        let logits = oracle_forward(&model.decoder.layer_slices(), model.decoder.sizes(), &input);
        let out = model.decode(&z, c).unwrap();
        for (o, a) in out.iter().zip(&logits) {
            assert!((o - 1.0 / (1.0 + (-a).exp())).abs() < 1e-14);
        }
    }
}

#[test]
fn reparameterize_examples() {
    let q = LatentGaussian { mean: vec![0.4, -1.0], log_var: vec![0.3, 2.0] };
    assert_eq!(q.reparameterize(&[0.0, 0.0]).unwrap(), q.mean);
    let std = LatentGaussian { mean: vec![0.0, 0.0], log_var: vec![0.0, 0.0] };
    assert_eq!(std.reparameterize(&[0.7, -0.2]).unwrap(), vec![0.7, -0.2]);
    let q = LatentGaussian { mean: vec![1.0], log_var: vec![2.0 * 2f64.ln()] };
    assert!((q.reparameterize(&[0.5]).unwrap()[0] - 2.0).abs() < 1e-15);
}

#[test]
fn kl_examples() {
    let zero = LatentGaussian { mean: vec![0.0; 3], log_var: vec![0.0; 3] };
    assert_eq!(zero.kl_to_standard_normal(), 0.0);
    let shifted = LatentGaussian { mean: vec![1.0], log_var: vec![0.0] };
    assert!((shifted.kl_to_standard_normal() - 0.5).abs() < 1e-15);
    // KL(N(0, 4) || N(0, 1)) by midpoint quadrature of q log(q / p) on [-25, 25].
    let (n, lo, hi) = (400_000, -25.0f64, 25.0f64);
    let h = (hi - lo) / n as f64;
    let quad: f64 = (0..n)
        .map(|i| {
            let x = lo + (i as f64 + 0.5) * h;
            let q = (-x * x / 8.0).exp() / (8.0 * std::f64::consts::PI).sqrt();
            let p = (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            q * (q / p).ln() * h
        })
        .sum();
    let wide = LatentGaussian { mean: vec![0.0], log_var: vec![4f64.ln()] };
    assert!((quad - 0.806_852_819_440_054_7).abs() < 1e-9);
    assert!((wide.kl_to_standard_normal() - quad).abs() < 1e-9);
}

#[test]
fn perfect_autoencoder_with_prior_posterior_has_zero_loss() {
    let x = [0.25f64, 0.6];
    let mut model = CvaeModel::zeros(2, tiny_config(1, 3)).unwrap();
    // Output biases sit at the end of the parameter vector.
    let mut p = model.parameters();
    let n = p.len();
    p[n - 2] = (x[0] / (1.0 - x[0])).ln();
    p[n - 1] = (x[1] / (1.0 - x[1])).ln();
    model.set_parameters(&p).unwrap();
    let batch = [LabeledDecision::new(dec(&x), true)];
    let eval = model.elbo_loss(&batch, &[vec![0.9]], LossWeights::UNIT).unwrap();
    assert!(eval.loss.abs() < 1e-20, "loss {}", eval.loss);
}

#[test]
fn zero_kl_weight_leaves_weighted_reconstruction() {
    let config = CvaeConfig { kl_weight: 0.0, ..tiny_config(2, 4) };
    let model = CvaeModel::new(3, config, &mut RngSeed(3).stream("t")).unwrap();
    let batch = [
        LabeledDecision::new(dec(&[0.1, 0.5, 0.9]), true),
        LabeledDecision::new(dec(&[0.7, 0.2, 0.4]), false),
    ];
    let eps = vec![vec![0.3, -0.4], vec![1.1, 0.2]];
    let w = LossWeights { feasible: 1.0, infeasible: 0.25 };
    let eval = model.elbo_loss(&batch, &eps, w).unwrap();
    let mut expect = 0.0;
    for (item, e) in batch.iter().zip(&eps) {
        let z = model.encode(&item.decision, item.feasible).unwrap().reparameterize(e).unwrap();
        let xh = model.decode(&z, item.feasible).unwrap();
        let se: f64 = xh.iter().zip(item.decision.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        expect += if item.feasible { se } else { 0.25 * se };
    }
    assert!((eval.loss - expect / 2.0).abs() < 1e-14);
}

#[test]
fn empty_batch_errors() {
    let model = CvaeModel::zeros(2, tiny_config(1, 2)).unwrap();
    assert!(matches!(model.elbo_loss(&[], &[], LossWeights::UNIT), Err(Error::EmptyBatch)));
}

fn finite_difference_max_rel_error(
    model: &CvaeModel,
    batch: &[LabeledDecision],
    eps: &[Vec<f64>],
    w: LossWeights,
) -> f64 {
    let grad = model.elbo_loss(batch, eps, w).unwrap().gradient;
    let base = model.parameters();
    let mut probe = model.clone();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, g) in grad.iter().enumerate() {
        let mut p = base.clone();
        p[k] += h;
        probe.set_parameters(&p).unwrap();
        let up = probe.elbo_loss(batch, eps, w).unwrap().loss;
        p[k] -= 2.0 * h;
        probe.set_parameters(&p).unwrap();
        let down = probe.elbo_loss(batch, eps, w).unwrap().loss;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-5);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn gradient_matches_finite_differences_on_2_4_2() {
    for (mode, seed) in [(Reconstruction::SquaredError, 5), (Reconstruction::Bernoulli, 6)] {
        let config = CvaeConfig { reconstruction: mode, ..tiny_config(2, 4) };
        let model = CvaeModel::new(2, config, &mut RngSeed(seed).stream("t")).unwrap();
        let batch = [
            LabeledDecision::new(dec(&[0.2, 0.8]), true),
            LabeledDecision::new(dec(&[0.9, 0.1]), false),
            LabeledDecision::new(dec(&[0.5, 0.4]), true),
        ];
        let eps = vec![vec![0.5, -1.0], vec![-0.3, 0.2], vec![1.4, 0.7]];
        let w = LossWeights { feasible: 1.0, infeasible: 0.6 };
        let err = finite_difference_max_rel_error(&model, &batch, &eps, w);
        assert!(err < 1e-4, "{mode:?}: max relative error {err}");
    }
}

fn single_point_dataset() -> Dataset {
    let items = (0..200).map(|_| LabeledDecision::new(dec(&[0.3, 0.8]), true)).collect();
    Dataset::new(2, items).unwrap()
}

#[test]
fn zero_epochs_returns_initialized_model() {
    let config = CvaeConfig { epochs: 0, seed: 9, ..tiny_config(1, 4) };
    let (model, report) = train(&single_point_dataset(), &config).unwrap();
    let fresh = CvaeModel::new(2, config, &mut RngSeed(9).stream("cvae/init")).unwrap();
    assert_eq!(model, fresh);
    assert!(report.is_empty());
}

#[test]
fn memorizes_a_repeated_point() {
    let config = CvaeConfig {
        latent_dim: 1,
        epochs: 1000,
        batch_size: 32,
        learning_rate: 1e-3,
        seed: 1,
        ..CvaeConfig::default()
    };
    let (model, report) = train(&single_point_dataset(), &config).unwrap();
    assert_eq!(report.len(), 1000);
    let recon = model.reconstruct(&[0.3, 0.8], true).unwrap();
    let err = (recon[0] - 0.3).powi(2) + (recon[1] - 0.8).powi(2);
    assert!(err < 1e-2, "reconstruction error {err}");
    assert!(report.epochs.last().unwrap().reconstruction < 1e-2);
}

#[test]
fn training_is_deterministic_in_seed() {
    let config = CvaeConfig { epochs: 5, seed: 4, ..tiny_config(1, 4) };
    let a = train(&single_point_dataset(), &config).unwrap();
    let b = train(&single_point_dataset(), &config).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let other = train(&single_point_dataset(), &CvaeConfig { seed: 5, ..config }).unwrap();
    assert_ne!(a.0, other.0);
}

#[test]
fn unconditional_training_needs_feasible_items() {
    let items = vec![LabeledDecision::new(dec(&[0.1, 0.1]), false)];
    let ds = Dataset::new(2, items).unwrap();
    let config = CvaeConfig { conditional: false, epochs: 1, ..tiny_config(1, 2) };
    assert!(matches!(train(&ds, &config), Err(Error::EmptyDataset)));
    let empty = Dataset::new(2, vec![]).unwrap();
    assert!(matches!(train(&empty, &tiny_config(1, 2)), Err(Error::EmptyDataset)));
}

#[test]
fn class_balancing_weight_default() {
    let items = vec![
        LabeledDecision::new(dec(&[0.1]), true),
        LabeledDecision::new(dec(&[0.1]), false),
        LabeledDecision::new(dec(&[0.1]), false),
        LabeledDecision::new(dec(&[0.1]), false),
        LabeledDecision::new(dec(&[0.1]), false),
    ];
    let w = train::resolve_weights(&CvaeConfig::default(), &items);
    assert_eq!(w, LossWeights { feasible: 1.0, infeasible: 0.25 });
    let explicit = CvaeConfig { weight_infeasible: Some(2.0), ..CvaeConfig::default() };
    assert_eq!(train::resolve_weights(&explicit, &items).infeasible, 2.0);
}

#[test]
fn sampling_contract() {
    let model = CvaeModel::new(2, tiny_config(2, 4), &mut RngSeed(2).stream("t")).unwrap();
    let pool = vec![dec(&[0.2, 0.4])];
    let mut rng = RngSeed(1).stream("s");
    let means = sample_feasible_latents_scaled(&model, &pool, 1, &mut rng, 0.0).unwrap();
    assert_eq!(means, vec![model.encode(&pool[0], true).unwrap().mean]);
    assert_eq!(sample_feasible_latents(&model, &pool, 512, &mut rng).unwrap().len(), 512);
    let degenerate = sample_feasible_latents_scaled(&model, &pool, 4, &mut rng, 0.0).unwrap();
    assert!(degenerate.windows(2).all(|w| w[0] == w[1]));
    assert!(matches!(
        sample_feasible_latents(&model, &[], 3, &mut rng),
        Err(Error::EmptyFeasibleSet)
    ));
}

#[test]
fn model_json_round_trip_preserves_outputs() {
    let config = CvaeConfig { reconstruction: Reconstruction::Bernoulli, ..tiny_config(3, 5) };
    let model = CvaeModel::new(4, config, &mut RngSeed(8).stream("t")).unwrap();
    let text = model.to_json().unwrap();
    assert!(text.starts_with(r#"{"version":1,"config":{"input_dim":4,"#));
    let back = CvaeModel::from_json(&text).unwrap();
    assert_eq!(back, model);
    let probe = [0.1, 0.2, 0.3, 0.4];
    assert_eq!(back.encode(&probe, true).unwrap(), model.encode(&probe, true).unwrap());
    let bumped = text.replacen(r#""version":1"#, r#""version":2"#, 1);
    assert!(matches!(CvaeModel::from_json(&bumped), Err(Error::UnsupportedVersion(2))));
}

#[test]
fn config_validation() {
    let bad = [
        CvaeConfig { latent_dim: 0, ..CvaeConfig::default() },
        CvaeConfig { kl_weight: -1.0, ..CvaeConfig::default() },
        CvaeConfig { learning_rate: 0.0, ..CvaeConfig::default() },
        CvaeConfig { weight_infeasible: Some(-0.1), ..CvaeConfig::default() },
    ];
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }
    assert_eq!(CvaeConfig::default().resolved_encoder_hidden(), vec![40, 40]);
    let small = CvaeConfig { latent_dim: 2, ..CvaeConfig::default() };
    assert_eq!(small.resolved_decoder_hidden(), vec![32, 32]);
}

proptest! {
    #[test]
    fn kl_is_non_negative(
        params in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..6)
    ) {
        let (mean, log_var): (Vec<f64>, Vec<f64>) = params.into_iter().unzip();
        let q = LatentGaussian { mean, log_var };
        prop_assert!(q.kl_to_standard_normal() >= 0.0);
    }

    #[test]
    fn decoded_means_stay_in_unit_box(
        x in proptest::collection::vec(0.0f64..=1.0, 3),
        seed in 0u64..50,
        c in any::<bool>(),
    ) {
        let model = CvaeModel::new(3, tiny_config(2, 4), &mut RngSeed(seed).stream("p")).unwrap();
        let out = model.reconstruct(&x, c).unwrap();
        prop_assert_eq!(out.dim(), 3);
        prop_assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
