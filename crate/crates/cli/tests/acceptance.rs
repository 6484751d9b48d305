//! Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
//! as arguments to run a subset.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use cagebo_core::cvae::{CvaeConfig, CvaeModel, LossWeights, Reconstruction};
use cagebo_core::gp::{fit, Hyperparameters, KernelParams};
use cagebo_core::objectives::{
    ackley, grid_refine_minimum, keane_bump, label_uniform_samples, michalewicz, Constraint, SyntheticProblem,
    SyntheticProblemSpec,
};
use cagebo_core::optimizer::report::median;
use cagebo_core::optimizer::{post_decode, CageboConfig, MethodSettings, OptimizerConfig, Registry, RunResult};
use cagebo_core::redistricting::{
    generate_labeled_plans, grid_instance, hypercube_steady_state_with, DistrictingInstance, DistrictingProblem,
    Solver,
};
use cagebo_core::rng::Stream;
use cagebo_core::{Dataset, Decision, LabeledDecision, Problem, RngSeed};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "GP posterior vs dense inverse", Duration::from_secs(5), gp_oracle),
        (2, "CVAE gradient vs finite differences", Duration::from_secs(30), cvae_gradient),
        (3, "hypercube model correctness", Duration::from_secs(10), hypercube),
        (4, "test-function fidelity", Duration::from_secs(30), test_functions),
        (5, "Ackley disk: CageBO vs SA", Duration::from_secs(120), ackley_disk),
        (6, "6x6 districting: CageBO vs baselines", Duration::from_secs(900), districting),
        (7, "feasibility of fresh decodes vs training size", Duration::from_secs(1200), ablation),
        (8, "post-decode contract", Duration::from_secs(5), post_decode_contract),
        (9, "optimize determinism", Duration::from_secs(120), determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n}: {} {name}: {} [{:.1}s of {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

fn matern52(p: &KernelParams, a: &[f64], b: &[f64]) -> f64 {
    let r = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let s = 5f64.sqrt() * r / p.lengthscale;
    p.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn gp_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for inst in 0..20u64 {
        let mut rng = RngSeed(inst).stream("acceptance/gp");
        let m = rng.random_range(1..=10);
        let dz = rng.random_range(1..=5);
        let pts: Vec<Vec<f64>> = (0..m).map(|_| (0..dz).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let hyper = if inst % 2 == 0 {
            Hyperparameters::Auto
        } else {
            Hyperparameters::Fixed(
                KernelParams::new(rng.random_range(0.3..2.0), rng.random_range(0.5..2.0), 1e-4).unwrap(),
            )
        };
        let state = fit(&pts, &ys, hyper).unwrap();
        let p = *state.params();
        let (y_mean, y_scale) = state.standardization();
        let k = DMatrix::from_fn(m, m, |i, j| {
            matern52(&p, &pts[i], &pts[j]) + if i == j { p.noise_variance + state.jitter() } else { 0.0 }
        });
        let inv = k.try_inverse().expect("covariance is invertible");
        let y = DVector::from_iterator(m, ys.iter().map(|v| (v - y_mean) / y_scale));
        let probes: Vec<Vec<f64>> = (0..10).map(|_| (0..dz).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        for z in pts.iter().chain(&probes) {
            let ks = DVector::from_iterator(m, pts.iter().map(|q| matern52(&p, q, z)));
            let mean = y_mean + y_scale * (ks.transpose() * &inv * &y)[(0, 0)];
            let var = p.signal_variance - (ks.transpose() * &inv * &ks)[(0, 0)];
            let sd = y_scale * var.max(0.0).sqrt();
            let (mu, s) = state.posterior(z).unwrap();
            worst = worst.max((mu - mean).abs()).max((s - sd).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max |diff| {worst:.2e} over 20 instances (tol 1e-8)"))
}

// ---------------------------------------------------------------- 2

fn cvae_gradient() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut partials = 0;
    for net in 0..10u64 {
        let mut rng = RngSeed(net).stream("acceptance/cvae");
        let d = rng.random_range(1..=5);
        let dz = rng.random_range(1..=5);
        let hidden = |rng: &mut Stream| -> Vec<usize> {
            (0..rng.random_range(1..=2)).map(|_| rng.random_range(1..=5)).collect()
        };
        let config = CvaeConfig {
            latent_dim: dz,
            encoder_hidden: Some(hidden(&mut rng)),
            decoder_hidden: Some(hidden(&mut rng)),
            kl_weight: rng.random_range(0.05..1.0),
            reconstruction: if net % 2 == 0 {
                Reconstruction::SquaredError
            } else {
                Reconstruction::Bernoulli
            },
            conditional: net % 3 != 2,
            ..CvaeConfig::default()
        };
        let model = CvaeModel::new(d, config, &mut rng).unwrap();
        let b = rng.random_range(1..=4);
        let batch: Vec<LabeledDecision> = (0..b)
            .map(|_| {
                let x = (0..d).map(|_| rng.random_range(0.05..0.95)).collect();
                LabeledDecision::new(Decision::new(x).unwrap(), rng.random_bool(0.5))
            })
            .collect();
        let eps: Vec<Vec<f64>> = (0..b).map(|_| (0..dz).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
        let w = LossWeights {
            feasible: 1.0,
            infeasible: rng.random_range(0.2..1.0),
        };
        let grad = model.elbo_loss(&batch, &eps, w).unwrap().gradient;
        let base = model.parameters();
        let mut probe = model.clone();
        let h = 1e-5;
        for (k, g) in grad.iter().enumerate() {
            let mut p = base.clone();
            p[k] = base[k] + h;
            probe.set_parameters(&p).unwrap();
            let up = probe.elbo_loss(&batch, &eps, w).unwrap().loss;
            p[k] = base[k] - h;
            probe.set_parameters(&p).unwrap();
            let down = probe.elbo_loss(&batch, &eps, w).unwrap().loss;
            let fd = (up - down) / (2.0 * h);
            // Relative error with a floor so near-zero partials compare absolutely.
            worst = worst.max((fd - g).abs() / fd.abs().max(g.abs()).max(1e-5));
            partials += 1;
        }
    }
    outcome(
        worst <= 1e-4,
        format!("max relative error {worst:.2e} over {partials} partials (tol 1e-4)"),
    )
}

// ---------------------------------------------------------------- 3

fn zone_instance(seed: u64, n: usize) -> DistrictingInstance {
    let mut rng = RngSeed(seed).stream("acceptance/zone");
    let mut travel = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let t = rng.random_range(0.1..4.0);
            travel[a][b] = t;
            travel[b][a] = t;
        }
    }
    let lambda = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
    let mu = rng.random_range(0.3..3.0);
    let edges: Vec<[usize; 2]> = (1..n).map(|b| [b - 1, b]).collect();
    DistrictingInstance::new(1, &edges, travel, lambda, mu).unwrap()
}

/// Nearest idle unit, ties to the lower index; units are indexed like regions.
fn nearest_idle(inst: &DistrictingInstance, n: usize, state: usize, origin: usize) -> Option<usize> {
    (0..n)
        .filter(|k| state & (1 << k) == 0)
        .min_by(|&a, &b| inst.travel(a, origin).total_cmp(&inst.travel(b, origin)).then(a.cmp(&b)))
}

/// Builds the generator over all 2^n busy sets and solves pi Q = 0 with
/// one balance equation replaced by normalization.
fn brute_force_ctmc(inst: &DistrictingInstance, n: usize) -> Vec<f64> {
    let m = 1 << n;
    let mut q = DMatrix::<f64>::zeros(m, m);
    for s in 0..m {
        for origin in 0..n {
            if let Some(u) = nearest_idle(inst, n, s, origin) {
                q[(s, s | (1 << u))] += inst.arrival()[origin];
            }
        }
        for k in 0..n {
            if s & (1 << k) != 0 {
                q[(s, s & !(1 << k))] += inst.service_rate();
            }
        }
        let out: f64 = (0..m).filter(|&t| t != s).map(|t| q[(s, t)]).sum();
        q[(s, s)] = -out;
    }
    let mut a = q.transpose();
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    a.lu().solve(&b).expect("generator is irreducible").iter().copied().collect()
}

fn hypercube() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut mm11: f64 = 0.0;
    for seed in 0..10 {
        let inst = zone_instance(seed, 1);
        let (lam, mu) = (inst.arrival()[0], inst.service_rate());
        for solver in [Solver::Dense, Solver::Iterative] {
            let ss = hypercube_steady_state_with(&inst, &[0], solver).unwrap();
            mm11 = mm11
                .max((ss.probability(0) - mu / (lam + mu)).abs())
                .max((ss.probability(1) - lam / (lam + mu)).abs());
        }
    }
    pass &= mm11 <= 1e-12;
    notes.push(format!("M/M/1/1 {mm11:.1e}"));

    let mut brute: f64 = 0.0;
    for seed in 0..20 {
        let n = 2 + (seed as usize % 2);
        let inst = zone_instance(100 + seed, n);
        let oracle = brute_force_ctmc(&inst, n);
        let members: Vec<usize> = (0..n).collect();
        for solver in [Solver::Dense, Solver::Iterative] {
            let ss = hypercube_steady_state_with(&inst, &members, solver).unwrap();
            for (a, b) in ss.probabilities().iter().zip(&oracle) {
                brute = brute.max((a - b).abs());
            }
        }
    }
    pass &= brute <= 1e-10;
    notes.push(format!("n in {{2,3}} vs CTMC {brute:.1e}"));

    let mut balance: f64 = 0.0;
    for seed in 0..20 {
        let n = 1 + (seed as usize % 10);
        let inst = zone_instance(200 + seed, n);
        let members: Vec<usize> = (0..n).collect();
        let ss = hypercube_steady_state_with(&inst, &members, Solver::Auto).unwrap();
        let pi = ss.probabilities();
        let mut inflow = vec![0.0; pi.len()];
        let mut outflow = vec![0.0; pi.len()];
        for (s, &p) in pi.iter().enumerate() {
            for origin in 0..n {
                if let Some(u) = ss.dispatched_unit(s, origin) {
                    let rate = p * inst.arrival()[origin];
                    outflow[s] += rate;
                    inflow[s | (1 << u)] += rate;
                }
            }
            for k in 0..n {
                if s & (1 << k) != 0 {
                    let rate = p * inst.service_rate();
                    outflow[s] += rate;
                    inflow[s & !(1 << k)] += rate;
                }
            }
        }
        for (i, o) in inflow.iter().zip(&outflow) {
            balance = balance.max((i - o).abs());
        }
        balance = balance.max((pi.iter().sum::<f64>() - 1.0).abs());
    }
    pass &= balance <= 1e-10;
    notes.push(format!("flow balance {balance:.1e}"));
    outcome(pass, notes.join(", "))
}

// ---------------------------------------------------------------- 4

fn test_functions() -> Outcome {
    use std::f64::consts::PI;
    let (x, v) = grid_refine_minimum(|x| michalewicz(x, 10).unwrap(), &[0.0, 0.0], &[PI, PI], 401, |_| true)
        .expect("unconstrained grid has points");
    let keane = keane_bump(&[1.3, 1.3]).unwrap();
    let ack = ackley(&[0.0, 0.0]);
    let pass = (v + 1.8013).abs() <= 1e-3 && keane == 0.0 && ack == 0.0;
    outcome(
        pass,
        format!(
            "Michalewicz min {v:.5} at ({:.4}, {:.4}); Keane(1.3, 1.3) = {keane}; Ackley(0) = {ack}",
            x[0], x[1]
        ),
    )
}

// ---------------------------------------------------------------- 5

fn ackley_disk_problem() -> SyntheticProblem {
    let spec = SyntheticProblemSpec {
        function: "ackley".into(),
        d: 2,
        lower: Some(vec![-5.0, -5.0]),
        upper: Some(vec![5.0, 5.0]),
        noise_std: 0.0,
    };
    SyntheticProblem::from_spec(&spec, Constraint::default_disk(&[-5.0, -5.0], &[5.0, 5.0])).unwrap()
}

fn ackley_settings() -> MethodSettings {
    MethodSettings {
        cvae: CvaeConfig {
            latent_dim: 2,
            encoder_hidden: Some(vec![32, 32]),
            decoder_hidden: Some(vec![32, 32]),
            epochs: 300,
            learning_rate: 1e-3,
            ..CvaeConfig::default()
        },
        optimizer: OptimizerConfig {
            search: CageboConfig {
                iterations: 100,
                initial: 10,
                ..CageboConfig::default()
            },
            ..OptimizerConfig::default()
        },
        pretrained: None,
    }
}

fn run(method: &str, settings: &MethodSettings, data: &Dataset, problem: &dyn Problem, seed: u64) -> RunResult {
    Registry::builtin()
        .create(method, settings)
        .unwrap()
        .run(data, problem, RngSeed(seed))
        .unwrap_or_else(|e| panic!("{method} seed {seed}: {e}"))
}

fn ackley_disk() -> Outcome {
    let problem = ackley_disk_problem();
    let Constraint::Disk { center, radius } = problem.constraint().clone() else {
        unreachable!()
    };
    let inside = |y: &[f64]| y.iter().zip(&center).map(|(a, c)| (a - c).powi(2)).sum::<f64>() <= radius * radius;
    let (_, optimum) = grid_refine_minimum(ackley, &[-5.0, -5.0], &[5.0, 5.0], 201, inside).unwrap();

    let data = label_uniform_samples(&problem, 1000, RngSeed(2024)).unwrap();
    let settings = ackley_settings();
    let mut cagebo = Vec::new();
    let mut sa = Vec::new();
    for seed in 0..10 {
        let a = run("cagebo", &settings, &data, &problem, seed);
        let b = run("sa", &settings, &data, &problem, seed);
        assert_eq!(a.evaluations(), b.evaluations());
        cagebo.push(a.incumbent_value);
        sa.push(b.incumbent_value);
    }
    let close = cagebo.iter().filter(|v| (*v - optimum).abs() <= 0.5).count();
    let (mc, ms) = (median(&cagebo), median(&sa));
    outcome(
        close >= 8 && mc < ms,
        format!(
            "optimum {optimum:.4}; CageBO within 0.5 in {close}/10 seeds; median final CageBO {mc:.4} vs SA {ms:.4} ({} feasible of {})",
            data.feasible_count(),
            data.len()
        ),
    )
}

// ---------------------------------------------------------------- 6

/// Redistricting settings: latent dimension 25 and five initial plans, with
/// training shortened to 100 epochs at a larger learning rate.
fn districting_settings() -> MethodSettings {
    MethodSettings {
        cvae: CvaeConfig {
            latent_dim: 25,
            encoder_hidden: Some(vec![64, 64]),
            decoder_hidden: Some(vec![64, 64]),
            epochs: 100,
            learning_rate: 1e-3,
            reconstruction: Reconstruction::Bernoulli,
            ..CvaeConfig::default()
        },
        optimizer: OptimizerConfig {
            search: CageboConfig {
                iterations: 100,
                initial: 5,
                ..CageboConfig::default()
            },
            ..OptimizerConfig::default()
        },
        pretrained: None,
    }
}

fn districting() -> Outcome {
    let inst = grid_instance(6, 6, 4, RngSeed(0)).unwrap();
    let base = inst.base_plan().unwrap().clone();
    let data = generate_labeled_plans(&inst, &base, 2000, RngSeed(11), 3).unwrap();
    let problem = DistrictingProblem::new(inst);
    let settings = districting_settings();
    let methods = ["cagebo", "sa", "bo", "vae-bo"];
    let mut finals = vec![Vec::new(); methods.len()];
    for seed in 0..10 {
        for (m, method) in methods.iter().enumerate() {
            finals[m].push(run(method, &settings, &data, &problem, seed).incumbent_value);
        }
    }
    let wins = (0..10)
        .filter(|&s| (1..methods.len()).all(|m| finals[0][s] <= finals[m][s]))
        .count();
    let medians: Vec<String> = methods
        .iter()
        .zip(&finals)
        .map(|(m, v)| format!("{m} {:.4}", median(v)))
        .collect();
    outcome(
        wins >= 7,
        format!("CageBO best of all in {wins}/10 paired seeds; median finals: {}", medians.join(", ")),
    )
}

// ---------------------------------------------------------------- 7

fn ablation() -> Outcome {
    let inst = grid_instance(6, 6, 4, RngSeed(0)).unwrap();
    let base = inst.base_plan().unwrap().clone();
    let problem = DistrictingProblem::new(inst.clone());
    let sizes = [100, 1000, 10_000];
    let mut rates = vec![Vec::new(); sizes.len()];
    for run in 0..5u64 {
        let full = generate_labeled_plans(&inst, &base, 10_000, RngSeed(500 + run), 3).unwrap();
        for (i, &n) in sizes.iter().enumerate() {
            let data = full.truncated(n);
            let config = CvaeConfig {
                epochs: 50,
                seed: run,
                ..districting_settings().cvae
            };
            let (model, _) = cagebo_core::cvae::train(&data, &config).unwrap();
            let mut rng = RngSeed(run).stream("acceptance/decodes");
            let feasible = (0..200)
                .filter(|_| {
                    let z: Vec<f64> = (0..model.latent_dim())
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    problem.is_feasible(&problem.canonicalize(&model.decode(&z, true).unwrap()))
                })
                .count();
            rates[i].push(feasible as f64 / 200.0);
        }
    }
    let med: Vec<f64> = rates.iter().map(|r| median(r)).collect();
    outcome(
        med[0] <= med[1] && med[1] <= med[2],
        format!(
            "median feasible fraction {:.3} / {:.3} / {:.3} at n = 100 / 1000 / 10000",
            med[0], med[1], med[2]
        ),
    )
}

// ---------------------------------------------------------------- 8

fn post_decode_contract() -> Outcome {
    let mut rng = RngSeed(8).stream("acceptance/post-decode");
    let mut bad = 0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=6);
        let m = rng.random_range(1..=20);
        let pool: Vec<Decision> = (0..m)
            .map(|_| Decision::new((0..d).map(|_| rng.random::<f64>()).collect()).unwrap())
            .collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let out = post_decode(&x, &pool).unwrap();
        let dist = |p: &Decision| p.as_slice().iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let nearest = pool.iter().map(dist).fold(f64::INFINITY, f64::min);
        if !pool.contains(&out) || dist(&out) > nearest {
            bad += 1;
        }
        let member = &pool[rng.random_range(0..m)];
        if post_decode(member.as_slice(), &pool).unwrap() != *member {
            bad += 1;
        }
    }

    let problem = ackley_disk_problem();
    let data = label_uniform_samples(&problem, 300, RngSeed(81)).unwrap();
    let pool = data.feasible_subset().unwrap();
    let mut settings = ackley_settings();
    settings.cvae.epochs = 20;
    settings.cvae.encoder_hidden = Some(vec![16]);
    settings.cvae.decoder_hidden = Some(vec![16]);
    settings.optimizer.search.iterations = 25;
    settings.optimizer.search.candidates = 128;
    let mut evaluations = 0;
    let mut violations = 0;
    for method in Registry::builtin().names() {
        for seed in 0..3 {
            let r = run(method, &settings, &data, &problem, seed);
            evaluations += r.evaluated.len();
            violations += r
                .evaluated
                .iter()
                .filter(|x| !problem.is_feasible(x) && !pool.contains(x))
                .count();
        }
    }
    outcome(
        bad == 0 && violations == 0,
        format!(
            "{bad} bad projections in 1000 calls; {violations} of {evaluations} evaluations outside oracle and pool"
        ),
    )
}

// ---------------------------------------------------------------- 9

fn determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let config = r#"{
  "problem": {"kind": "synthetic", "function": "ackley", "d": 2, "lower": [-5, -5], "upper": [5, 5],
              "constraint": {"kind": "disk"}, "n": 1000},
  "cvae": {"latent_dim": 2, "encoder_hidden": [32, 32], "decoder_hidden": [32, 32], "epochs": 300, "learning_rate": 0.001},
  "optimizer": {"search": {"iterations": 100, "initial": 10}},
  "seeds": [3],
  "output_dir": "out"
}"#;
    let path = tmp.path().join("config.json");
    fs::write(&path, config).unwrap();
    let cagebo = |args: &[&str], dir: &Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_cagebo"))
            .args(args)
            .current_dir(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let cfg = path.to_str().unwrap();
    let mut identical = true;
    let mut notes = Vec::new();
    for method in ["cagebo", "bo", "sa"] {
        for out in ["a", "b"] {
            cagebo(&["gen-data", "--config", cfg, "--out", out], tmp.path());
            cagebo(&["optimize", "--config", cfg, "--out", out, "--method", method], tmp.path());
        }
        let a = fs::read(tmp.path().join(format!("a/{method}/seed_3/trace.csv"))).unwrap();
        let b = fs::read(tmp.path().join(format!("b/{method}/seed_3/trace.csv"))).unwrap();
        identical &= a == b && !a.is_empty();
        notes.push(format!("{method} {}", if a == b { "identical" } else { "differs" }));
    }
    outcome(identical, format!("trace CSVs: {}", notes.join(", ")))
}
