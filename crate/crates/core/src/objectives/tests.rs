use std::f64::consts::{E, PI};

use rand::Rng;

use super::*;

fn reference_keane(x: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut p = 1.0;
    let mut w = 0.0;
    for i in 0..x.len() {
        s += x[i].cos().powf(4.0);
        p *= x[i].cos().powf(2.0);
        w += (i as f64 + 1.0) * x[i].powf(2.0);
    }
    -((s - 2.0 * p).abs()) / w.sqrt()
}

fn reference_michalewicz(x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        let inner = ((i as f64 + 1.0) * x[i] * x[i] / PI).sin();
        total -= x[i].sin() * inner.powf(20.0);
    }
    total
}

fn reference_ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut a = 0.0;
    let mut b = 0.0;
    for v in x {
        a += v * v;
        b += (2.0 * PI * v).cos();
    }
    -20.0 * (-0.2 * (a / n).sqrt()).exp() - (b / n).exp() + 20.0 + E
}

#[test]
fn keane_examples() {
    assert_eq!(keane_bump(&[1.0, 1.0]).unwrap(), 0.0);
    assert!(matches!(keane_bump(&[0.0, 0.0]), Err(Error::SingularInput(_))));
    assert!(keane_bump(&[3.0, 0.2, 7.0]).unwrap() <= 0.0);
}

#[test]
fn keane_two_dimensional_optimum() {
    let (x, v) = grid_refine_minimum(
        |x| keane_bump(x).unwrap_or(f64::INFINITY),
        &[0.0, 0.0],
        &[10.0, 10.0],
        401,
        // Keane's classical product bound; without it the bump peaks near the axis.
        |x| x[0] * x[1] >= 0.75,
    )
    .unwrap();
    assert!((v + 0.364_98).abs() < 1e-5, "value {v}");
    assert!((x[0] - 1.600_86).abs() < 1e-3 && (x[1] - 0.468_50).abs() < 1e-3, "{x:?}");
    assert!((keane_bump(&[1.600_86, 0.468_50]).unwrap() + 0.364_98).abs() < 1e-5);
}

#[test]
fn michalewicz_examples() {
    assert_eq!(michalewicz(&[0.0, 0.0, 0.0], 10).unwrap(), 0.0);
    assert!(matches!(michalewicz(&[4.0], 10), Err(Error::DomainViolation(_))));
    let mut rng = RngSeed(1).stream("t");
    for _ in 0..200 {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..PI)).collect();
        let v = michalewicz(&x, 10).unwrap();
        assert!((-5.0..=0.0).contains(&v));
    }
    let (x, v) = grid_refine_minimum(
        |x| michalewicz(x, 10).unwrap(),
        &[0.0, 0.0],
        &[PI, PI],
        401,
        |_| true,
    )
    .unwrap();
    assert!((v + 1.8013).abs() < 1e-3, "value {v}");
    assert!((x[0] - 2.2029).abs() < 1e-3 && (x[1] - 1.5708).abs() < 1e-3, "{x:?}");
}

#[test]
fn ackley_examples() {
    assert_eq!(ackley(&[0.0, 0.0]), 0.0);
    assert!((ackley(&[1.0, 1.0]) - 3.625_384_938_440_363).abs() < 1e-12);
    let mut rng = RngSeed(2).stream("t");
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(ackley(&x), ackley(&neg));
        assert!(ackley(&x) > 0.0);
    }
    assert!(Ackley { bound: 5.0 }.evaluate(&[6.0, 0.0]).is_err());
}

#[test]
fn functions_match_straight_loop_references() {
    let mut rng = RngSeed(3).stream("t");
    for _ in 0..100 {
        let d = rng.random_range(1..8);
        let k: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..10.0)).collect();
        let m: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..PI)).collect();
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-32.0..32.0)).collect();
        assert!((keane_bump(&k).unwrap() - reference_keane(&k)).abs() < 1e-12);
        assert!((michalewicz(&m, 10).unwrap() - reference_michalewicz(&m)).abs() < 1e-12);
        assert!((ackley(&a) - reference_ackley(&a)).abs() < 1e-12);
    }
}

#[test]
fn scaled_evaluation_composes_with_affine_map() {
    let mut rng = RngSeed(4).stream("t");
    for name in TEST_FUNCTIONS {
        let spec = SyntheticProblemSpec { function: name.into(), d: 4, lower: None, upper: None, noise_std: 0.0 };
        let problem = SyntheticProblem::from_spec(&spec, Constraint::Unconstrained).unwrap();
        let (lo, hi) = problem.function().default_domain(4);
        for _ in 0..100 {
            let x = Decision::new((0..4).map(|_| rng.random_range(0.001..1.0)).collect()).unwrap();
            let scaled: Vec<f64> = (0..4).map(|i| lo[i] + x[i] * (hi[i] - lo[i])).collect();
            let direct = match name {
                "keane" => reference_keane(&scaled),
                "michalewicz" => reference_michalewicz(&scaled),
                _ => reference_ackley(&scaled),
            };
            assert!((problem.objective(&x).unwrap() - direct).abs() < 1e-12, "{name}");
            let back = problem.from_domain(&scaled);
            assert!(back.iter().zip(x.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }
}

#[test]
fn unknown_function_is_rejected() {
    assert!(matches!(test_function("rosenbrock"), Err(Error::UnknownName { .. })));
}

#[test]
fn disk_constraint_defaults() {
    let constraint = Constraint::default_disk(&[-5.0, -5.0], &[5.0, 5.0]);
    let Constraint::Disk { center, radius } = &constraint else { panic!() };
    assert_eq!(center, &vec![0.0, 0.0]);
    assert!((radius - 1.5).abs() < 1e-15);
    let problem = SyntheticProblem::new(
        Box::new(Ackley::default()),
        vec![-5.0, -5.0],
        vec![5.0, 5.0],
        constraint,
    )
    .unwrap();
    assert!(problem.is_feasible(&Decision::new(vec![0.5, 0.5]).unwrap()));
    assert!(problem.is_feasible(&Decision::new(vec![0.5, 0.64]).unwrap()));
    assert!(!problem.is_feasible(&Decision::new(vec![0.5, 0.66]).unwrap()));
    assert!(!problem.is_feasible(&Decision::new(vec![0.0, 0.0]).unwrap()));
}

#[test]
fn bad_boxes_are_rejected() {
    let f = || -> Box<dyn TestFunction> { Box::new(KeaneBump) };
    assert!(SyntheticProblem::new(f(), vec![1.0], vec![1.0], Constraint::Unconstrained).is_err());
    assert!(SyntheticProblem::new(f(), vec![0.0, 0.0], vec![1.0], Constraint::Unconstrained).is_err());
}

#[test]
fn random_decoder_dataset_contract() {
    let (ds, oracle) = make_random_decoder_dataset(RngSeed(5), 2000, 10, 30).unwrap();
    assert_eq!(ds.len(), 2000);
    assert_eq!(ds.dim(), 30);
    assert_eq!(ds.feasible_subset().unwrap().len(), 1000);
    assert_eq!(oracle.len(), 1000);
    for item in ds.items() {
        assert_eq!(oracle.contains(&item.decision), item.feasible);
    }
    let mut rng = RngSeed(6).stream("t");
    for _ in 0..100 {
        let x: Vec<f64> = (0..30).map(|_| rng.random()).collect();
        assert!(!oracle.contains(&x));
    }
    let (again, _) = make_random_decoder_dataset(RngSeed(5), 2000, 10, 30).unwrap();
    assert_eq!(again, ds);
    assert!(make_random_decoder_dataset(RngSeed(5), 11, 10, 30).is_err());
}

#[test]
fn matching_oracle_tolerance() {
    let p = Decision::new(vec![0.3, 0.7]).unwrap();
    let oracle = MatchingOracle::new(vec![p.clone()], 1e-9);
    assert!(oracle.contains(&[0.3 + 5e-10, 0.7 - 5e-10]));
    assert!(!oracle.contains(&[0.3 + 2e-9, 0.7]));
    assert!(!oracle.contains(&[0.3]));
}

#[test]
fn uniform_labeling_matches_oracle() {
    let problem = SyntheticProblem::new(
        Box::new(Ackley::default()),
        vec![-5.0, -5.0],
        vec![5.0, 5.0],
        Constraint::default_disk(&[-5.0, -5.0], &[5.0, 5.0]),
    )
    .unwrap();
    let ds = label_uniform_samples(&problem, 500, RngSeed(7)).unwrap();
    assert_eq!(ds.len(), 500);
    assert!(ds.items().iter().all(|i| problem.is_feasible(&i.decision) == i.feasible));
    let frac = ds.feasible_count() as f64 / 500.0;
    // disk area over box area = pi * 1.5^2 / 100
    assert!((frac - 0.0707).abs() < 0.03, "{frac}");
}
