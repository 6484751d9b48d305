//! Benchmark functions on their natural (domain-scaled) inputs.

use std::f64::consts::{E, PI};
use std::fmt::Debug;

use crate::error::{Error, Result};

/// A named benchmark function with a default box.
pub trait TestFunction: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn default_domain(&self, d: usize) -> (Vec<f64>, Vec<f64>);
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

/// Keane's bump, sign-flipped for minimization. No explicit constraints.
pub fn keane_bump(x: &[f64]) -> Result<f64> {
    let denom: f64 = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum();
    if denom == 0.0 {
        return Err(Error::SingularInput("keane bump is undefined at the origin"));
    }
    let mut sum = 0.0;
    let mut prod = 1.0;
    for v in x {
        let c2 = v.cos() * v.cos();
        sum += c2 * c2;
        prod *= c2;
    }
    Ok(-(sum - 2.0 * prod).abs() / denom.sqrt())
}

/// Michalewicz function with steepness `m` on `[0, pi]^d`.
pub fn michalewicz(x: &[f64], m: u32) -> Result<f64> {
    check_box(x, 0.0, PI, "michalewicz")?;
    Ok(-x
        .iter()
        .enumerate()
        .map(|(i, &v)| v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(2 * m as i32))
        .sum::<f64>())
}

/// Ackley function with a = 20, b = 0.2, c = 2 pi.
pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    20.0 * (1.0 - (-0.2 * sq.sqrt()).exp()) + (E - cs.exp())
}

fn check_box(x: &[f64], lo: f64, hi: f64, name: &str) -> Result<()> {
    const SLACK: f64 = 1e-12;
    match x.iter().position(|v| !(v.is_finite() && *v >= lo - SLACK && *v <= hi + SLACK)) {
        None => Ok(()),
        Some(i) => Err(Error::DomainViolation(format!(
            "{name}: coordinate {i} = {} outside [{lo}, {hi}]",
            x[i]
        ))),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KeaneBump;

impl TestFunction for KeaneBump {
    fn name(&self) -> &'static str {
        "keane"
    }
    fn default_domain(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; d], vec![10.0; d])
    }
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        keane_bump(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Michalewicz {
    pub m: u32,
}

impl Default for Michalewicz {
    fn default() -> Self {
        Michalewicz { m: 10 }
    }
}

impl TestFunction for Michalewicz {
    fn name(&self) -> &'static str {
        "michalewicz"
    }
    fn default_domain(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; d], vec![PI; d])
    }
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        michalewicz(x, self.m)
    }
}

/// Ackley on the centered box `[-bound, bound]^d`.
#[derive(Debug, Clone, Copy)]
pub struct Ackley {
    pub bound: f64,
}

impl Default for Ackley {
    fn default() -> Self {
        Ackley { bound: 32.768 }
    }
}

impl TestFunction for Ackley {
    fn name(&self) -> &'static str {
        "ackley"
    }
    fn default_domain(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-self.bound; d], vec![self.bound; d])
    }
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_box(x, -self.bound, self.bound, "ackley")?;
        Ok(ackley(x))
    }
}

/// Looks up a benchmark by name.
pub fn test_function(name: &str) -> Result<Box<dyn TestFunction>> {
    match name {
        "keane" => Ok(Box::new(KeaneBump)),
        "michalewicz" => Ok(Box::new(Michalewicz::default())),
        "ackley" => Ok(Box::new(Ackley::default())),
        other => Err(Error::UnknownName {
            kind: "test function",
            name: other.to_string(),
        }),
    }
}

pub const TEST_FUNCTIONS: [&str; 3] = ["keane", "michalewicz", "ackley"];
