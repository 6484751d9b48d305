//! Zero-capacity hypercube queueing model of a single zone.
//!
//! One unit is stationed in every member region. A call from region `l`
//! goes to the idle unit with the shortest travel time to `l` (ties to the
//! lowest region index); calls that find every unit busy are lost.

use crate::error::{Error, Result};

use super::DistrictingInstance;

/// Largest zone solved exactly (2^14 states).
pub const MAX_ZONE_UNITS: usize = 14;
/// Zones up to this size use the dense direct solve under [`Solver::Auto`].
pub const DENSE_SOLVE_MAX_UNITS: usize = 8;

const NO_UNIT: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// LU with partial pivoting, one balance row replaced by normalization.
    Dense,
    /// Gauss-Seidel sweeps with exact level rescaling.
    Iterative,
    /// Dense for small zones, iterative otherwise.
    Auto,
}

/// Stationary distribution over busy sets. Bit `k` of a state index means
/// unit `members()[k]` is busy.
#[derive(Debug, Clone)]
pub struct SteadyState {
    members: Vec<usize>,
    probabilities: Vec<f64>,
    // dispatch[state * n + origin] = position of the dispatched unit.
    dispatch: Vec<u8>,
}

impl SteadyState {
    /// Member regions in increasing order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn units(&self) -> usize {
        self.members.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, state: usize) -> f64 {
        self.probabilities[state]
    }

    /// Probability that all units are busy, i.e. an arriving call is lost.
    pub fn loss_probability(&self) -> f64 {
        self.probabilities[self.probabilities.len() - 1]
    }

    /// Fraction of time unit `k` is busy.
    pub fn busy_probability(&self, k: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(s, _)| s & (1 << k) != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Unit position serving a call from member position `origin` in
    /// `state`, or `None` when every unit is busy.
    pub fn dispatched_unit(&self, state: usize, origin: usize) -> Option<usize> {
        match self.dispatch[state * self.units() + origin] {
            NO_UNIT => None,
            u => Some(u as usize),
        }
    }
}

pub fn hypercube_steady_state(
    instance: &DistrictingInstance,
    members: &[usize],
) -> Result<SteadyState> {
    hypercube_steady_state_with(instance, members, Solver::Auto)
}

pub fn hypercube_steady_state_with(
    instance: &DistrictingInstance,
    members: &[usize],
    solver: Solver,
) -> Result<SteadyState> {
    let mut members = members.to_vec();
    members.sort_unstable();
    members.dedup();
    let n = members.len();
    if n == 0 {
        return Err(Error::InvalidConfig("zone has no member regions".into()));
    }
    if n > MAX_ZONE_UNITS {
        return Err(Error::ZoneTooLarge {
            size: n,
            cap: MAX_ZONE_UNITS,
        });
    }
    if let Some(&bad) = members.iter().find(|&&m| m >= instance.regions()) {
        return Err(Error::InvalidConfig(format!("region {bad} out of range")));
    }
    let states = 1usize << n;
    let dispatch = dispatch_table(instance, &members);

    // rate[state * n + k]: arrival rate routed to unit k in `state`.
    let lambda: Vec<f64> = members.iter().map(|&m| instance.arrival()[m]).collect();
    let mut rate = vec![0.0; states * n];
    for s in 0..states {
        for (origin, &lam) in lambda.iter().enumerate() {
            let u = dispatch[s * n + origin];
            if u != NO_UNIT {
                rate[s * n + u as usize] += lam;
            }
        }
    }
    let mu = instance.service_rate();
    let total: f64 = lambda.iter().sum();

    let probabilities = if total == 0.0 {
        let mut p = vec![0.0; states];
        p[0] = 1.0;
        p
    } else {
        let dense = match solver {
            Solver::Dense => true,
            Solver::Iterative => false,
            Solver::Auto => n <= DENSE_SOLVE_MAX_UNITS,
        };
        if dense {
            solve_dense(n, &rate, mu)?
        } else {
            solve_iterative(n, &rate, mu, total)?
        }
    };
    Ok(SteadyState {
        members,
        probabilities,
        dispatch,
    })
}

fn dispatch_table(instance: &DistrictingInstance, members: &[usize]) -> Vec<u8> {
    let n = members.len();
    let mut table = vec![NO_UNIT; (1 << n) * n];
    for s in 0..(1usize << n) {
        for (origin, &l) in members.iter().enumerate() {
            let mut best: Option<usize> = None;
            for (k, &u) in members.iter().enumerate() {
                if s & (1 << k) != 0 {
                    continue;
                }
                // Members are sorted, so strict < keeps the lowest region on ties.
                if best.is_none_or(|b| instance.travel(u, l) < instance.travel(members[b], l)) {
                    best = Some(k);
                }
            }
            if let Some(k) = best {
                table[s * n + origin] = k as u8;
            }
        }
    }
    table
}

fn solve_dense(n: usize, rate: &[f64], mu: f64) -> Result<Vec<f64>> {
    let m = 1usize << n;
    // a = Q^T, row `to`, column `from`.
    let mut a = vec![0.0; m * m];
    for s in 0..m {
        for k in 0..n {
            let bit = 1 << k;
            let (target, r) = if s & bit == 0 {
                (s | bit, rate[s * n + k])
            } else {
                (s & !bit, mu)
            };
            if r != 0.0 {
                a[target * m + s] += r;
                a[s * m + s] -= r;
            }
        }
    }
    let last = m - 1;
    a[last * m..].fill(1.0);
    let mut b = vec![0.0; m];
    b[last] = 1.0;
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    lu_solve(&mut a, &mut b, m, scale * 1e-13)?;
    for p in &mut b {
        // Round-off can leave tiny negatives on transient states.
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = b.iter().sum();
    b.iter_mut().for_each(|p| *p /= sum);
    Ok(b)
}

fn lu_solve(a: &mut [f64], b: &mut [f64], m: usize, tiny: f64) -> Result<()> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap_or(col);
        if a[pivot * m + col].abs() <= tiny {
            return Err(Error::SingularBalance);
        }
        if pivot != col {
            for k in 0..m {
                a.swap(pivot * m + k, col * m + k);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * m + col];
        for row in col + 1..m {
            let factor = a[row * m + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..m {
                a[row * m + k] -= factor * a[col * m + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in row + 1..m {
            acc -= a[row * m + k] * b[k];
        }
        b[row] = acc / a[row * m + row];
    }
    Ok(())
}

// The busy count is a birth-death chain (every call is served while any unit
// is idle), so level masses follow the truncated Poisson law exactly. Each
// sweep rescales the levels to those masses, which removes the slow modes.
fn solve_iterative(n: usize, rate: &[f64], mu: f64, total: f64) -> Result<Vec<f64>> {
    const TOLERANCE: f64 = 8.0 * f64::EPSILON;
    const MAX_SWEEPS: usize = 100_000;
    let m = 1usize << n;
    let level_mass = {
        let mut w = vec![1.0; n + 1];
        for k in 1..=n {
            w[k] = w[k - 1] * total / (mu * k as f64);
        }
        let z: f64 = w.iter().sum();
        w.iter().map(|v| v / z).collect::<Vec<_>>()
    };
    let level_count: Vec<f64> = (0..=n).map(|k| binomial(n, k)).collect();
    let out: Vec<f64> = (0..m)
        .map(|s| rate[s * n..(s + 1) * n].iter().sum::<f64>() + mu * s.count_ones() as f64)
        .collect();
    let mut p: Vec<f64> = (0..m)
        .map(|s| {
            let k = s.count_ones() as usize;
            level_mass[k] / level_count[k]
        })
        .collect();
    let mut level_sum = vec![0.0; n + 1];
    for _ in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        for s in 0..m {
            let mut inflow = 0.0;
            for k in 0..n {
                let bit = 1 << k;
                if s & bit != 0 {
                    let from = s & !bit;
                    inflow += p[from] * rate[from * n + k];
                } else {
                    inflow += p[s | bit] * mu;
                }
            }
            let next = inflow / out[s];
            change = change.max((next - p[s]).abs());
            p[s] = next;
        }
        level_sum.fill(0.0);
        for (s, v) in p.iter().enumerate() {
            level_sum[s.count_ones() as usize] += v;
        }
        for (s, v) in p.iter_mut().enumerate() {
            let k = s.count_ones() as usize;
            if level_sum[k] > 0.0 {
                *v *= level_mass[k] / level_sum[k];
            }
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularBalance);
        }
        if change <= TOLERANCE {
            return Ok(p);
        }
    }
    Err(Error::SingularBalance)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
