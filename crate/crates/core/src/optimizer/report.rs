//! Trace files, run summaries, and across-seed aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::RunResult;

pub const TRACE_HEADER: &str = "iter,y,best,projected,seconds";

/// Trace CSV: row 0 holds the best initial value, then one row per
/// iteration. The seconds column is zero unless `wall_clock` is set, so
/// identical runs give identical files.
pub fn trace_csv(result: &RunResult, wall_clock: bool) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    let b0 = result.best_initial();
    out.push_str(&format!("0,{b0},{b0},0,0\n"));
    for (r, s) in result.trace.iter().zip(&result.trace_seconds) {
        let seconds = if wall_clock { *s } else { 0.0 };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration,
            r.value,
            r.best,
            u8::from(r.projected),
            seconds
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub y: f64,
    pub best: f64,
    pub projected: bool,
    pub seconds: f64,
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TRACE_HEADER) {
        return Err(Error::InvalidConfig(format!("trace must start with `{TRACE_HEADER}`")));
    }
    let bad = |n: usize| Error::InvalidConfig(format!("malformed trace row {n}"));
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(n + 1));
            }
            Ok(TraceRow {
                iter: f[0].parse().map_err(|_| bad(n + 1))?,
                y: f[1].parse().map_err(|_| bad(n + 1))?,
                best: f[2].parse().map_err(|_| bad(n + 1))?,
                projected: match f[3] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad(n + 1)),
                },
                seconds: f[4].parse().map_err(|_| bad(n + 1))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub seed: u64,
    pub best: f64,
    pub evals: usize,
    pub projections: usize,
    pub seconds: f64,
}

impl From<&RunResult> for RunSummary {
    fn from(r: &RunResult) -> Self {
        RunSummary {
            method: r.method.clone(),
            seed: r.seed,
            best: r.incumbent_value,
            evals: r.evaluations(),
            projections: r.projections,
            seconds: r.seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iter: usize,
    pub median: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Per-iteration statistics of best-so-far curves over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<AggregateRow>,
}

impl Aggregate {
    /// Curves must have equal length. The band is the normal-approximation
    /// 95% interval `mean +- 1.96 sd / sqrt(n)` with the sample sd.
    pub fn from_curves(method: &str, curves: &[(u64, Vec<f64>)]) -> Result<Self> {
        let len = curves.first().map(|c| c.1.len()).ok_or(Error::EmptyTrace)?;
        if curves.iter().any(|c| c.1.len() != len) {
            return Err(Error::InvalidConfig("best-so-far curves differ in length".into()));
        }
        let rows = (0..len)
            .map(|i| {
                let column: Vec<f64> = curves.iter().map(|c| c.1[i]).collect();
                let (mean, half) = mean_ci(&column);
                AggregateRow {
                    iter: i,
                    median: median(&column),
                    mean,
                    ci_low: mean - half,
                    ci_high: mean + half,
                }
            })
            .collect();
        Ok(Aggregate {
            method: method.to_string(),
            seeds: curves.iter().map(|c| c.0).collect(),
            rows,
        })
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean and the half-width `1.96 sd / sqrt(n)`; zero width for one value.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}
