//! Convergence figures: median best-so-far per method with its 95% band.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use cagebo_core::optimizer::report::{parse_trace_csv, Aggregate, RunSummary};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn seed_dirs(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.join("trace.csv").is_file() && path.join("summary.json").is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Aggregates every method found in `dirs`, recomputed from the traces.
/// Each entry may be a method directory or a directory of them.
pub fn collect_runs(dirs: &[PathBuf]) -> anyhow::Result<Vec<Aggregate>> {
    let mut curves: BTreeMap<String, Vec<(u64, Vec<f64>)>> = BTreeMap::new();
    for dir in dirs {
        let mut method_dirs = Vec::new();
        if !seed_dirs(dir)?.is_empty() {
            method_dirs.push(dir.clone());
        } else {
            for entry in fs::read_dir(dir)? {
                let path = entry?.path();
                if path.is_dir() && !seed_dirs(&path)?.is_empty() {
                    method_dirs.push(path);
                }
            }
            method_dirs.sort();
        }
        for m in method_dirs {
            for run in seed_dirs(&m)? {
                let text = fs::read_to_string(run.join("summary.json"))?;
                let summary: RunSummary = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", run.join("summary.json").display()))?;
                let rows = parse_trace_csv(&fs::read_to_string(run.join("trace.csv"))?)?;
                curves
                    .entry(summary.method)
                    .or_default()
                    .push((summary.seed, rows.iter().map(|r| r.best).collect()));
            }
        }
    }
    if curves.is_empty() {
        bail!("no traces found under {}", dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>().join(", "));
    }
    curves
        .iter()
        .map(|(m, c)| Aggregate::from_curves(m, c).map_err(Into::into))
        .collect()
}

/// One median polyline and one CI band per method, plus a legend.
pub fn convergence_svg(runs: &[Aggregate]) -> String {
    let n_iter = runs.iter().map(|a| a.rows.len()).max().unwrap_or(1).max(2) - 1;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in runs.iter().flat_map(|a| &a.rows) {
        lo = lo.min(r.ci_low).min(r.median);
        hi = hi.max(r.ci_high).max(r.median);
    }
    if !(hi > lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    let px = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / n_iter as f64;
    let py = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#, WIDTH / 2.0, HEIGHT - 20.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">best so far</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, py(v) + 4.0);
        let i = n_iter * k / 4;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{i}</text>"#, px(i), y0 + 16.0);
    }
    for (k, agg) in runs.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper: Vec<String> = agg.rows.iter().map(|r| format!("{:.2},{:.2}", px(r.iter), py(r.ci_high))).collect();
        let lower: Vec<String> = agg.rows.iter().rev().map(|r| format!("{:.2},{:.2}", px(r.iter), py(r.ci_low))).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = agg.rows.iter().map(|r| format!("{:.2},{:.2}", px(r.iter), py(r.median))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="median" data-method="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            agg.method,
            line.join(" ")
        );
        let ly = MARGIN + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x1 - 120.0,
            x1 - 100.0
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{}" y="{}">{}</text>"#,
            x1 - 94.0,
            ly + 4.0,
            agg.method
        );
    }
    s.push_str("</svg>\n");
    s
}
