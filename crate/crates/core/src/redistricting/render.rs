//! SVG district map: regions colored by their zone's workload.

use std::fmt::Write;

use super::workload::PlanEvaluation;
use super::{DistrictingInstance, Plan};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 30.0;
const BAR_WIDTH: f64 = 18.0;

/// Renders the plan. Regions without coordinates are laid out on a circle.
pub fn render_plan_svg(instance: &DistrictingInstance, plan: &Plan, eval: &PlanEvaluation) -> String {
    let l = instance.regions();
    let coords: Vec<[f64; 2]> = match instance.coords() {
        Some(c) => c.to_vec(),
        None => (0..l)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / l as f64;
                [a.cos(), a.sin()]
            })
            .collect(),
    };
    let (min_x, max_x) = extent(coords.iter().map(|p| p[0]));
    let (min_y, max_y) = extent(coords.iter().map(|p| p[1]));
    let span = (max_x - min_x).max(max_y - min_y).max(1e-12);

    let edge_lengths: Vec<f64> = instance
        .edges()
        .iter()
        .map(|&[a, b]| ((coords[a][0] - coords[b][0]).powi(2) + (coords[a][1] - coords[b][1]).powi(2)).sqrt())
        .collect();
    let (shortest, longest) = extent(edge_lengths.iter().copied());
    let lattice = !edge_lengths.is_empty() && longest - shortest <= 1e-9 * longest;
    // Leave room for half a cell (or marker) around the drawing.
    let pad = if edge_lengths.is_empty() { 0.1 * span } else { 0.5 * shortest };
    let scale = (SIZE - 2.0 * MARGIN) / (span + 2.0 * pad);
    let to_px = |p: [f64; 2]| {
        (
            MARGIN + (p[0] - min_x + pad) * scale,
            MARGIN + (max_y - p[1] + pad) * scale,
        )
    };

    let rho = eval.workloads();
    let (lo, hi) = extent(rho.iter().copied());
    let norm = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };

    let width = SIZE + 4.0 * MARGIN + BAR_WIDTH;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{SIZE}" viewBox="0 0 {width} {SIZE}" font-family="sans-serif" font-size="11">"##
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (a, b) in instance.edges().into_iter().map(|[a, b]| (a, b)) {
        if plan.0[a] == plan.0[b] && !lattice {
            let (x1, y1) = to_px(coords[a]);
            let (x2, y2) = to_px(coords[b]);
            let _ = writeln!(
                svg,
                r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#555" stroke-width="1"/>"##
            );
        }
    }
    for (region, &p) in coords.iter().enumerate() {
        let zone = plan.0[region];
        let fill = color(norm(rho.get(zone).copied().unwrap_or(lo)));
        let (cx, cy) = to_px(p);
        if lattice {
            let side = shortest * scale;
            let _ = writeln!(
                svg,
                r##"<rect x="{:.2}" y="{:.2}" width="{side:.2}" height="{side:.2}" fill="{fill}" stroke="white" stroke-width="1"/>"##,
                cx - side / 2.0,
                cy - side / 2.0
            );
        } else {
            let r = if edge_lengths.is_empty() { 6.0 } else { (0.35 * shortest * scale).max(3.0) };
            let _ = writeln!(
                svg,
                r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}" stroke="#333" stroke-width="0.5"/>"##
            );
        }
        let _ = writeln!(
            svg,
            r##"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{zone}</text>"##,
            cy + 4.0
        );
    }

    // Color bar.
    let bx = SIZE + MARGIN;
    let steps = 50;
    let bar_h = SIZE - 2.0 * MARGIN;
    for i in 0..steps {
        let t = 1.0 - i as f64 / (steps - 1) as f64;
        let y = MARGIN + bar_h * i as f64 / steps as f64;
        let _ = writeln!(
            svg,
            r##"<rect x="{bx}" y="{y:.2}" width="{BAR_WIDTH}" height="{:.2}" fill="{}"/>"##,
            bar_h / steps as f64 + 0.5,
            color(t)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}">{hi:.3}</text>"##,
        bx + BAR_WIDTH + 4.0,
        MARGIN + 8.0
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}">{lo:.3}</text>"##,
        bx + BAR_WIDTH + 4.0,
        MARGIN + bar_h
    );
    let _ = writeln!(
        svg,
        r##"<text x="{bx}" y="{:.2}">workload</text>"##,
        MARGIN - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

// Piecewise-linear blue-to-yellow ramp.
fn color(t: f64) -> String {
    const STOPS: [[f64; 3]; 4] = [
        [68.0, 1.0, 84.0],
        [49.0, 104.0, 142.0],
        [53.0, 183.0, 121.0],
        [253.0, 231.0, 37.0],
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}
