//! Dense grid search followed by compass refinement. Used to locate
//! reference optima of low-dimensional benchmarks.

/// Minimizes `f` over the box subject to `feasible`, starting from the best
/// `starts` points of a `resolution`-per-axis grid. Returns `None` when no
/// grid point is feasible.
pub fn grid_refine_minimum<F, H>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    resolution: usize,
    feasible: H,
) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
    H: Fn(&[f64]) -> bool,
{
    const STARTS: usize = 5;
    let d = lower.len();
    assert!(resolution >= 2 && d > 0 && upper.len() == d);
    let spacing: Vec<f64> = (0..d).map(|i| (upper[i] - lower[i]) / (resolution - 1) as f64).collect();

    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut index = vec![0usize; d];
    'grid: loop {
        let x: Vec<f64> = (0..d).map(|i| lower[i] + index[i] as f64 * spacing[i]).collect();
        if feasible(&x) {
            let v = f(&x);
            if v.is_finite() {
                scored.push((v, x));
            }
        }
        for i in 0..d {
            index[i] += 1;
            if index[i] < resolution {
                continue 'grid;
            }
            index[i] = 0;
        }
        break;
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.truncate(STARTS);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for (v, x) in scored {
        let (x, v) = if d <= 2 {
            zoom(&f, &feasible, lower, upper, x, v, &spacing)
        } else {
            compass(&f, &feasible, lower, upper, x, v, &spacing)
        };
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((x, v));
        }
    }
    best
}

// Local grids around the incumbent. The grid shrinks only when the best
// point is interior, so the search can slide along active constraints.
fn zoom<F, H>(
    f: &F,
    feasible: &H,
    lower: &[f64],
    upper: &[f64],
    mut x: Vec<f64>,
    mut v: f64,
    spacing: &[f64],
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    H: Fn(&[f64]) -> bool,
{
    const K: i64 = 5;
    const MAX_ROUNDS: usize = 5000;
    let d = x.len();
    let mut step = spacing.to_vec();
    let floor: Vec<f64> = spacing.iter().map(|s| s * 1e-10).collect();
    let width = (2 * K + 1) as usize;
    for _ in 0..MAX_ROUNDS {
        if step.iter().zip(&floor).all(|(s, f)| s <= f) {
            break;
        }
        let mut best: Option<(Vec<f64>, f64, Vec<i64>)> = None;
        for flat in 0..width.pow(d as u32) {
            let offsets: Vec<i64> = (0..d)
                .map(|i| (flat / width.pow(i as u32) % width) as i64 - K)
                .collect();
            let y: Vec<f64> = (0..d)
                .map(|i| (x[i] + offsets[i] as f64 * step[i]).clamp(lower[i], upper[i]))
                .collect();
            if !feasible(&y) {
                continue;
            }
            let fy = f(&y);
            if fy < v && best.as_ref().is_none_or(|b| fy < b.1) {
                best = Some((y, fy, offsets));
            }
        }
        match best {
            Some((y, fy, offsets)) => {
                let on_edge = offsets.iter().any(|o| o.abs() == K);
                x = y;
                v = fy;
                if !on_edge {
                    step.iter_mut().for_each(|s| *s *= 0.5);
                }
            }
            None => step.iter_mut().for_each(|s| *s *= 0.5),
        }
    }
    (x, v)
}

fn compass<F, H>(
    f: &F,
    feasible: &H,
    lower: &[f64],
    upper: &[f64],
    mut x: Vec<f64>,
    mut v: f64,
    spacing: &[f64],
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    H: Fn(&[f64]) -> bool,
{
    let mut step: Vec<f64> = spacing.to_vec();
    let floor: Vec<f64> = spacing.iter().map(|s| s * 1e-9).collect();
    while step.iter().zip(&floor).any(|(s, f)| s > f) {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] = (y[i] + sign * step[i]).clamp(lower[i], upper[i]);
                if !feasible(&y) {
                    continue;
                }
                let fy = f(&y);
                if fy < v {
                    x = y;
                    v = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in &mut step {
                *s *= 0.5;
            }
        }
    }
    (x, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let (x, v) = grid_refine_minimum(
            |x| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2),
            &[-1.0, -1.0],
            &[1.0, 1.0],
            11,
            |_| true,
        )
        .unwrap();
        assert!((x[0] - 0.3).abs() < 1e-6 && (x[1] + 0.2).abs() < 1e-6);
        assert!(v < 1e-12);
    }

    #[test]
    fn respects_constraint() {
        let (x, _) = grid_refine_minimum(|x| x[0], &[0.0], &[1.0], 21, |x| x[0] >= 0.25).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-6);
        assert!(grid_refine_minimum(|x| x[0], &[0.0], &[1.0], 5, |_| false).is_none());
    }
}
