//! Instance generators and labeled-plan sampling.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};
use crate::rng::{RngSeed, Stream};
use crate::types::{Dataset, LabeledDecision};

use super::hypercube::MAX_ZONE_UNITS;
use super::{check_admissible, plan_encode, DistrictingInstance, Plan};

/// Reassigns one random border region to the zone of one of its neighbors.
/// Returns the plan unchanged when no region borders another zone.
pub fn random_border_move(instance: &DistrictingInstance, plan: &Plan, rng: &mut Stream) -> Plan {
    let border: Vec<usize> = (0..plan.0.len())
        .filter(|&l| plan.is_border(instance, l))
        .collect();
    let Some(&region) = border.choose(rng) else {
        return plan.clone();
    };
    let mut targets: Vec<usize> = instance
        .neighbors(region)
        .iter()
        .map(|&n| plan.0[n])
        .filter(|&j| j != plan.0[region])
        .collect();
    targets.sort_unstable();
    targets.dedup();
    let mut next = plan.clone();
    next.0[region] = *targets.choose(rng).expect("border region has a foreign neighbor");
    next
}

/// `n` plans, each `k ~ U{1..radius}` border moves away from `base`, labeled
/// by the admissibility check and one-hot encoded.
pub fn generate_labeled_plans(
    instance: &DistrictingInstance,
    base: &Plan,
    n: usize,
    seed: RngSeed,
    radius: usize,
) -> Result<Dataset> {
    check_admissible(instance, base).map_err(Error::InfeasibleBase)?;
    let mut rng = seed.stream("districting/plans");
    let zones = instance.zones();
    let items = (0..n)
        .map(|_| {
            let mut plan = base.clone();
            if radius > 0 {
                let k = rng.random_range(1..=radius);
                for _ in 0..k {
                    plan = random_border_move(instance, &plan, &mut rng);
                }
            }
            let feasible = check_admissible(instance, &plan).is_ok();
            Ok(LabeledDecision::new(plan_encode(&plan, zones)?, feasible))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(instance.decision_dim(), items)
}

/// `width x height` grid with rook adjacency, Manhattan travel times,
/// `U(0, 1)` arrival rates and unit service rate. The base plan cuts the
/// boustrophedon ordering of cells into `zones` nearly equal runs.
pub fn grid_instance(width: usize, height: usize, zones: usize, seed: RngSeed) -> Result<DistrictingInstance> {
    let l = width * height;
    if zones == 0 || l < zones {
        return Err(Error::InvalidConfig(format!(
            "a {width}x{height} grid cannot hold {zones} zones"
        )));
    }
    let cell = |r: usize, c: usize| r * width + c;
    let mut edges = Vec::new();
    for r in 0..height {
        for c in 0..width {
            if c + 1 < width {
                edges.push([cell(r, c), cell(r, c + 1)]);
            }
            if r + 1 < height {
                edges.push([cell(r, c), cell(r + 1, c)]);
            }
        }
    }
    let travel = (0..l)
        .map(|a| {
            (0..l)
                .map(|b| ((a / width).abs_diff(b / width) + (a % width).abs_diff(b % width)) as f64)
                .collect()
        })
        .collect();
    let mut rng = seed.stream("grid/lambda");
    let arrival = (0..l).map(|_| rng.random::<f64>()).collect();
    let coords = (0..l)
        .map(|a| [(a % width) as f64 + 0.5, (a / width) as f64 + 0.5])
        .collect();

    let mut order = Vec::with_capacity(l);
    for r in 0..height {
        if r % 2 == 0 {
            order.extend((0..width).map(|c| cell(r, c)));
        } else {
            order.extend((0..width).rev().map(|c| cell(r, c)));
        }
    }
    let mut assignment = vec![0; l];
    for (pos, &region) in order.iter().enumerate() {
        assignment[region] = pos * zones / l;
    }
    DistrictingInstance::new(zones, &edges, travel, arrival, 1.0)?
        .with_coords(coords)?
        .with_base_plan(Plan(assignment))
}

/// Synthetic city: `regions` random points in the unit square joined by
/// their Gabriel graph, Euclidean travel times, lognormal demand
/// (sigma 0.75) and a service rate putting mean utilization near 0.4. The
/// base plan grows zones greedily from spread-out seed regions.
pub fn atlanta_like_instance(regions: usize, zones: usize, seed: RngSeed) -> Result<DistrictingInstance> {
    if zones == 0 || regions < zones || regions > zones * MAX_ZONE_UNITS {
        return Err(Error::InvalidConfig(format!(
            "cannot split {regions} regions into {zones} zones of at most {MAX_ZONE_UNITS}"
        )));
    }
    let mut rng = seed.stream("atlanta/points");
    let points: Vec<[f64; 2]> = (0..regions)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let dist2 = |a: usize, b: usize| {
        (points[a][0] - points[b][0]).powi(2) + (points[a][1] - points[b][1]).powi(2)
    };
    // Gabriel graph: a-b adjacent iff no third point lies inside the circle
    // with diameter ab. It contains the Euclidean MST, hence is connected.
    let mut edges = Vec::new();
    for a in 0..regions {
        for b in a + 1..regions {
            let ab = dist2(a, b);
            if (0..regions).all(|c| c == a || c == b || dist2(a, c) + dist2(b, c) >= ab) {
                edges.push([a, b]);
            }
        }
    }
    let travel = (0..regions)
        .map(|a| (0..regions).map(|b| dist2(a, b).sqrt()).collect())
        .collect();
    let lognormal = LogNormal::new(0.0, 0.75).expect("valid lognormal");
    let mut demand = seed.stream("atlanta/lambda");
    let arrival: Vec<f64> = (0..regions).map(|_| lognormal.sample(&mut demand)).collect();
    let mu = arrival.iter().sum::<f64>() / (0.4 * regions as f64);
    let instance = DistrictingInstance::new(zones, &edges, travel, arrival, mu)?.with_coords(points)?;

    let mut grow = seed.stream("atlanta/base");
    for _ in 0..64 {
        let plan = grow_plan(&instance, &mut grow);
        if check_admissible(&instance, &plan).is_ok() {
            return instance.with_base_plan(plan);
        }
    }
    Err(Error::InvalidConfig("region growth did not produce an admissible plan".into()))
}

// Farthest-point seeds, then the smallest zone with a free neighbor absorbs
// the free neighbor closest to its seed.
fn grow_plan(instance: &DistrictingInstance, rng: &mut Stream) -> Plan {
    let l = instance.regions();
    let j = instance.zones();
    let mut seeds = vec![rng.random_range(0..l)];
    while seeds.len() < j {
        let next = (0..l)
            .filter(|r| !seeds.contains(r))
            .max_by(|&a, &b| {
                let da = seeds.iter().map(|&s| instance.travel(s, a)).fold(f64::INFINITY, f64::min);
                let db = seeds.iter().map(|&s| instance.travel(s, b)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("enough regions");
        seeds.push(next);
    }
    const FREE: usize = usize::MAX;
    let mut assignment = vec![FREE; l];
    let mut sizes = vec![1; j];
    for (zone, &s) in seeds.iter().enumerate() {
        assignment[s] = zone;
    }
    let mut free = l - j;
    while free > 0 {
        let mut order: Vec<usize> = (0..j).collect();
        order.sort_by_key(|&z| (sizes[z], z));
        let grown = order.into_iter().find_map(|zone| {
            (0..l)
                .filter(|&r| {
                    assignment[r] == FREE
                        && instance.neighbors(r).iter().any(|&n| assignment[n] == zone)
                })
                .min_by(|&a, &b| {
                    instance
                        .travel(seeds[zone], a)
                        .total_cmp(&instance.travel(seeds[zone], b))
                        .then(a.cmp(&b))
                })
                .map(|r| (zone, r))
        });
        let (zone, region) = grown.expect("connected graph always has a frontier");
        assignment[region] = zone;
        sizes[zone] += 1;
        free -= 1;
    }
    Plan(assignment)
}
