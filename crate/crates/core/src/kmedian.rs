//! Unfair k-median seeding by single-swap local search.
//!
//! Centers are drawn from occupied point locations. Initialization picks a
//! uniformly random first center and then greedily adds the location
//! farthest from the current set. A swap is applied only while it improves
//! the cost by more than a factor `(1 − ε/k)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::{LocationId, PointId};

/// Improvement threshold parameter of the local search.
pub const LOCAL_SEARCH_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSolution {
    /// Distinct center locations, ascending.
    pub centers: Vec<LocationId>,
    /// Each point's nearest center (ties to the lowest center index).
    pub voronoi: BTreeMap<PointId, LocationId>,
    /// `Σ_x d(loc(x), voronoi(x))`.
    pub cost: f64,
}

pub fn solve_kmedian(instance: &Instance, k: usize, seed: u64) -> Result<SeedSolution> {
    let candidates = instance.occupied_locations();
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if k > candidates.len() {
        return Err(Error::Infeasible(format!(
            "k = {k} exceeds the {} distinct point locations",
            candidates.len()
        )));
    }
    let table = instance.metric().table(&candidates)?;
    let index: BTreeMap<LocationId, usize> =
        candidates.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut weight = vec![0.0f64; candidates.len()];
    for p in instance.points() {
        weight[index[&p.location]] += 1.0;
    }
    let n = candidates.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|x| table.get(x, centers[0])).collect();
    while centers.len() < k {
        let mut best = None;
        for x in 0..n {
            if centers.contains(&x) {
                continue;
            }
            if best.is_none_or(|(_, d)| nearest[x] > d) {
                best = Some((x, nearest[x]));
            }
        }
        let (pick, _) = best.expect("k <= candidate count");
        centers.push(pick);
        for x in 0..n {
            nearest[x] = nearest[x].min(table.get(x, pick));
        }
    }

    let cost_of = |centers: &[usize]| -> f64 {
        (0..n)
            .map(|x| {
                weight[x]
                    * centers
                        .iter()
                        .map(|&c| table.get(x, c))
                        .fold(f64::INFINITY, f64::min)
            })
            .sum()
    };

    let threshold = 1.0 - LOCAL_SEARCH_EPSILON / k as f64;
    let mut current = cost_of(&centers);
    loop {
        // nearest and second-nearest center slot per location
        let mut first = vec![(f64::INFINITY, usize::MAX); n];
        let mut second = vec![f64::INFINITY; n];
        for x in 0..n {
            for (slot, &c) in centers.iter().enumerate() {
                let d = table.get(x, c);
                if d < first[x].0 {
                    second[x] = first[x].0;
                    first[x] = (d, slot);
                } else if d < second[x] {
                    second[x] = d;
                }
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for cand in 0..n {
                if centers.contains(&cand) {
                    continue;
                }
                let mut cost = 0.0;
                for x in 0..n {
                    let keep = if first[x].1 == slot { second[x] } else { first[x].0 };
                    cost += weight[x] * keep.min(table.get(x, cand));
                }
                if best.is_none_or(|(b, _, _)| cost < b) {
                    best = Some((cost, slot, cand));
                }
            }
        }
        match best {
            Some((cost, slot, cand)) if cost < current * threshold => {
                centers[slot] = cand;
                current = cost;
            }
            _ => break,
        }
    }

    let mut centers: Vec<LocationId> = centers.iter().map(|&i| candidates[i]).collect();
    centers.sort_unstable();
    let voronoi = voronoi_assign(instance, &centers)?;
    let metric = instance.metric();
    let mut cost = 0.0;
    for p in instance.points() {
        cost += metric.distance(p.location, voronoi[&p.id])?;
    }
    Ok(SeedSolution {
        centers,
        voronoi,
        cost,
    })
}

/// Nearest center per point; ties go to the center listed first.
pub fn voronoi_assign(
    instance: &Instance,
    centers: &[LocationId],
) -> Result<BTreeMap<PointId, LocationId>> {
    if centers.is_empty() {
        return Err(Error::InvalidInput("no centers given".into()));
    }
    let metric = instance.metric();
    let mut out = BTreeMap::new();
    for p in instance.points() {
        let mut best = (f64::INFINITY, centers[0]);
        for &c in centers {
            let d = metric.distance(p.location, c)?;
            if d < best.0 {
                best = (d, c);
            }
        }
        out.insert(p.id, best.1);
    }
    Ok(out)
}
