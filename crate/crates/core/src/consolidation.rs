//! Location consolidation: move every point onto its seed center.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kmedian::SeedSolution;
use crate::model::{Clustering, Instance};
use crate::{LocationId, PointId};

/// Absolute slack for the relocation bound, relative to the costs involved.
const LIFT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ReducedInstance {
    /// Points relocated to the seed centers; metric restricted to the centers.
    pub base: Instance,
    /// `Σ_x d(original loc, new loc)`.
    pub relocation_cost: f64,
    /// Original location of every point.
    pub provenance: BTreeMap<PointId, LocationId>,
}

pub fn consolidate(instance: &Instance, seed: &SeedSolution) -> Result<ReducedInstance> {
    let metric = Arc::new(instance.metric().restrict(&seed.centers)?);
    let mut relocation_cost = 0.0;
    for p in instance.points() {
        let to = *seed
            .voronoi
            .get(&p.id)
            .ok_or_else(|| Error::InvalidInput(format!("point {} missing from seed", p.id)))?;
        relocation_cost += instance.metric().distance(p.location, to)?;
    }
    let base = instance.relocated(|p| seed.voronoi[&p.id], metric)?;
    let provenance = instance.points().iter().map(|p| (p.id, p.location)).collect();
    Ok(ReducedInstance {
        base,
        relocation_cost,
        provenance,
    })
}

/// Re-costs a clustering of the reduced instance against the original
/// locations. The cost may move by at most the relocation cost; a larger
/// change means the metric breaks the triangle inequality.
pub fn lift_clustering(
    reduced: &Clustering,
    reduced_instance: &ReducedInstance,
    original: &Instance,
) -> Result<Clustering> {
    for (id, loc) in &reduced_instance.provenance {
        match original.point(*id) {
            Some(p) if p.location == *loc => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "provenance of point {id} does not match the original instance"
                )))
            }
        }
    }
    let lifted = Clustering::from_assignment(
        original,
        reduced.point_assignment.clone(),
        reduced.plan.centers().to_vec(),
    )?;
    let slack = reduced_instance.relocation_cost
        + LIFT_TOLERANCE * (1.0 + lifted.cost.max(reduced.cost));
    if (lifted.cost - reduced.cost).abs() > slack {
        return Err(Error::Invariant(format!(
            "lifted cost {} differs from reduced cost {} by more than the relocation cost {}",
            lifted.cost, reduced.cost, reduced_instance.relocation_cost
        )));
    }
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmedian::solve_kmedian;
    use crate::metric::MetricSpace;
    use crate::model::{AssignmentPlan, Point, Profile};

    fn line(xs: &[f64], groups: &[usize]) -> Instance {
        let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let m = MetricSpace::from_euclidean((0..xs.len()).collect(), &coords).unwrap();
        Instance::from_groups(groups, 2, Arc::new(m)).unwrap()
    }

    #[test]
    fn identity_when_supported_on_centers() {
        let inst = line(&[0.0, 5.0], &[0, 1]);
        let seed = solve_kmedian(&inst, 2, 0).unwrap();
        let red = consolidate(&inst, &seed).unwrap();
        assert_eq!(red.relocation_cost, 0.0);
        assert_eq!(red.base.points(), inst.points());
    }

    #[test]
    fn single_relocation() {
        let inst = line(&[0.0, 3.0, 100.0], &[0, 1, 0]);
        let seed = SeedSolution {
            centers: vec![0, 2],
            voronoi: BTreeMap::from([(0, 0), (1, 0), (2, 2)]),
            cost: 3.0,
        };
        let red = consolidate(&inst, &seed).unwrap();
        assert_eq!(red.relocation_cost, 3.0);
        let prof = red.base.location_profiles();
        assert_eq!(prof[&0], Profile::from(vec![1, 1]));
        assert_eq!(prof[&2], Profile::from(vec![1, 0]));
        assert_eq!(red.base.sites(), &[0, 2]);

        // any clustering of the reduced instance lifts within the relocation cost
        let assignment = BTreeMap::from([(0, 2), (1, 2), (2, 0)]);
        let reduced = Clustering::from_assignment(&red.base, assignment, vec![0, 2]).unwrap();
        let lifted = lift_clustering(&reduced, &red, &inst).unwrap();
        assert!((lifted.cost - reduced.cost).abs() <= 3.0);
    }

    #[test]
    fn four_point_line() {
        let inst = line(&[0.0, 1.0, 10.0, 11.0], &[0, 1, 0, 1]);
        let seed = solve_kmedian(&inst, 2, 3).unwrap();
        let red = consolidate(&inst, &seed).unwrap();
        assert_eq!(red.base.sites().len(), 2);
        assert_eq!(red.relocation_cost, seed.cost);
        let total = red
            .base
            .location_profiles()
            .values()
            .fold(Profile::zeros(2), |acc, p| acc.checked_add(p).unwrap());
        assert_eq!(total, inst.group_totals());
    }

    #[test]
    fn lift_detects_broken_metric() {
        // d(0,2) = 10 but d(0,1) = d(1,2) = 1
        let m = MetricSpace::from_matrix(
            vec![0, 1, 2],
            &[vec![0.0, 1.0, 10.0], vec![1.0, 0.0, 1.0], vec![10.0, 1.0, 0.0]],
        )
        .unwrap();
        let points = (0..3).map(|i| Point { id: i, group: 0, location: i }).collect();
        let inst = Instance::new(points, 1, Arc::new(m)).unwrap();
        let seed = SeedSolution {
            centers: vec![1, 2],
            voronoi: BTreeMap::from([(0, 1), (1, 1), (2, 2)]),
            cost: 1.0,
        };
        let red = consolidate(&inst, &seed).unwrap();
        let flows = BTreeMap::from([((1, 2), Profile::from(vec![2])), ((2, 2), Profile::from(vec![1]))]);
        let plan = AssignmentPlan::new(flows, vec![1, 2], 1).unwrap();
        let reduced = Clustering::from_plan(&red.base, plan).unwrap();
        assert!(matches!(
            lift_clustering(&reduced, &red, &inst),
            Err(Error::Invariant(_))
        ));
    }
}
