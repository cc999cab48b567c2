use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::Serialize;

use super::instance::{Instance, Point};
use super::policy::FairnessPolicy;
use super::profile::Profile;
use crate::error::{Error, Result};
use crate::{LocationId, PointId};

/// Aggregate assignment `r(q, c)`: per-group counts of points at location
/// `q` sent to center `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentPlan {
    flows: BTreeMap<(LocationId, LocationId), Profile>,
    centers: Vec<LocationId>,
    num_groups: usize,
}

impl AssignmentPlan {
    /// Zero flows are dropped. Centers are sorted and deduplicated.
    pub fn new(
        flows: BTreeMap<(LocationId, LocationId), Profile>,
        mut centers: Vec<LocationId>,
        num_groups: usize,
    ) -> Result<Self> {
        centers.sort_unstable();
        centers.dedup();
        let mut kept = BTreeMap::new();
        for ((q, c), r) in flows {
            if r.len() != num_groups {
                return Err(Error::LengthMismatch {
                    left: r.len(),
                    right: num_groups,
                });
            }
            r.ensure_nonnegative()?;
            if centers.binary_search(&c).is_err() {
                return Err(Error::InvalidInput(format!(
                    "flow from {q} targets {c}, which is not a center"
                )));
            }
            if !r.is_zero() {
                kept.insert((q, c), r);
            }
        }
        Ok(Self {
            flows: kept,
            centers,
            num_groups,
        })
    }

    /// Aggregates a point-level assignment over `instance`'s locations.
    pub fn from_point_assignment(
        instance: &Instance,
        assignment: &BTreeMap<PointId, LocationId>,
        centers: Vec<LocationId>,
    ) -> Result<Self> {
        let mut flows: BTreeMap<(LocationId, LocationId), Profile> = BTreeMap::new();
        for p in instance.points() {
            let c = *assignment
                .get(&p.id)
                .ok_or_else(|| Error::InvalidInput(format!("point {} is unassigned", p.id)))?;
            flows
                .entry((p.location, c))
                .or_insert_with(|| Profile::zeros(instance.num_groups()))
                .bump(p.group, 1);
        }
        if assignment.len() != instance.len() {
            return Err(Error::InvalidInput(
                "assignment mentions points outside the instance".into(),
            ));
        }
        Self::new(flows, centers, instance.num_groups())
    }

    pub fn flows(&self) -> &BTreeMap<(LocationId, LocationId), Profile> {
        &self.flows
    }

    pub fn centers(&self) -> &[LocationId] {
        &self.centers
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// `R(c) = Σ_q r(q, c)` for every center (zero for empty clusters).
    pub fn center_profiles(&self) -> BTreeMap<LocationId, Profile> {
        let mut out: BTreeMap<LocationId, Profile> = self
            .centers
            .iter()
            .map(|&c| (c, Profile::zeros(self.num_groups)))
            .collect();
        for ((_, c), r) in &self.flows {
            out.get_mut(c).expect("flow targets are centers").add_assign(r);
        }
        out
    }

    /// Checks `Σ_c r(q,c) = v(q)` at every location of `instance`.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if instance.num_groups() != self.num_groups {
            return Err(Error::LengthMismatch {
                left: self.num_groups,
                right: instance.num_groups(),
            });
        }
        let mut outgoing: BTreeMap<LocationId, Profile> = BTreeMap::new();
        for ((q, _), r) in &self.flows {
            outgoing
                .entry(*q)
                .or_insert_with(|| Profile::zeros(self.num_groups))
                .add_assign(r);
        }
        let expected = instance.location_profiles();
        for (q, out) in &outgoing {
            match expected.get(q) {
                Some(v) if v == out => {}
                _ => return Err(Error::FlowConservation { location: *q }),
            }
        }
        for (q, v) in &expected {
            if !v.is_zero() && !outgoing.contains_key(q) {
                return Err(Error::FlowConservation { location: *q });
            }
        }
        for &c in &self.centers {
            if !instance.metric().contains(c) {
                return Err(Error::UnknownLocation(c));
            }
        }
        Ok(())
    }

    /// Point-level assignment consistent with the flows.
    ///
    /// At each location, points of one group are taken in ascending
    /// `priority` order (ties by point id) and handed first to the remote
    /// centers in ascending id order, then to the local center. Lower
    /// priorities therefore move first.
    pub fn assign_points(
        &self,
        instance: &Instance,
        priority: impl Fn(&Point) -> u64,
    ) -> Result<BTreeMap<PointId, LocationId>> {
        self.validate(instance)?;
        let mut buckets: BTreeMap<(LocationId, usize), Vec<&Point>> = BTreeMap::new();
        for p in instance.points() {
            buckets.entry((p.location, p.group)).or_default().push(p);
        }
        for pts in buckets.values_mut() {
            pts.sort_by_key(|p| (priority(p), p.id));
        }
        let mut out = BTreeMap::new();
        let mut by_source: BTreeMap<LocationId, Vec<(LocationId, &Profile)>> = BTreeMap::new();
        for ((q, c), r) in &self.flows {
            by_source.entry(*q).or_default().push((*c, r));
        }
        for (q, mut targets) in by_source {
            // remote centers first, home center last
            targets.sort_by_key(|&(c, _)| (c == q, c));
            for g in 0..self.num_groups {
                let pts = buckets.get(&(q, g)).map(Vec::as_slice).unwrap_or(&[]);
                let mut next = 0;
                for &(c, r) in &targets {
                    for _ in 0..r[g] {
                        let p = pts.get(next).ok_or(Error::FlowConservation { location: q })?;
                        out.insert(p.id, c);
                        next += 1;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `Σ_c Σ_q d(q, c)·‖r(q, c)‖₁`, summed in `(q, c)` order.
pub fn evaluate_cost(instance: &Instance, plan: &AssignmentPlan) -> Result<f64> {
    plan.validate(instance)?;
    let metric = instance.metric();
    let mut cost = 0.0;
    for ((q, c), r) in plan.flows() {
        cost += metric.distance(*q, *c)? * r.l1() as f64;
    }
    Ok(cost)
}

/// A plan together with its point-level realization and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub plan: AssignmentPlan,
    pub point_assignment: BTreeMap<PointId, LocationId>,
    pub cost: f64,
}

impl Clustering {
    /// Realizes `plan` on `instance` with ties broken by ascending point id.
    pub fn from_plan(instance: &Instance, plan: AssignmentPlan) -> Result<Self> {
        Self::from_plan_with_priority(instance, plan, |_| 0)
    }

    pub fn from_plan_with_priority(
        instance: &Instance,
        plan: AssignmentPlan,
        priority: impl Fn(&Point) -> u64,
    ) -> Result<Self> {
        let point_assignment = plan.assign_points(instance, priority)?;
        let cost = evaluate_cost(instance, &plan)?;
        Ok(Self {
            plan,
            point_assignment,
            cost,
        })
    }

    /// Builds the plan from a point-level map over `instance`.
    pub fn from_assignment(
        instance: &Instance,
        point_assignment: BTreeMap<PointId, LocationId>,
        centers: Vec<LocationId>,
    ) -> Result<Self> {
        let plan = AssignmentPlan::from_point_assignment(instance, &point_assignment, centers)?;
        let cost = evaluate_cost(instance, &plan)?;
        Ok(Self {
            plan,
            point_assignment,
            cost,
        })
    }

    pub fn nonempty_clusters(&self) -> usize {
        self.plan
            .center_profiles()
            .values()
            .filter(|p| !p.is_zero())
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterAudit {
    pub center: LocationId,
    pub profile: Profile,
    pub admitted: bool,
    /// Exact-fairness additive violation, when the policy is exact.
    pub gamma: Option<Rational64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessAudit {
    pub centers: Vec<CenterAudit>,
}

impl FairnessAudit {
    pub fn all_admitted(&self) -> bool {
        self.centers.iter().all(|c| c.admitted)
    }

    pub fn max_gamma(&self) -> Option<Rational64> {
        self.centers.iter().filter_map(|c| c.gamma).max()
    }
}

/// Per-center admission and exact-fairness violation.
pub fn audit_fairness(policy: &FairnessPolicy, plan: &AssignmentPlan) -> Result<FairnessAudit> {
    audit_fairness_with(|_| policy, plan)
}

/// As [`audit_fairness`] with a policy chosen per center.
pub fn audit_fairness_with<'p>(
    policy_for: impl Fn(LocationId) -> &'p FairnessPolicy,
    plan: &AssignmentPlan,
) -> Result<FairnessAudit> {
    let mut centers = Vec::new();
    for (c, profile) in plan.center_profiles() {
        let policy = policy_for(c);
        centers.push(CenterAudit {
            center: c,
            admitted: policy.admits(&profile)?,
            gamma: policy.exact_violation(&profile),
            profile,
        });
    }
    Ok(FairnessAudit { centers })
}
