//! Exhaustive reference solvers for tiny instances.
//!
//! Nothing here calls into the optimizing modules. Every solver enumerates
//! assignment vectors in lexicographic order (point `i` gets center index
//! `a[i]`, points in ascending id) and keeps the first strictly cheaper one.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{FairnessPolicy, Instance, Profile};
use crate::{LocationId, PointId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_points: usize,
    pub max_centers: usize,
    pub max_groups: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_points: 12,
            max_centers: 3,
            max_groups: 3,
        }
    }
}

impl OracleLimits {
    fn check(&self, points: usize, centers: usize, groups: usize) -> Result<()> {
        if points > self.max_points || centers > self.max_centers || groups > self.max_groups {
            return Err(Error::TooLarge(format!(
                "oracle limited to {} points, {} centers, {} groups; got {points}, {centers}, {groups}",
                self.max_points, self.max_centers, self.max_groups
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAssignment {
    pub cost: f64,
    pub centers: Vec<LocationId>,
    pub assignment: BTreeMap<PointId, LocationId>,
}

/// Cheapest assignment of every point to one of `centers` such that each
/// center's cluster profile is admitted by `policy_for(center)`, or `None`.
pub fn brute_fair_assignment_with<'p>(
    instance: &Instance,
    centers: &[LocationId],
    policy_for: impl Fn(LocationId) -> &'p FairnessPolicy,
    limits: OracleLimits,
) -> Result<Option<OracleAssignment>> {
    let n = instance.len();
    let k = centers.len();
    let g = instance.num_groups();
    limits.check(n, k, g)?;
    if k == 0 {
        return Err(Error::InvalidInput("no centers given".into()));
    }
    let points = instance.points();
    let mut dist = vec![vec![0.0; k]; n];
    for (i, p) in points.iter().enumerate() {
        for (c, &loc) in centers.iter().enumerate() {
            dist[i][c] = instance.metric().distance(p.location, loc)?;
        }
    }
    let policies: Vec<&FairnessPolicy> = centers.iter().map(|&c| policy_for(c)).collect();

    let mut search = Search {
        dist: &dist,
        groups: points.iter().map(|p| p.group).collect(),
        policies: &policies,
        admitted: vec![HashMap::new(); k],
        profiles: vec![vec![0i64; g]; k],
        choice: vec![0; n],
        best: None,
    };
    search.descend(0, 0.0)?;
    Ok(search.best.map(|(cost, choice)| OracleAssignment {
        cost,
        centers: centers.to_vec(),
        assignment: points
            .iter()
            .zip(choice)
            .map(|(p, c)| (p.id, centers[c]))
            .collect(),
    }))
}

/// Depth-first walk over assignment vectors; point `i` tries centers in
/// ascending order, so leaves are visited in lexicographic order.
struct Search<'a> {
    dist: &'a [Vec<f64>],
    groups: Vec<usize>,
    policies: &'a [&'a FairnessPolicy],
    /// Membership answers per center, keyed by profile.
    admitted: Vec<HashMap<Vec<i64>, bool>>,
    profiles: Vec<Vec<i64>>,
    choice: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, i: usize, cost: f64) -> Result<()> {
        if i == self.choice.len() {
            for c in 0..self.profiles.len() {
                if !self.admits(c)? {
                    return Ok(());
                }
            }
            if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                self.best = Some((cost, self.choice.clone()));
            }
            return Ok(());
        }
        for c in 0..self.profiles.len() {
            self.choice[i] = c;
            self.profiles[c][self.groups[i]] += 1;
            self.descend(i + 1, cost + self.dist[i][c])?;
            self.profiles[c][self.groups[i]] -= 1;
        }
        Ok(())
    }

    fn admits(&mut self, c: usize) -> Result<bool> {
        if let Some(&a) = self.admitted[c].get(&self.profiles[c]) {
            return Ok(a);
        }
        let a = self.policies[c].admits(&Profile::from(self.profiles[c].clone()))?;
        self.admitted[c].insert(self.profiles[c].clone(), a);
        Ok(a)
    }
}

pub fn brute_fair_assignment(
    instance: &Instance,
    centers: &[LocationId],
    policy: &FairnessPolicy,
    limits: OracleLimits,
) -> Result<Option<OracleAssignment>> {
    brute_fair_assignment_with(instance, centers, |_| policy, limits)
}

/// All `k`-subsets of `items` in lexicographic order.
fn subsets(items: &[LocationId], k: usize) -> Vec<Vec<LocationId>> {
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(k);
    fn rec(items: &[LocationId], k: usize, start: usize, pick: &mut Vec<LocationId>, out: &mut Vec<Vec<LocationId>>) {
        if pick.len() == k {
            out.push(pick.clone());
            return;
        }
        for i in start..items.len() {
            pick.push(items[i]);
            rec(items, k, i + 1, pick, out);
            pick.pop();
        }
    }
    rec(items, k, 0, &mut pick, &mut out);
    out
}

/// Optimal fair clustering with `k` centers chosen among all locations of
/// the instance metric.
pub fn brute_fair_clustering(
    instance: &Instance,
    k: usize,
    policy: &FairnessPolicy,
    limits: OracleLimits,
) -> Result<Option<OracleAssignment>> {
    let sites = instance.sites();
    if k == 0 || k > sites.len() {
        return Err(Error::InvalidInput(format!("cannot open {k} of {} locations", sites.len())));
    }
    let mut best: Option<OracleAssignment> = None;
    for centers in subsets(sites, k) {
        if let Some(sol) = brute_fair_assignment(instance, &centers, policy, limits)? {
            if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
                best = Some(sol);
            }
        }
    }
    Ok(best)
}

/// Optimal unconstrained k-median over all locations of the instance metric.
pub fn brute_kmedian(instance: &Instance, k: usize, limits: OracleLimits) -> Result<(f64, Vec<LocationId>)> {
    let sites = instance.sites();
    limits.check(instance.len(), k, instance.num_groups())?;
    if k == 0 || k > sites.len() {
        return Err(Error::InvalidInput(format!("cannot open {k} of {} locations", sites.len())));
    }
    let mut best: Option<(f64, Vec<LocationId>)> = None;
    for centers in subsets(sites, k) {
        let mut cost = 0.0;
        for p in instance.points() {
            let mut near = f64::INFINITY;
            for &c in &centers {
                near = near.min(instance.metric().distance(p.location, c)?);
            }
            cost += near;
        }
        if best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, centers));
        }
    }
    Ok(best.expect("at least one subset"))
}
