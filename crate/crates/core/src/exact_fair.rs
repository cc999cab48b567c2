//! Exact fairness through a small movable set.
//!
//! A near-fair assignment (additive violation below 2 per group) is split
//! into fairlets per cluster. Everything except the leftover points and a
//! bounded number of fairlets per cluster is frozen in place, and only the
//! remaining points are re-solved exactly with the tree DP.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};

use crate::consolidation::{consolidate, lift_clustering};
use crate::error::{Error, Result};
use crate::frt::best_of_trees;
use crate::kmedian::solve_kmedian;
use crate::lp::{rational_from_f64, rational_from_int, solve, LinearProgram, LpOutcome, Relation};
use crate::model::{
    audit_fairness, exact_gamma, AssignmentPlan, Clustering, FairnessPolicy, Instance, Point,
    Profile,
};
use crate::pipeline::{DpInput, ExactStats, PipelineConfig, PipelineOutput};
use crate::tree_dp::NodePolicies;
use crate::{LocationId, PointId};

/// Largest total point count the exhaustive engine accepts.
pub const EXHAUSTIVE_MAX_POINTS: usize = 16;
/// Largest number of centers the exhaustive engine accepts.
pub const EXHAUSTIVE_MAX_CENTERS: usize = 4;

/// Minimal exactly fair point multiset: `f_j` points of group `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairletShape {
    pub f: u64,
    pub f_j: Vec<u64>,
}

/// Divides the group sizes by their gcd. Empty groups get `f_j = 0`.
pub fn compute_fairlet_shape(group_sizes: &[usize]) -> Result<FairletShape> {
    let g = group_sizes.iter().fold(0usize, |a, &b| a.gcd(&b));
    if g == 0 {
        return Err(Error::InvalidInput("every group is empty".into()));
    }
    let f_j: Vec<u64> = group_sizes.iter().map(|&s| (s / g) as u64).collect();
    Ok(FairletShape {
        f: f_j.iter().sum(),
        f_j,
    })
}

fn group_sizes_of(policy: &FairnessPolicy) -> Result<&[u64]> {
    match policy.unshifted() {
        FairnessPolicy::Exact { group_sizes } => Ok(group_sizes),
        _ => Err(Error::InvalidInput("an exact-fairness policy is required".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearFair {
    pub plan: AssignmentPlan,
    pub cost: f64,
    /// Optimum of the fractional exactly-fair program.
    pub lp_value: f64,
    /// Largest violation over centers.
    pub gamma: Rational64,
}

fn max_gamma(sizes: &[u64], plan: &AssignmentPlan) -> Rational64 {
    plan.center_profiles()
        .values()
        .map(|p| exact_gamma(sizes, p))
        .max()
        .unwrap_or_else(Rational64::zero)
}

/// Near-fair assignment of a consolidated instance to `centers`.
///
/// First the fractional exactly-fair program over aggregate variables
/// `r_j(q, c)` is solved exactly. Its per-center group loads `L_cj` and
/// totals `T_c` are then used as floor/ceil windows in a second program with
/// the same supplies and objective. That program's rows form two laminar
/// families, so its vertices are integral; the fractional optimum lies in it,
/// so the rounded cost never exceeds the fractional one. Each group count
/// ends within 1 of its load and each size within 1 of `T_c`, which keeps
/// the violation below 2.
pub fn near_fair_assign(
    reduced: &Instance,
    centers: &[LocationId],
    policy: &FairnessPolicy,
) -> Result<NearFair> {
    let sizes = group_sizes_of(policy)?.to_vec();
    let g = reduced.num_groups();
    if sizes.len() != g {
        return Err(Error::LengthMismatch {
            left: sizes.len(),
            right: g,
        });
    }
    if centers.is_empty() {
        return Err(Error::InvalidInput("no centers given".into()));
    }
    let total: u64 = sizes.iter().sum();
    let supplies: Vec<(LocationId, usize, i64)> = reduced
        .location_profiles()
        .into_iter()
        .flat_map(|(q, v)| (0..g).map(move |j| (q, j, v[j])))
        .filter(|&(_, _, s)| s > 0)
        .collect();
    // variable index: supply cell × center
    let k = centers.len();
    let var = |cell: usize, c: usize| cell * k + c;
    let num_vars = supplies.len() * k;
    let mut objective = Vec::with_capacity(num_vars);
    let mut costs = Vec::with_capacity(num_vars);
    for &(q, _, _) in &supplies {
        for &c in centers {
            let d = reduced.metric().distance(q, c)?;
            objective.push(rational_from_f64(d)?);
            costs.push(d);
        }
    }
    let supply_rows = |lp: &mut LinearProgram| {
        for (cell, &(_, _, s)) in supplies.iter().enumerate() {
            let row = (0..k).map(|c| (var(cell, c), rational_from_int(1))).collect();
            lp.add(row, Relation::Eq, rational_from_int(s));
        }
    };

    // fractional exactly-fair program: total·L_cj = |X_j|·T_c
    let mut lp = LinearProgram::new(num_vars);
    lp.objective = objective.clone();
    supply_rows(&mut lp);
    for c in 0..k {
        for j in 0..g {
            let row = supplies
                .iter()
                .enumerate()
                .map(|(cell, &(_, jj, _))| {
                    let own = if jj == j { total as i64 } else { 0 };
                    (var(cell, c), rational_from_int(own - sizes[j] as i64))
                })
                .filter(|(_, a)| !a.is_zero())
                .collect();
            lp.add(row, Relation::Eq, rational_from_int(0));
        }
    }
    let (x, lp_value) = match solve(&lp)? {
        LpOutcome::Optimal { x, value } => (x, value),
        LpOutcome::Infeasible => {
            return Err(Error::Infeasible("the fractional exactly-fair program is infeasible".into()))
        }
        LpOutcome::Unbounded => return Err(Error::Invariant("nonnegative costs cannot be unbounded".into())),
    };

    // rounding program with floor/ceil windows
    let mut round = LinearProgram::new(num_vars);
    round.objective = objective;
    supply_rows(&mut round);
    let window = |lp: &mut LinearProgram, vars: Vec<usize>| {
        let load: BigRational = vars.iter().map(|&v| x[v].clone()).sum();
        let row: Vec<_> = vars.iter().map(|&v| (v, rational_from_int(1))).collect();
        lp.add(row.clone(), Relation::Ge, BigRational::from_integer(load.floor().to_integer()));
        lp.add(row, Relation::Le, BigRational::from_integer(load.ceil().to_integer()));
    };
    for c in 0..k {
        for j in 0..g {
            let vars: Vec<usize> = (0..supplies.len())
                .filter(|&cell| supplies[cell].1 == j)
                .map(|cell| var(cell, c))
                .collect();
            window(&mut round, vars);
        }
        window(&mut round, (0..supplies.len()).map(|cell| var(cell, c)).collect());
    }
    let y = match solve(&round)? {
        LpOutcome::Optimal { x, .. } => x,
        _ => return Err(Error::Invariant("rounding program lost the fractional optimum".into())),
    };

    let mut flows: BTreeMap<(LocationId, LocationId), Profile> = BTreeMap::new();
    for (cell, &(q, j, _)) in supplies.iter().enumerate() {
        for (c, &center) in centers.iter().enumerate() {
            let v = &y[var(cell, c)];
            if !v.is_integer() {
                return Err(Error::Invariant(format!("rounded flow {v} is fractional")));
            }
            let v = v.to_integer().to_i64().ok_or_else(|| Error::Invariant("flow overflow".into()))?;
            if v > 0 {
                flows
                    .entry((q, center))
                    .or_insert_with(|| Profile::zeros(g))
                    .bump(j, v);
            }
        }
    }
    let plan = AssignmentPlan::new(flows, centers.to_vec(), g)?;
    let mut cost = 0.0;
    for ((q, c), r) in plan.flows() {
        cost += reduced.metric().distance(*q, *c)? * r.l1() as f64;
    }
    let gamma = max_gamma(&sizes, &plan);
    if gamma > Rational64::from_integer(3) {
        return Err(Error::Invariant(format!("near-fair assignment has violation {gamma}")));
    }
    let lp_value = lp_value.to_f64().unwrap_or(f64::NAN);
    if cost > lp_value + 1e-9 * (1.0 + lp_value.abs()) {
        return Err(Error::Invariant(format!(
            "rounded cost {cost} exceeds the fractional optimum {lp_value}"
        )));
    }
    Ok(NearFair {
        plan,
        cost,
        lp_value,
        gamma,
    })
}

/// Cheapest aggregate assignment with violation at most 3, by enumerating
/// every split of every `(location, group)` cell over the centers.
pub fn exhaustive_near_fair(
    reduced: &Instance,
    centers: &[LocationId],
    policy: &FairnessPolicy,
) -> Result<NearFair> {
    let sizes = group_sizes_of(policy)?.to_vec();
    let g = reduced.num_groups();
    let k = centers.len();
    if reduced.len() > EXHAUSTIVE_MAX_POINTS || k > EXHAUSTIVE_MAX_CENTERS || k == 0 {
        return Err(Error::TooLarge(format!(
            "exhaustive engine takes at most {EXHAUSTIVE_MAX_POINTS} points and 1..={EXHAUSTIVE_MAX_CENTERS} centers"
        )));
    }
    let cells: Vec<(LocationId, usize, i64)> = reduced
        .location_profiles()
        .into_iter()
        .flat_map(|(q, v)| (0..g).map(move |j| (q, j, v[j])))
        .filter(|&(_, _, s)| s > 0)
        .collect();
    let mut dist = Vec::with_capacity(cells.len());
    for &(q, _, _) in &cells {
        let row: Vec<f64> = centers
            .iter()
            .map(|&c| reduced.metric().distance(q, c))
            .collect::<Result<_>>()?;
        dist.push(row);
    }
    let three = Rational64::from_integer(3);

    // splits[i] holds the current composition of cell i over the centers
    fn compositions(total: i64, parts: usize) -> Vec<Vec<i64>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        let mut out = Vec::new();
        for first in 0..=total {
            for mut rest in compositions(total - first, parts - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    let options: Vec<Vec<Vec<i64>>> = cells.iter().map(|&(_, _, s)| compositions(s, k)).collect();
    let mut pick = vec![0usize; cells.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let mut loads = vec![vec![0i64; g]; k];
        let mut cost = 0.0;
        for (i, &o) in pick.iter().enumerate() {
            for c in 0..k {
                let a = options[i][o][c];
                loads[c][cells[i].1] += a;
                cost += dist[i][c] * a as f64;
            }
        }
        let ok = loads
            .iter()
            .all(|l| exact_gamma(&sizes, &Profile::from(l.clone())) <= three);
        if ok && best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, pick.clone()));
        }
        let mut i = pick.len();
        let done = loop {
            if i == 0 {
                break true;
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break false;
            }
            pick[i] = 0;
        };
        if done {
            break;
        }
    }
    let (cost, pick) =
        best.ok_or_else(|| Error::Infeasible("no assignment within violation 3".into()))?;
    let mut flows: BTreeMap<(LocationId, LocationId), Profile> = BTreeMap::new();
    for (i, &o) in pick.iter().enumerate() {
        for c in 0..k {
            let a = options[i][o][c];
            if a > 0 {
                flows
                    .entry((cells[i].0, centers[c]))
                    .or_insert_with(|| Profile::zeros(g))
                    .bump(cells[i].1, a);
            }
        }
    }
    let plan = AssignmentPlan::new(flows, centers.to_vec(), g)?;
    let gamma = max_gamma(&sizes, &plan);
    Ok(NearFair {
        plan,
        cost,
        lp_value: f64::NAN,
        gamma,
    })
}

/// Fairlets and leftover points of one cluster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FairletDecomposition {
    pub fairlets: Vec<Vec<PointId>>,
    /// Leftover (problematic) points, ascending.
    pub problematic: Vec<PointId>,
}

impl FairletDecomposition {
    pub fn len(&self) -> usize {
        self.fairlets.iter().map(Vec::len).sum::<usize>() + self.problematic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Packs a cluster into as many fairlets as possible. Within each group the
/// pinned points are used first, then the rest by ascending id.
pub fn decompose_fairlets(
    cluster: &[Point],
    shape: &FairletShape,
    pinned: &BTreeSet<PointId>,
) -> FairletDecomposition {
    let g = shape.f_j.len();
    let mut by_group: Vec<Vec<PointId>> = vec![Vec::new(); g];
    let mut sorted: Vec<&Point> = cluster.iter().collect();
    sorted.sort_by_key(|p| (!pinned.contains(&p.id), p.id));
    for p in sorted {
        by_group[p.group].push(p.id);
    }
    let count = (0..g)
        .filter(|&j| shape.f_j[j] > 0)
        .map(|j| by_group[j].len() as u64 / shape.f_j[j])
        .min()
        .unwrap_or(0) as usize;
    let mut fairlets = Vec::with_capacity(count);
    for t in 0..count {
        let mut fairlet = Vec::with_capacity(shape.f as usize);
        for j in 0..g {
            let w = shape.f_j[j] as usize;
            fairlet.extend_from_slice(&by_group[j][t * w..(t + 1) * w]);
        }
        fairlets.push(fairlet);
    }
    let mut problematic: Vec<PointId> = (0..g)
        .flat_map(|j| by_group[j][count * shape.f_j[j] as usize..].to_vec())
        .collect();
    problematic.sort_unstable();
    FairletDecomposition {
        fairlets,
        problematic,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MovableSet {
    pub points: BTreeSet<PointId>,
    /// 0 for problematic points, `t + 1` for points of fairlet `t`.
    pub rank: BTreeMap<PointId, u64>,
}

/// `4k²f² + 4kf`.
pub fn movable_bound(k: usize, shape: &FairletShape) -> u64 {
    let kf = k as u64 * shape.f;
    4 * kf * kf + 4 * kf
}

/// All problematic points plus the first `min(n_i, 4kf)` fairlets of every
/// cluster.
pub fn select_movable(
    decompositions: &BTreeMap<LocationId, FairletDecomposition>,
    k: usize,
    shape: &FairletShape,
) -> Result<MovableSet> {
    let cap = 4 * k * shape.f as usize;
    let mut set = MovableSet::default();
    for d in decompositions.values() {
        for &x in &d.problematic {
            set.points.insert(x);
            set.rank.insert(x, 0);
        }
        for (t, fairlet) in d.fairlets.iter().take(cap).enumerate() {
            for &x in fairlet {
                set.points.insert(x);
                set.rank.insert(x, t as u64 + 1);
            }
        }
    }
    let bound = movable_bound(k, shape);
    if set.points.len() as u64 > bound {
        return Err(Error::Invariant(format!(
            "movable set has {} points, above the bound {bound}",
            set.points.len()
        )));
    }
    Ok(set)
}

/// Exactly fair clustering through a near-fair assignment and a re-solve of
/// the movable points only.
pub fn exact_pipeline(instance: &Instance, k: usize, config: &PipelineConfig) -> Result<PipelineOutput> {
    let policy = FairnessPolicy::exact(instance.group_sizes());
    let shape = compute_fairlet_shape(instance.group_sizes())?;
    let (kmedian_seed, tree_seed) = config.stage_seeds();
    let seed_solution = solve_kmedian(instance, k, kmedian_seed)?;
    let reduced = consolidate(instance, &seed_solution)?;
    let base = &reduced.base;
    let centers = base.sites().to_vec();

    let near = near_fair_assign(base, &centers, &policy)?;
    let staged = near.plan.assign_points(base, |_| 0)?;

    let mut members: BTreeMap<LocationId, Vec<Point>> =
        centers.iter().map(|&c| (c, Vec::new())).collect();
    for p in base.points() {
        members.get_mut(&staged[&p.id]).expect("assigned to a center").push(*p);
    }
    let mut decompositions = BTreeMap::new();
    let mut problematic_sizes = Vec::new();
    for (&c, cluster) in &members {
        let pinned: BTreeSet<PointId> =
            cluster.iter().filter(|p| p.location == c).map(|p| p.id).collect();
        let d = decompose_fairlets(cluster, &shape, &pinned);
        if d.problematic.len() as u64 >= 4 * shape.f {
            return Err(Error::Invariant(format!(
                "cluster {c} has {} problematic points, at least 4f = {}",
                d.problematic.len(),
                4 * shape.f
            )));
        }
        problematic_sizes.push(d.problematic.len());
        decompositions.insert(c, d);
    }
    let movable = select_movable(&decompositions, centers.len(), &shape)?;

    let g = base.num_groups();
    let mut frozen: BTreeMap<LocationId, Profile> =
        centers.iter().map(|&c| (c, Profile::zeros(g))).collect();
    for p in base.points() {
        if !movable.points.contains(&p.id) {
            frozen.get_mut(&staged[&p.id]).expect("center").bump(p.group, 1);
        }
    }
    let per_center: BTreeMap<LocationId, FairnessPolicy> = frozen
        .iter()
        .map(|(&c, off)| Ok((c, FairnessPolicy::shifted(policy.clone(), off.clone())?)))
        .collect::<Result<_>>()?;

    let sub = base.subset(|p| movable.points.contains(&p.id));
    let trials = config.trials_for(instance);
    let tree = best_of_trees(&sub, NodePolicies::PerSite(&per_center), trials, tree_seed)?;
    let moved = tree
        .plan
        .assign_points(&sub, |p| movable.rank.get(&p.id).copied().unwrap_or(0))?;

    let dp = DpInput {
        instance: sub,
        policies: per_center,
        tree_seed: tree.trial_seed,
    };
    let mut assignment = staged;
    for (id, c) in moved {
        assignment.insert(id, c);
    }
    let reduced_clustering = Clustering::from_assignment(base, assignment, centers)?;
    let audit = audit_fairness(&policy, &reduced_clustering.plan)?;
    if !audit.all_admitted() || audit.max_gamma().is_some_and(|x| !x.is_zero()) {
        return Err(Error::Invariant("exact pipeline produced an unfair cluster".into()));
    }
    let clustering = lift_clustering(&reduced_clustering, &reduced, instance)?;
    log::info!(
        "exact pipeline: {} movable of {} points, reduced cost {}",
        movable.points.len(),
        instance.len(),
        reduced_clustering.cost
    );
    Ok(PipelineOutput {
        seed_solution,
        reduced,
        reduced_clustering,
        clustering,
        audit,
        tree_cost: tree.tree_cost,
        trials,
        best_trial: tree.trial,
        dp,
        exact: Some(ExactStats {
            fairlet_size: shape.f,
            near_fair_cost: near.cost,
            near_fair_gamma: near.gamma,
            problematic_sizes,
            movable_points: movable.points.len(),
            movable_bound: movable_bound(k, &shape),
        }),
    })
}
