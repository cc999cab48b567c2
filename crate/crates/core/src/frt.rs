//! Random dominating tree embeddings and the best-of-trees driver.
//!
//! A tree is sampled by the usual ball-carving construction: a random
//! permutation of locations and a radius scale `β = 2^u`, `u ~ U[0,1)`.
//! Distances are scaled so the smallest nonzero one is 1. A level-`i`
//! cluster is cut into balls of radius `β·2^(i−1)` around locations taken in
//! permutation order; the edge from a level-`i` node to its parent has
//! length `2^(i+1)`. Chains of single-child nodes are contracted, summing
//! their edge lengths, and a location's leaf is the cluster at the level
//! where it first becomes a singleton.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, TreeMetric};
use crate::model::{evaluate_cost, AssignmentPlan, Instance};
use crate::tree_dp::{binarize, reconstruct, solve_dp, NodePolicies};
use crate::LocationId;

/// Relative slack when checking that tree distances dominate the metric.
pub const DOMINATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HstNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub edge_to_parent: f64,
    /// Level in the scaled hierarchy; leaves sit at 0.
    pub level: i32,
    /// Location hosted by this node, if any.
    pub location: Option<LocationId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HstTree {
    nodes: Vec<HstNode>,
    root: usize,
    /// Length of one scaled unit, when sampled.
    unit: Option<f64>,
}

impl HstTree {
    /// Checks parent/child consistency, reachability and that no location
    /// appears twice.
    pub fn from_nodes(nodes: Vec<HstNode>, root: usize) -> Result<Self> {
        if root >= nodes.len() || nodes[root].parent.is_some() {
            return Err(Error::InvalidInput(format!("node {root} is not a valid root")));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &c in &nodes[u].children {
                if c >= nodes.len() || seen[c] || nodes[c].parent != Some(u) {
                    return Err(Error::InvalidInput(format!("inconsistent child {c} of node {u}")));
                }
                if !(nodes[c].edge_to_parent >= 0.0 && nodes[c].edge_to_parent.is_finite()) {
                    return Err(Error::InvalidInput(format!("invalid edge length above node {c}")));
                }
                seen[c] = true;
                stack.push(c);
            }
        }
        if let Some(lost) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("node {lost} is unreachable from the root")));
        }
        let mut locations = BTreeSet::new();
        for n in &nodes {
            if let Some(l) = n.location {
                if !locations.insert(l) {
                    return Err(Error::InvalidInput(format!("location {l} placed twice")));
                }
            }
        }
        Ok(Self {
            nodes,
            root,
            unit: None,
        })
    }

    pub fn nodes(&self) -> &[HstNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &HstNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Node hosting each location.
    pub fn location_nodes(&self) -> BTreeMap<LocationId, usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.location.map(|l| (l, i)))
            .collect()
    }

    /// Locations in the subtree of every node.
    pub fn subtree_locations(&self) -> Vec<BTreeSet<LocationId>> {
        let mut out = vec![BTreeSet::new(); self.nodes.len()];
        let mut order = vec![self.root];
        let mut i = 0;
        while i < order.len() {
            order.extend(self.nodes[order[i]].children.iter().copied());
            i += 1;
        }
        for &u in order.iter().rev() {
            let mut set: BTreeSet<LocationId> = self.nodes[u].location.into_iter().collect();
            for &c in &self.nodes[u].children {
                set.extend(out[c].iter().copied());
            }
            out[u] = set;
        }
        out
    }

    /// Shortest-path metric of the tree over its locations.
    pub fn path_metric(&self) -> Result<MetricSpace> {
        let parent = self.nodes.iter().map(|n| n.parent).collect();
        let edge = self.nodes.iter().map(|n| n.edge_to_parent).collect();
        let tree = TreeMetric::new(parent, edge)?;
        let placed = self.location_nodes();
        let ids: Vec<LocationId> = placed.keys().copied().collect();
        let nodes: Vec<usize> = placed.values().copied().collect();
        MetricSpace::from_tree(tree, ids, &nodes)
    }

    /// Pairs of `metric` whose tree distance falls short of the metric.
    pub fn domination_violations(
        &self,
        metric: &MetricSpace,
    ) -> Result<Vec<(LocationId, LocationId)>> {
        let tree = self.path_metric()?;
        let ids = metric.ids();
        let mut bad = Vec::new();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let d = metric.distance(a, b)?;
                if tree.distance(a, b)? < d * (1.0 - DOMINATION_TOLERANCE) {
                    bad.push((a, b));
                }
            }
        }
        Ok(bad)
    }

    /// Nodes whose parent edge does not span the levels in between, i.e.
    /// differs from `unit · (2^(p+1) − 2^(i+1))`. Zero-length edges (merged
    /// duplicates and padding) are skipped. Empty for unsampled trees.
    pub fn level_violations(&self) -> Vec<usize> {
        let Some(unit) = self.unit else {
            return Vec::new();
        };
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| {
                let Some(p) = n.parent else { return false };
                if n.edge_to_parent == 0.0 {
                    return false;
                }
                let pl = self.nodes[p].level;
                let expect = unit * (2f64.powi(pl + 1) - 2f64.powi(n.level + 1));
                pl <= n.level || (n.edge_to_parent - expect).abs() > 1e-9 * expect
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Samples one dominating tree over the locations of `metric`.
pub fn sample_hst(metric: &MetricSpace, seed: u64) -> Result<HstTree> {
    let ids = metric.ids().to_vec();
    if ids.is_empty() {
        return Err(Error::InvalidInput("cannot embed an empty metric".into()));
    }
    let table = metric.table(&ids)?;
    let n = ids.len();
    for i in 0..n {
        for j in 0..n {
            if !table.get(i, j).is_finite() {
                return Err(Error::InvalidInput("metric has a non-finite distance".into()));
            }
        }
    }

    // coincident locations share one representative
    let mut reps: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match reps.iter().position(|&r| table.get(i, r) == 0.0) {
            Some(k) => members[k].push(i),
            None => {
                reps.push(i);
                members.push(vec![i]);
            }
        }
    }
    let m = reps.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng);
    let u: f64 = rng.gen();
    let beta = 2f64.powf(u).min(2.0 - f64::EPSILON);

    let mut nodes: Vec<HstNode> = Vec::new();
    let push = |nodes: &mut Vec<HstNode>, parent: Option<usize>, edge: f64, level: i32| {
        nodes.push(HstNode {
            parent,
            children: Vec::new(),
            edge_to_parent: edge,
            level,
            location: None,
        });
        if let Some(p) = parent {
            let id = nodes.len() - 1;
            nodes[p].children.push(id);
        }
        nodes.len() - 1
    };
    // hang the location(s) of representative `r` at `node`
    let place = |nodes: &mut Vec<HstNode>, node: usize, r: usize| {
        if members[r].len() == 1 {
            nodes[node].location = Some(ids[members[r][0]]);
        } else {
            for &x in &members[r] {
                let leaf = push(nodes, Some(node), 0.0, 0);
                nodes[leaf].location = Some(ids[x]);
            }
        }
    };

    if m == 1 {
        let root = push(&mut nodes, None, 0.0, 0);
        place(&mut nodes, root, 0);
        return Ok(HstTree {
            nodes,
            root,
            unit: Some(1.0),
        });
    }

    let mut min_nz = f64::INFINITY;
    let mut diam: f64 = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let d = table.get(reps[a], reps[b]);
            min_nz = min_nz.min(d);
            diam = diam.max(d);
        }
    }
    let scaled = |a: usize, b: usize| table.get(reps[a], reps[b]) / min_nz;
    let diam = diam / min_nz;
    let mut top = 1;
    while 2f64.powi(top) < diam {
        top += 1;
    }

    // Each work item is a level-`level` cluster hanging below `parent`. Its
    // node is created at one level above the first cut that splits it, so
    // single-child chains never materialize.
    let span = |upper: i32, lower: i32| (2f64.powi(upper + 1) - 2f64.powi(lower + 1)) * min_nz;
    let mut root = usize::MAX;
    let mut work = VecDeque::from([(None::<(usize, i32)>, top, (0..m).collect::<Vec<usize>>())]);
    while let Some((parent, level, cluster)) = work.pop_front() {
        if cluster.len() == 1 {
            let (p, pl) = parent.expect("the root cluster has several points");
            let leaf = push(&mut nodes, Some(p), span(pl, level), level);
            place(&mut nodes, leaf, cluster[0]);
            continue;
        }
        let mut i = level - 1;
        let parts = loop {
            let radius = beta * 2f64.powi(i - 1);
            let mut left: Vec<usize> = cluster.clone();
            let mut parts: Vec<Vec<usize>> = Vec::new();
            for &c in &perm {
                if left.is_empty() {
                    break;
                }
                let (inside, outside): (Vec<usize>, Vec<usize>) =
                    left.iter().partition(|&&x| scaled(c, x) <= radius);
                if !inside.is_empty() {
                    parts.push(inside);
                }
                left = outside;
            }
            if parts.len() > 1 || i == 0 {
                break parts;
            }
            i -= 1;
        };
        debug_assert!(parts.len() > 1, "level-0 balls separate distinct points");
        let node = match parent {
            None => {
                root = push(&mut nodes, None, 0.0, i + 1);
                root
            }
            Some((p, pl)) => push(&mut nodes, Some(p), span(pl, i + 1), i + 1),
        };
        for part in parts {
            work.push_back((Some((node, i + 1)), i, part));
        }
    }
    Ok(HstTree {
        nodes,
        root,
        unit: Some(min_nz),
    })
}

/// `⌈4·log₂(n+1)⌉ + 1` trials for `n` points.
pub fn default_trials(num_points: usize) -> usize {
    (4.0 * ((num_points + 1) as f64).log2()).ceil() as usize + 1
}

/// Seeds of the first `trials` trees; a longer run extends a shorter one.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.next_u64()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeSolution {
    pub plan: AssignmentPlan,
    /// Cost of `plan` under the instance metric.
    pub true_cost: f64,
    /// DP optimum on the winning tree.
    pub tree_cost: f64,
    pub trial: usize,
    pub trial_seed: u64,
    /// True cost of every trial, in trial order.
    pub trial_costs: Vec<f64>,
}

/// Solves the fair assignment on one sampled tree.
pub fn solve_on_tree(
    instance: &Instance,
    policies: NodePolicies<'_>,
    seed: u64,
) -> Result<(AssignmentPlan, f64, f64)> {
    let hst = sample_hst(instance.metric(), seed)?;
    let tree = binarize(&hst, &instance.location_profiles(), instance.num_groups())?;
    let table = solve_dp(&tree, policies)?;
    let sol = reconstruct(&tree, &table)?;
    sol.plan.validate(instance)?;
    let cost = evaluate_cost(instance, &sol.plan)?;
    Ok((sol.plan, cost, sol.tree_cost))
}

/// Solves on `trials` independent trees and keeps the plan that is cheapest
/// under the real metric (ties to the earliest trial). Every location of the
/// instance metric is a candidate center.
pub fn best_of_trees(
    instance: &Instance,
    policies: NodePolicies<'_>,
    trials: usize,
    seed: u64,
) -> Result<TreeSolution> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one tree is needed".into()));
    }
    let seeds = trial_seeds(seed, trials);
    let run = |s: &u64| solve_on_tree(instance, policies, *s);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(AssignmentPlan, f64, f64)>> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(AssignmentPlan, f64, f64)>> = seeds.iter().map(run).collect();

    let mut solved = Vec::with_capacity(trials);
    for r in results {
        solved.push(r?);
    }
    let trial_costs: Vec<f64> = solved.iter().map(|s| s.1).collect();
    let mut best = 0;
    for (t, &c) in trial_costs.iter().enumerate() {
        if c < trial_costs[best] {
            best = t;
        }
    }
    let (plan, true_cost, tree_cost) = solved.swap_remove(best);
    log::debug!("best tree {best} of {trials}: cost {true_cost} (tree {tree_cost})");
    Ok(TreeSolution {
        plan,
        true_cost,
        tree_cost,
        trial: best,
        trial_seed: seeds[best],
        trial_costs,
    })
}
