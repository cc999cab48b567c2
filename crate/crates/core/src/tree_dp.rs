//! Exact fair assignment on a tree metric.
//!
//! The tree is first made binary with zero-profile Steiner nodes. Then for
//! every node `u` and every net-import profile `q` of its subtree, `M[u, q]`
//! holds the cheapest partial assignment in which every center inside the
//! subtree is fair, counting each edge's length once per net unit of flow
//! crossing it. `M[root, 0]` is the optimal fair assignment cost.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::frt::HstTree;
use crate::model::{enumerate_box, AssignmentPlan, FairnessPolicy, Profile};
use crate::LocationId;

/// Upper bound on the number of profiles enumerated for one policy.
pub const MAX_PROFILE_BOX: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Hosts the points of a location and may open a center there.
    Site(LocationId),
    /// Auxiliary node: no points, no center.
    Steiner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryNode {
    pub kind: NodeKind,
    pub parent: Option<usize>,
    pub children: Option<(usize, usize)>,
    pub edge_to_parent: f64,
    pub profile: Profile,
}

/// Rooted tree where every internal node has exactly two children.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTree {
    nodes: Vec<BinaryNode>,
    root: usize,
    num_groups: usize,
}

impl BinaryTree {
    pub fn nodes(&self) -> &[BinaryNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &BinaryNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// Children before parents.
    pub fn post_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((u, expanded)) = stack.pop() {
            if expanded {
                order.push(u);
                continue;
            }
            stack.push((u, true));
            if let Some((y, z)) = self.nodes[u].children {
                stack.push((z, false));
                stack.push((y, false));
            }
        }
        order
    }

    /// Path length between two nodes.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let ancestors = |mut v: usize| {
            let mut chain = vec![(v, 0.0)];
            let mut acc = 0.0;
            while let Some(p) = self.nodes[v].parent {
                acc += self.nodes[v].edge_to_parent;
                chain.push((p, acc));
                v = p;
            }
            chain
        };
        let from_a: HashMap<usize, f64> = ancestors(a).into_iter().collect();
        for (v, db) in ancestors(b) {
            if let Some(da) = from_a.get(&v) {
                return da + db;
            }
        }
        unreachable!("nodes of one tree share the root")
    }

    /// Node hosting each location.
    pub fn site_nodes(&self) -> BTreeMap<LocationId, usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.kind {
                NodeKind::Site(loc) => Some((loc, i)),
                NodeKind::Steiner => None,
            })
            .collect()
    }
}

/// Makes `tree` binary.
///
/// A node with `k > 2` children `v_1..v_k` becomes a path `u = u_0, u_1, …,
/// u_{k−2}` of new zero-length Steiner edges; `v_1` stays under `u`, `v_j`
/// (for `2 ≤ j ≤ k−1`) moves under `u_{j−1}` and `v_k` under `u_{k−2}`, all
/// keeping their edge lengths. A node with one child gets a Steiner leaf at
/// distance zero. Original nodes keep their ids; new nodes are appended in
/// order of creation.
pub fn binarize(
    tree: &HstTree,
    profiles: &BTreeMap<LocationId, Profile>,
    num_groups: usize,
) -> Result<BinaryTree> {
    let src = tree.nodes();
    let mut nodes: Vec<BinaryNode> = src
        .iter()
        .map(|n| {
            let (kind, profile) = match n.location {
                Some(loc) => (
                    NodeKind::Site(loc),
                    profiles
                        .get(&loc)
                        .cloned()
                        .unwrap_or_else(|| Profile::zeros(num_groups)),
                ),
                None => (NodeKind::Steiner, Profile::zeros(num_groups)),
            };
            BinaryNode {
                kind,
                parent: n.parent,
                children: None,
                edge_to_parent: n.edge_to_parent,
                profile,
            }
        })
        .collect();
    for p in nodes.iter().map(|n| &n.profile) {
        if p.len() != num_groups {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: num_groups,
            });
        }
    }
    let placed: BTreeMap<LocationId, usize> = nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| match n.kind {
            NodeKind::Site(l) => Some((l, i)),
            NodeKind::Steiner => None,
        })
        .collect();
    if let Some((loc, _)) = profiles
        .iter()
        .find(|(loc, p)| !p.is_zero() && !placed.contains_key(loc))
    {
        return Err(Error::UnknownLocation(*loc));
    }

    let steiner = |parent: usize| BinaryNode {
        kind: NodeKind::Steiner,
        parent: Some(parent),
        children: None,
        edge_to_parent: 0.0,
        profile: Profile::zeros(num_groups),
    };

    for (u, node) in src.iter().enumerate() {
        let ch = &node.children;
        match ch.len() {
            0 => {}
            1 => {
                let s = nodes.len();
                nodes.push(steiner(u));
                nodes[u].children = Some((ch[0], s));
            }
            2 => nodes[u].children = Some((ch[0], ch[1])),
            k => {
                // path u_0 = u, u_1..u_{k-2}
                let mut path = vec![u];
                for i in 1..=k - 2 {
                    let id = nodes.len();
                    nodes.push(steiner(path[i - 1]));
                    path.push(id);
                }
                for i in 0..k - 2 {
                    nodes[path[i]].children = Some((ch[i], path[i + 1]));
                    nodes[ch[i]].parent = Some(path[i]);
                }
                let last = path[k - 2];
                nodes[last].children = Some((ch[k - 2], ch[k - 1]));
                nodes[ch[k - 2]].parent = Some(last);
                nodes[ch[k - 1]].parent = Some(last);
            }
        }
    }
    Ok(BinaryTree {
        nodes,
        root: tree.root(),
        num_groups,
    })
}

/// Fairness policy per center.
#[derive(Debug, Clone, Copy)]
pub enum NodePolicies<'a> {
    Uniform(&'a FairnessPolicy),
    PerSite(&'a BTreeMap<LocationId, FairnessPolicy>),
}

impl<'a> NodePolicies<'a> {
    pub fn get(&self, site: LocationId) -> Result<&'a FairnessPolicy> {
        match self {
            Self::Uniform(p) => Ok(p),
            Self::PerSite(map) => map.get(&site).ok_or(Error::UnknownLocation(site)),
        }
    }
}

/// DP table of one node: sorted net-import profiles with their costs.
#[derive(Debug, Clone, Default)]
pub struct NodeTable {
    keys: Vec<Profile>,
    costs: Vec<f64>,
    back: Vec<Option<(u32, u32)>>,
    index: HashMap<Profile, usize>,
}

impl NodeTable {
    fn from_map(map: HashMap<Profile, (f64, Option<(u32, u32)>)>) -> Self {
        let mut entries: Vec<_> = map.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut t = NodeTable::default();
        for (i, (q, (cost, back))) in entries.into_iter().enumerate() {
            t.index.insert(q.clone(), i);
            t.keys.push(q);
            t.costs.push(cost);
            t.back.push(back);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// `M[u, q]`, or `None` for +∞.
    pub fn get(&self, q: &Profile) -> Option<f64> {
        self.index.get(q).map(|&i| self.costs[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Profile, f64)> {
        self.keys.iter().zip(self.costs.iter().copied())
    }
}

#[derive(Debug, Clone)]
pub struct DpTable {
    tables: Vec<NodeTable>,
    root: usize,
    num_groups: usize,
}

impl DpTable {
    pub fn node(&self, u: usize) -> &NodeTable {
        &self.tables[u]
    }

    /// `M[root, 0]`.
    pub fn root_cost(&self) -> Option<f64> {
        self.tables[self.root].get(&Profile::zeros(self.num_groups))
    }

    pub fn total_entries(&self) -> usize {
        self.tables.iter().map(NodeTable::len).sum()
    }

    /// One line per finite entry: `node q cost`, with `q` comma-separated.
    pub fn dump(&self, mut out: impl Write) -> io::Result<()> {
        for (u, t) in self.tables.iter().enumerate() {
            for (q, cost) in t.entries() {
                let q: Vec<String> = q.counts().iter().map(i64::to_string).collect();
                writeln!(out, "{u} {} {cost}", q.join(","))?;
            }
        }
        Ok(())
    }
}

/// Per-node bookkeeping shared by the fill and the reconstruction.
struct Subtrees {
    /// `v(T_u)`.
    totals: Vec<Profile>,
    /// Group totals over the whole tree.
    all: Profile,
}

fn subtree_totals(tree: &BinaryTree) -> Subtrees {
    let mut totals = vec![Profile::zeros(tree.num_groups); tree.nodes.len()];
    for u in tree.post_order() {
        let mut t = tree.nodes[u].profile.clone();
        if let Some((y, z)) = tree.nodes[u].children {
            t.add_assign(&totals[y]);
            t.add_assign(&totals[z]);
        }
        totals[u] = t;
    }
    let all = totals[tree.root].clone();
    Subtrees { totals, all }
}

fn within_bounds(q: &Profile, subtree: &Profile, all: &Profile) -> bool {
    q.counts()
        .iter()
        .zip(subtree.counts().iter().zip(all.counts()))
        .all(|(&qj, (&vj, &nj))| -vj <= qj && qj <= nj - vj)
}

/// Fills every node table. Unlike [`solve_dp`] this succeeds even when the
/// root has no entry at `q = 0`.
pub fn fill_tables(tree: &BinaryTree, policies: NodePolicies<'_>) -> Result<DpTable> {
    let sub = subtree_totals(tree);
    let bounds: Vec<i64> = sub.all.counts().to_vec();
    let mut admitted_cache: HashMap<*const FairnessPolicy, std::sync::Arc<Vec<Profile>>> =
        HashMap::new();
    let mut admitted_for = |site: LocationId| -> Result<std::sync::Arc<Vec<Profile>>> {
        let policy = policies.get(site)?;
        let key = policy as *const FairnessPolicy;
        if let Some(list) = admitted_cache.get(&key) {
            return Ok(list.clone());
        }
        let mut list = Vec::new();
        for p in enumerate_box(&bounds, MAX_PROFILE_BOX)? {
            if policy.admits(&p)? {
                list.push(p);
            }
        }
        let list = std::sync::Arc::new(list);
        admitted_cache.insert(key, list.clone());
        Ok(list)
    };

    let zero = Profile::zeros(tree.num_groups);
    let mut tables: Vec<Option<NodeTable>> = vec![None; tree.nodes.len()];
    for u in tree.post_order() {
        let node = &tree.nodes[u];
        let mut map: HashMap<Profile, (f64, Option<(u32, u32)>)> = HashMap::new();
        match (node.children, node.kind) {
            (None, NodeKind::Steiner) => {
                map.insert(zero.clone(), (0.0, None));
            }
            (None, NodeKind::Site(site)) => {
                for p in admitted_for(site)?.iter() {
                    map.insert(p.sub(&node.profile), (0.0, None));
                }
            }
            (Some((y, z)), kind) => {
                let (ty, tz) = (
                    tables[y].as_ref().expect("post-order"),
                    tables[z].as_ref().expect("post-order"),
                );
                let (dy, dz) = (tree.nodes[y].edge_to_parent, tree.nodes[z].edge_to_parent);
                // largest total a child pair may import: N − v(T_y) − v(T_z)
                let cap = sub.all.sub(&sub.totals[y]).sub(&sub.totals[z]);
                let mut joined: HashMap<Profile, (f64, u32, u32)> = HashMap::new();
                for (iy, qy) in ty.keys.iter().enumerate() {
                    let base = ty.costs[iy];
                    let cy = dy * qy.l1() as f64;
                    for (iz, qz) in tz.keys.iter().enumerate() {
                        let s = qy.add(qz);
                        let feasible = match kind {
                            NodeKind::Steiner => within_bounds(&s, &sub.totals[u], &sub.all),
                            NodeKind::Site(_) => {
                                s.counts().iter().zip(cap.counts()).all(|(a, b)| a <= b)
                            }
                        };
                        if !feasible {
                            continue;
                        }
                        let cost = base + tz.costs[iz] + cy + dz * qz.l1() as f64;
                        // keys are sorted, so the first minimum seen is the
                        // lexicographically smallest (q_y, q_z)
                        match joined.get(&s) {
                            Some(&(c, _, _)) if c <= cost => {}
                            _ => {
                                joined.insert(s, (cost, iy as u32, iz as u32));
                            }
                        }
                    }
                }
                match kind {
                    NodeKind::Steiner => {
                        for (s, (cost, iy, iz)) in joined {
                            map.insert(s, (cost, Some((iy, iz))));
                        }
                    }
                    NodeKind::Site(site) => {
                        let admitted = admitted_for(site)?;
                        for (s, (cost, iy, iz)) in &joined {
                            // cluster p = v(u) + q − s  =>  q = p − v(u) + s
                            let shift = s.sub(&node.profile);
                            for p in admitted.iter() {
                                let q = p.add(&shift);
                                if !within_bounds(&q, &sub.totals[u], &sub.all) {
                                    continue;
                                }
                                let better = match map.get(&q) {
                                    None => true,
                                    Some(&(c, Some(b))) => {
                                        *cost < c || (*cost == c && (*iy, *iz) < b)
                                    }
                                    Some(_) => unreachable!("internal entries carry back-references"),
                                };
                                if better {
                                    map.insert(q, (*cost, Some((*iy, *iz))));
                                }
                            }
                        }
                    }
                }
            }
        }
        tables[u] = Some(NodeTable::from_map(map));
    }
    Ok(DpTable {
        tables: tables.into_iter().map(|t| t.expect("all nodes visited")).collect(),
        root: tree.root,
        num_groups: tree.num_groups,
    })
}

/// Fills the tables and fails when no fair assignment exists.
pub fn solve_dp(tree: &BinaryTree, policies: NodePolicies<'_>) -> Result<DpTable> {
    let table = fill_tables(tree, policies)?;
    if table.root_cost().is_none() {
        return Err(Error::Infeasible(
            "no assignment satisfies the fairness policy at every center".into(),
        ));
    }
    Ok(table)
}

/// Result of walking the DP back from `M[root, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeAssignment {
    pub plan: AssignmentPlan,
    /// `M[root, 0]`.
    pub tree_cost: f64,
    /// Cluster profile `p(u)` per site.
    pub cluster_profiles: BTreeMap<LocationId, Profile>,
}

/// Recovers an optimal plan from a filled table.
///
/// Cluster profiles come straight from the back-references. Point flows
/// are then routed per group bottom-up: at every node the surplus and
/// deficit left over by its children (and the node itself) are matched in
/// ascending node-id order, and only the unmatched side travels further up.
/// No edge is crossed in both directions, so the plan's tree-metric cost is
/// exactly the table value.
pub fn reconstruct(tree: &BinaryTree, table: &DpTable) -> Result<TreeAssignment> {
    let g = tree.num_groups;
    let zero = Profile::zeros(g);
    let root_table = table.node(tree.root);
    let root_idx = *root_table
        .index
        .get(&zero)
        .ok_or_else(|| Error::Infeasible("root table has no entry at q = 0".into()))?;
    let tree_cost = root_table.costs[root_idx];

    // top-down: chosen entry per node
    let mut chosen = vec![usize::MAX; tree.nodes.len()];
    chosen[tree.root] = root_idx;
    let mut order = tree.post_order();
    order.reverse();
    for &u in &order {
        let entry = chosen[u];
        if let Some((y, z)) = tree.nodes[u].children {
            let (iy, iz) = table.node(u).back[entry]
                .ok_or_else(|| Error::Invariant(format!("node {u} lacks a back-reference")))?;
            chosen[y] = iy as usize;
            chosen[z] = iz as usize;
        }
    }
    let q_of = |u: usize| &table.node(u).keys[chosen[u]];

    let mut cluster_profiles = BTreeMap::new();
    let mut surplus: Vec<Profile> = vec![zero.clone(); tree.nodes.len()];
    for (u, node) in tree.nodes.iter().enumerate() {
        if let NodeKind::Site(loc) = node.kind {
            let mut p = node.profile.add(q_of(u));
            if let Some((y, z)) = node.children {
                p = p.sub(q_of(y)).sub(q_of(z));
            }
            if !p.is_nonnegative() {
                return Err(Error::Invariant(format!("negative cluster profile {p} at node {u}")));
            }
            surplus[u] = node.profile.sub(&p);
            cluster_profiles.insert(loc, p);
        }
    }

    let site_of = |u: usize| match tree.nodes[u].kind {
        NodeKind::Site(loc) => loc,
        NodeKind::Steiner => unreachable!("only sites carry surplus"),
    };
    let mut flows: BTreeMap<(LocationId, LocationId), Profile> = BTreeMap::new();
    let post = tree.post_order();
    for j in 0..g {
        // pending[u]: unmatched (node, amount) from T_u; all amounts share a sign
        let mut pending: Vec<Vec<(usize, i64)>> = vec![Vec::new(); tree.nodes.len()];
        for &u in &post {
            let mut here: Vec<(usize, i64)> = Vec::new();
            if let Some((y, z)) = tree.nodes[u].children {
                here.append(&mut pending[y]);
                here.append(&mut pending[z]);
            }
            if surplus[u][j] != 0 {
                here.push((u, surplus[u][j]));
            }
            let mut exporters: Vec<(usize, i64)> = here.iter().copied().filter(|e| e.1 > 0).collect();
            let mut importers: Vec<(usize, i64)> = here
                .iter()
                .copied()
                .filter(|e| e.1 < 0)
                .map(|(v, a)| (v, -a))
                .collect();
            exporters.sort_unstable();
            importers.sort_unstable();
            let (mut a, mut b) = (0, 0);
            while a < exporters.len() && b < importers.len() {
                let amount = exporters[a].1.min(importers[b].1);
                flows
                    .entry((site_of(exporters[a].0), site_of(importers[b].0)))
                    .or_insert_with(|| zero.clone())
                    .bump(j, amount);
                exporters[a].1 -= amount;
                importers[b].1 -= amount;
                if exporters[a].1 == 0 {
                    a += 1;
                }
                if importers[b].1 == 0 {
                    b += 1;
                }
            }
            let mut left: Vec<(usize, i64)> = exporters[a..].to_vec();
            left.extend(importers[b..].iter().map(|&(v, x)| (v, -x)));
            let net: i64 = left.iter().map(|e| e.1).sum();
            if net != -q_of(u)[j] {
                return Err(Error::Invariant(format!(
                    "flow out of subtree {u} for group {j} is {net}, table says {}",
                    -q_of(u)[j]
                )));
            }
            pending[u] = left;
        }
        if !pending[tree.root].is_empty() {
            return Err(Error::Invariant(format!("unrouted flow for group {j}")));
        }
    }
    for (u, node) in tree.nodes.iter().enumerate() {
        if let NodeKind::Site(loc) = node.kind {
            let p = &cluster_profiles[&loc];
            let kept: Vec<i64> = (0..g).map(|j| node.profile[j].min(p[j])).collect();
            let kept = Profile::from_counts(kept);
            if !kept.is_zero() {
                flows.insert((loc, loc), kept);
            }
            let _ = u;
        }
    }
    let centers = cluster_profiles.keys().copied().collect();
    let plan = AssignmentPlan::new(flows, centers, g)?;
    Ok(TreeAssignment {
        plan,
        tree_cost,
        cluster_profiles,
    })
}
