//! Metric spaces over location ids.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::LocationId;

/// Relative asymmetry tolerated in explicit distance matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Default size cap for the cubic triangle-inequality audit.
pub const TRIANGLE_AUDIT_CAP: usize = 512;

#[derive(Debug, Clone, PartialEq)]
enum MetricKind {
    Matrix { n: usize, data: Arc<Vec<f64>> },
    Euclidean { dim: usize, coords: Arc<Vec<f64>> },
    Tree(Arc<TreeMetric>),
}

/// A finite metric addressed by location id.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    kind: MetricKind,
    ids: Vec<LocationId>,
    /// Location id -> storage index (row, coordinate block, or tree node).
    slots: HashMap<LocationId, usize>,
}

/// Path metric of a rooted edge-weighted tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMetric {
    parent: Vec<Option<usize>>,
    hops: Vec<usize>,
    depth: Vec<f64>,
}

impl TreeMetric {
    /// `parent[v]` and `edge[v]` (length of the edge to the parent) per node.
    /// Exactly one node must be parentless.
    pub fn new(parent: Vec<Option<usize>>, edge: Vec<f64>) -> Result<Self> {
        let n = parent.len();
        if edge.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: edge.len(),
            });
        }
        if let Some(bad) = edge.iter().find(|e| !e.is_finite() || **e < 0.0) {
            return Err(Error::InvalidInput(format!("invalid tree edge length {bad}")));
        }
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if n > 0 && roots != 1 {
            return Err(Error::InvalidInput(format!("tree has {roots} roots")));
        }
        let mut hops = vec![usize::MAX; n];
        let mut depth = vec![0.0; n];
        for start in 0..n {
            let mut chain = Vec::new();
            let mut v = start;
            while hops[v] == usize::MAX {
                chain.push(v);
                match parent[v] {
                    Some(p) if p < n => v = p,
                    Some(p) => return Err(Error::InvalidInput(format!("parent {p} out of range"))),
                    None => break,
                }
                if chain.len() > n {
                    return Err(Error::InvalidInput("tree parent links form a cycle".into()));
                }
            }
            while let Some(u) = chain.pop() {
                match parent[u] {
                    None => {
                        hops[u] = 0;
                        depth[u] = 0.0;
                    }
                    Some(p) => {
                        if hops[p] == usize::MAX {
                            return Err(Error::InvalidInput("tree parent links form a cycle".into()));
                        }
                        hops[u] = hops[p] + 1;
                        depth[u] = depth[p] + edge[u];
                    }
                }
            }
        }
        Ok(Self { parent, hops, depth })
    }

    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    /// Distance from the root to `v`.
    pub fn depth(&self, v: usize) -> f64 {
        self.depth[v]
    }

    pub fn lca(&self, mut u: usize, mut v: usize) -> usize {
        while self.hops[u] > self.hops[v] {
            u = self.parent[u].unwrap();
        }
        while self.hops[v] > self.hops[u] {
            v = self.parent[v].unwrap();
        }
        while u != v {
            u = self.parent[u].unwrap();
            v = self.parent[v].unwrap();
        }
        u
    }

    /// `depth(u) + depth(v) − 2·depth(lca)`.
    pub fn node_distance(&self, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        let w = self.lca(u, v);
        self.depth[u] + self.depth[v] - 2.0 * self.depth[w]
    }
}

fn slot_map(ids: &[LocationId]) -> Result<HashMap<LocationId, usize>> {
    let mut slots = HashMap::with_capacity(ids.len());
    for (i, &id) in ids.iter().enumerate() {
        if slots.insert(id, i).is_some() {
            return Err(Error::InvalidInput(format!("duplicate location id {id}")));
        }
    }
    Ok(slots)
}

impl MetricSpace {
    /// Explicit distance matrix. Rows/columns follow `ids`. The diagonal must
    /// be zero, entries finite and nonnegative, and the matrix symmetric up to
    /// [`SYMMETRY_TOLERANCE`] relative error (the upper triangle is kept).
    pub fn from_matrix(ids: Vec<LocationId>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n {
            return Err(Error::InvalidInput(format!(
                "matrix has {} rows for {n} locations",
                rows.len()
            )));
        }
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "matrix entry ({i},{j}) = {d} is not a finite nonnegative distance"
                    )));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "matrix diagonal entry ({i},{i}) = {} must be 0",
                    row[i]
                )));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > SYMMETRY_TOLERANCE * a.abs().max(b.abs()) {
                    return Err(Error::InvalidInput(format!(
                        "matrix is asymmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                data[i * n + j] = a;
                data[j * n + i] = a;
            }
        }
        Ok(Self {
            kind: MetricKind::Matrix {
                n,
                data: Arc::new(data),
            },
            slots: slot_map(&ids)?,
            ids,
        })
    }

    /// Euclidean metric; `coords[i]` is the position of `ids[i]`.
    pub fn from_euclidean(ids: Vec<LocationId>, coords: &[Vec<f64>]) -> Result<Self> {
        if coords.len() != ids.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: coords.len(),
            });
        }
        let dim = coords.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(dim * coords.len());
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} has a non-finite coordinate")));
            }
            flat.extend_from_slice(c);
        }
        Ok(Self {
            kind: MetricKind::Euclidean {
                dim,
                coords: Arc::new(flat),
            },
            slots: slot_map(&ids)?,
            ids,
        })
    }

    /// Tree path metric; `nodes[i]` is the tree node hosting `ids[i]`.
    pub fn from_tree(tree: TreeMetric, ids: Vec<LocationId>, nodes: &[usize]) -> Result<Self> {
        if nodes.len() != ids.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: nodes.len(),
            });
        }
        if let Some(&bad) = nodes.iter().find(|&&v| v >= tree.num_nodes()) {
            return Err(Error::InvalidInput(format!("tree node {bad} out of range")));
        }
        let mut slots = slot_map(&ids)?;
        for (i, id) in ids.iter().enumerate() {
            slots.insert(*id, nodes[i]);
        }
        Ok(Self {
            kind: MetricKind::Tree(Arc::new(tree)),
            slots,
            ids,
        })
    }

    /// Location ids in construction order.
    pub fn ids(&self) -> &[LocationId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: LocationId) -> bool {
        self.slots.contains_key(&id)
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.kind, MetricKind::Tree(_))
    }

    fn slot(&self, id: LocationId) -> Result<usize> {
        self.slots.get(&id).copied().ok_or(Error::UnknownLocation(id))
    }

    fn slot_distance(&self, a: usize, b: usize) -> f64 {
        match &self.kind {
            MetricKind::Matrix { n, data } => data[a * n + b],
            MetricKind::Euclidean { dim, coords } => {
                let (x, y) = (&coords[a * dim..(a + 1) * dim], &coords[b * dim..(b + 1) * dim]);
                x.iter()
                    .zip(y)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt()
            }
            MetricKind::Tree(tree) => tree.node_distance(a, b),
        }
    }

    pub fn distance(&self, u: LocationId, v: LocationId) -> Result<f64> {
        let (a, b) = (self.slot(u)?, self.slot(v)?);
        if u == v {
            return Ok(0.0);
        }
        Ok(self.slot_distance(a, b))
    }

    /// Dense distance table over `ids` for hot loops.
    pub fn table(&self, ids: &[LocationId]) -> Result<DistanceTable> {
        let slots: Vec<usize> = ids.iter().map(|&id| self.slot(id)).collect::<Result<_>>()?;
        let n = ids.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = if ids[i] == ids[j] {
                    0.0
                } else {
                    self.slot_distance(slots[i], slots[j])
                };
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Ok(DistanceTable {
            ids: ids.to_vec(),
            n,
            data,
        })
    }

    /// The metric restricted to `subset` (sorted, deduplicated).
    pub fn restrict(&self, subset: &[LocationId]) -> Result<MetricSpace> {
        let mut ids = subset.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::InvalidInput("cannot restrict a metric to an empty set".into()));
        }
        let slots: Vec<usize> = ids.iter().map(|&id| self.slot(id)).collect::<Result<_>>()?;
        match &self.kind {
            MetricKind::Tree(tree) => {
                let mut map = HashMap::with_capacity(ids.len());
                for (id, s) in ids.iter().zip(&slots) {
                    map.insert(*id, *s);
                }
                Ok(MetricSpace {
                    kind: MetricKind::Tree(Arc::clone(tree)),
                    ids,
                    slots: map,
                })
            }
            MetricKind::Euclidean { dim, coords } => {
                let rows: Vec<Vec<f64>> = slots
                    .iter()
                    .map(|&s| coords[s * dim..(s + 1) * dim].to_vec())
                    .collect();
                MetricSpace::from_euclidean(ids, &rows)
            }
            MetricKind::Matrix { .. } => {
                let n = ids.len();
                let mut data = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            data[i * n + j] = self.slot_distance(slots[i], slots[j]);
                        }
                    }
                }
                Ok(MetricSpace {
                    kind: MetricKind::Matrix {
                        n,
                        data: Arc::new(data),
                    },
                    slots: slot_map(&ids)?,
                    ids,
                })
            }
        }
    }
}

/// Row-major distances over a fixed id list.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    ids: Vec<LocationId>,
    n: usize,
    data: Vec<f64>,
}

impl DistanceTable {
    pub fn ids(&self) -> &[LocationId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Triples `(a, b, c)` with `d(a,c) > d(a,b) + d(b,c)` beyond a relative
/// tolerance of 1e-9. Refuses metrics with more than `cap` locations.
pub fn audit_triangle(
    metric: &MetricSpace,
    cap: usize,
) -> Result<Vec<(LocationId, LocationId, LocationId)>> {
    let n = metric.len();
    if n > cap {
        return Err(Error::TooLarge(format!(
            "triangle audit over {n} locations exceeds cap {cap}"
        )));
    }
    let table = metric.table(metric.ids())?;
    let ids = metric.ids();
    let mut violations = Vec::new();
    for a in 0..n {
        for c in (a + 1)..n {
            let direct = table.get(a, c);
            for b in 0..n {
                if b == a || b == c {
                    continue;
                }
                let via = table.get(a, b) + table.get(b, c);
                if direct > via + 1e-9 * direct.max(via) {
                    violations.push((ids[a], ids[b], ids[c]));
                }
            }
        }
    }
    Ok(violations)
}
