//! Browser bindings. Every export takes and returns JSON text; the plain
//! `*_json` functions do the work and are what the tests call.

use std::collections::BTreeMap;
use std::sync::Arc;

use fairmed_core::exact_fair::exact_pipeline;
use fairmed_core::frt::sample_hst;
use fairmed_core::pipeline::{general_pipeline, PipelineConfig};
use fairmed_core::{FairnessPolicy, Instance, MetricSpace};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
    pub group: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ClusterRequest {
    pub points: Vec<PlanePoint>,
    pub k: usize,
    /// `general` or `exact`.
    pub pipeline: String,
    /// `exact`, `none` or `balanced` (each group within `slack` of its
    /// global share).
    pub policy: String,
    #[serde(default)]
    pub slack: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterResponse {
    pub centers: Vec<usize>,
    /// Center of every point, in input order.
    pub assignment: Vec<usize>,
    pub profiles: Vec<Vec<i64>>,
    pub cost: f64,
    pub relocation: f64,
    pub seed_cost: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TreeRequest {
    pub points: Vec<PlanePoint>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeNodeOut {
    pub parent: Option<usize>,
    pub level: i32,
    pub edge: f64,
    pub location: Option<usize>,
    /// Points below this node.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeResponse {
    pub nodes: Vec<TreeNodeOut>,
    /// Mean tree distance over metric distance, per pair, over `samples`
    /// trees (absent when `samples` is 0).
    pub worst_stretch: Option<f64>,
    pub mean_stretch: Option<f64>,
}

fn plane(points: &[PlanePoint]) -> Result<Arc<MetricSpace>, String> {
    if points.is_empty() {
        return Err("no points".into());
    }
    let coords: Vec<Vec<f64>> = points.iter().map(|p| vec![p.x, p.y]).collect();
    MetricSpace::from_euclidean((0..points.len()).collect(), &coords)
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

fn balanced(instance: &Instance, slack: f64) -> Result<FairnessPolicy, String> {
    let slack = Rational64::approximate_float(slack.clamp(0.0, 1.0)).ok_or("bad slack")?;
    let n = instance.len() as i64;
    let zero = Rational64::from_integer(0);
    let one = Rational64::from_integer(1);
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for &s in instance.group_sizes() {
        let share = Rational64::new(s as i64, n);
        alpha.push((share - slack).max(zero));
        beta.push((share + slack).min(one));
    }
    FairnessPolicy::alpha_beta(alpha, beta).map_err(|e| e.to_string())
}

pub fn cluster_json(request: &str) -> Result<String, String> {
    let req: ClusterRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let metric = plane(&req.points)?;
    let groups: Vec<usize> = req.points.iter().map(|p| p.group).collect();
    let num_groups = groups.iter().max().map_or(1, |g| g + 1);
    let instance = Instance::from_groups(&groups, num_groups, metric).map_err(|e| e.to_string())?;
    let config = PipelineConfig::with_seed(req.seed);
    let out = match (req.pipeline.as_str(), req.policy.as_str()) {
        ("exact", "exact") => exact_pipeline(&instance, req.k, &config),
        ("exact", other) => return Err(format!("the exact pipeline needs the exact policy, not {other:?}")),
        ("general", policy) => {
            let policy = match policy {
                "exact" => FairnessPolicy::exact(instance.group_sizes()),
                "none" => FairnessPolicy::unconstrained(num_groups),
                "balanced" => balanced(&instance, req.slack)?,
                other => return Err(format!("unknown policy {other:?}")),
            };
            general_pipeline(&instance, req.k, &policy, &config)
        }
        (other, _) => return Err(format!("unknown pipeline {other:?}")),
    }
    .map_err(|e| e.to_string())?;

    let centers = out.clustering.plan.centers().to_vec();
    let profiles: BTreeMap<usize, Vec<i64>> = out
        .clustering
        .plan
        .center_profiles()
        .into_iter()
        .map(|(c, p)| (c, p.counts().to_vec()))
        .collect();
    let response = ClusterResponse {
        assignment: out.clustering.point_assignment.values().copied().collect(),
        profiles: centers.iter().map(|c| profiles[c].clone()).collect(),
        centers,
        cost: out.original_cost(),
        relocation: out.relocation_cost(),
        seed_cost: out.seed_solution.cost,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

pub fn tree_json(request: &str) -> Result<String, String> {
    let req: TreeRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let metric = plane(&req.points)?;
    let tree = sample_hst(&metric, req.seed).map_err(|e| e.to_string())?;
    let below = tree.subtree_locations();
    let nodes = tree
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| TreeNodeOut {
            parent: n.parent,
            level: n.level,
            edge: n.edge_to_parent,
            location: n.location,
            members: below[i].iter().copied().collect(),
        })
        .collect();

    let (mut worst, mut mean) = (None, None);
    if req.samples > 0 && req.points.len() > 1 {
        let m = req.points.len();
        let mut sum = vec![0.0; m * m];
        for s in 0..req.samples {
            let t = sample_hst(&metric, req.seed.wrapping_add(1 + s as u64))
                .and_then(|t| t.path_metric())
                .map_err(|e| e.to_string())?;
            for a in 0..m {
                for b in (a + 1)..m {
                    let d = metric.distance(a, b).map_err(|e| e.to_string())?;
                    if d > 0.0 {
                        sum[a * m + b] += t.distance(a, b).map_err(|e| e.to_string())? / d;
                    }
                }
            }
        }
        let per_pair: Vec<f64> = (0..m)
            .flat_map(|a| ((a + 1)..m).map(move |b| (a, b)))
            .filter(|&(a, b)| metric.distance(a, b).is_ok_and(|d| d > 0.0))
            .map(|(a, b)| sum[a * m + b] / req.samples as f64)
            .collect();
        if !per_pair.is_empty() {
            worst = Some(per_pair.iter().copied().fold(0.0, f64::max));
            mean = Some(per_pair.iter().sum::<f64>() / per_pair.len() as f64);
        }
    }
    let response = TreeResponse {
        nodes,
        worst_stretch: worst,
        mean_stretch: mean,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

/// Fair clustering of 2D points. See [`ClusterRequest`].
#[wasm_bindgen]
pub fn cluster(request: &str) -> Result<String, JsValue> {
    cluster_json(request).map_err(|e| JsValue::from_str(&e))
}

/// One sampled dominating tree, optionally with stretch statistics.
#[wasm_bindgen]
pub fn sample_tree(request: &str) -> Result<String, JsValue> {
    tree_json(request).map_err(|e| JsValue::from_str(&e))
}
