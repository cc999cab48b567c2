//! Result document.
//!
//! Keys appear in declaration order and every collection is sorted, so two
//! runs with the same seed serialize to the same bytes.

use fairmed_core::pipeline::PipelineOutput;
use serde::Serialize;

use crate::ingest::Ingested;

#[derive(Debug, Clone, Serialize)]
pub struct Costs {
    /// DP optimum on the winning tree.
    pub tree: f64,
    pub reduced: f64,
    pub original: f64,
    pub relocation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CenterReport {
    pub id: String,
    pub profile: Vec<i64>,
    pub admitted: bool,
    /// Exact-fairness violation as a rational string, when defined.
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignmentRow {
    pub point: String,
    pub center: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub fairlet_size: u64,
    pub near_fair_cost: f64,
    pub near_fair_gamma: String,
    pub problematic_sizes: Vec<usize>,
    pub movable_points: usize,
    pub movable_bound: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub pipeline: String,
    pub k: usize,
    pub policy: String,
    pub seed: u64,
    pub trials: usize,
    pub best_trial: usize,
    pub costs: Costs,
    pub seed_centers: Vec<String>,
    pub centers: Vec<CenterReport>,
    pub nonempty_clusters: usize,
    pub groups: Vec<String>,
    /// `(location, center, group, count)` for every nonzero flow.
    pub flows: Vec<(String, String, String, i64)>,
    pub assignment: Vec<AssignmentRow>,
    pub exact: Option<ExactReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl Report {
    pub fn build(
        pipeline: &str,
        k: usize,
        policy: &str,
        seed: u64,
        data: &Ingested,
        out: &PipelineOutput,
    ) -> Report {
        let name = |loc: usize| data.names[loc].clone();
        let groups = data.group_names();
        let mut flows = Vec::new();
        for (&(loc, center), profile) in out.clustering.plan.flows() {
            for (j, &count) in profile.counts().iter().enumerate() {
                if count != 0 {
                    flows.push((name(loc), name(center), groups[j].clone(), count));
                }
            }
        }
        Report {
            pipeline: pipeline.to_string(),
            k,
            policy: policy.to_string(),
            seed,
            trials: out.trials,
            best_trial: out.best_trial,
            costs: Costs {
                tree: out.tree_cost,
                reduced: out.reduced_cost(),
                original: out.original_cost(),
                relocation: out.relocation_cost(),
            },
            seed_centers: out.seed_solution.centers.iter().map(|&c| name(c)).collect(),
            centers: out
                .audit
                .centers
                .iter()
                .map(|c| CenterReport {
                    id: name(c.center),
                    profile: c.profile.counts().to_vec(),
                    admitted: c.admitted,
                    gamma: c.gamma.map(|g| g.to_string()),
                })
                .collect(),
            nonempty_clusters: out.clustering.nonempty_clusters(),
            groups,
            flows,
            assignment: out
                .clustering
                .point_assignment
                .iter()
                .map(|(&p, &c)| AssignmentRow {
                    point: name(p),
                    center: name(c),
                })
                .collect(),
            exact: out.exact.as_ref().map(|e| ExactReport {
                fairlet_size: e.fairlet_size,
                near_fair_cost: e.near_fair_cost,
                near_fair_gamma: e.near_fair_gamma.to_string(),
                problematic_sizes: e.problematic_sizes.clone(),
                movable_points: e.movable_points,
                movable_bound: e.movable_bound,
            }),
            timing_ms: None,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
