//! End-to-end drivers shared by the general and exact pipelines.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::consolidation::{consolidate, lift_clustering, ReducedInstance};
use crate::error::{Error, Result};
use crate::frt::{best_of_trees, default_trials, sample_hst};
use crate::kmedian::{solve_kmedian, SeedSolution};
use crate::model::{audit_fairness, Clustering, FairnessAudit, FairnessPolicy, Instance};
use crate::tree_dp::{binarize, fill_tables, NodePolicies, MAX_PROFILE_BOX};
use crate::LocationId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipelineConfig {
    /// Number of sampled trees; `None` picks [`default_trials`].
    pub trials: Option<usize>,
    pub seed: u64,
    /// Reject empty clusters at every opened center.
    pub forbid_empty: bool,
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn trials_for(&self, instance: &Instance) -> usize {
        self.trials.unwrap_or_else(|| default_trials(instance.len()))
    }

    /// Seeds for the k-median stage and the tree stage.
    pub(crate) fn stage_seeds(&self) -> (u64, u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (rng.next_u64(), rng.next_u64())
    }
}

/// Statistics of the exact pipeline's reduction to a movable set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStats {
    pub fairlet_size: u64,
    pub near_fair_cost: f64,
    /// Largest exact-fairness violation of the near-fair assignment.
    pub near_fair_gamma: num_rational::Rational64,
    pub problematic_sizes: Vec<usize>,
    pub movable_points: usize,
    pub movable_bound: u64,
}

/// What the winning tree DP was run on.
#[derive(Debug, Clone)]
pub struct DpInput {
    pub instance: Instance,
    pub policies: BTreeMap<LocationId, FairnessPolicy>,
    pub tree_seed: u64,
}

impl DpInput {
    /// Rebuilds the winning tree and writes its DP table, one entry per line.
    pub fn dump(&self, out: impl Write) -> Result<()> {
        let hst = sample_hst(self.instance.metric(), self.tree_seed)?;
        let tree = binarize(&hst, &self.instance.location_profiles(), self.instance.num_groups())?;
        let table = fill_tables(&tree, NodePolicies::PerSite(&self.policies))?;
        table
            .dump(out)
            .map_err(|e| Error::InvalidInput(format!("cannot write table dump: {e}")))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub seed_solution: SeedSolution,
    pub reduced: ReducedInstance,
    /// Clustering of the consolidated instance.
    pub reduced_clustering: Clustering,
    /// The same assignment costed at the original locations.
    pub clustering: Clustering,
    pub audit: FairnessAudit,
    /// DP optimum on the winning tree (movable points only for the exact
    /// pipeline).
    pub tree_cost: f64,
    pub trials: usize,
    pub best_trial: usize,
    pub dp: DpInput,
    pub exact: Option<ExactStats>,
}

impl PipelineOutput {
    pub fn reduced_cost(&self) -> f64 {
        self.reduced_clustering.cost
    }

    pub fn original_cost(&self) -> f64 {
        self.clustering.cost
    }

    pub fn relocation_cost(&self) -> f64 {
        self.reduced.relocation_cost
    }
}

/// Applies `forbid_empty` to a policy over an instance's group totals.
pub fn effective_policy(
    instance: &Instance,
    policy: &FairnessPolicy,
    forbid_empty: bool,
) -> Result<FairnessPolicy> {
    if !forbid_empty {
        return Ok(policy.clone());
    }
    policy.forbid_empty(instance.group_totals().counts(), MAX_PROFILE_BOX)
}

/// Consolidate onto `k` seed centers, solve the fair assignment on the best
/// of several sampled trees, and lift back to the original locations.
pub fn general_pipeline(
    instance: &Instance,
    k: usize,
    policy: &FairnessPolicy,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    if policy.num_groups().is_some_and(|g| g != instance.num_groups()) {
        return Err(Error::LengthMismatch {
            left: policy.num_groups().unwrap_or(0),
            right: instance.num_groups(),
        });
    }
    let policy = effective_policy(instance, policy, config.forbid_empty)?;
    let (kmedian_seed, tree_seed) = config.stage_seeds();
    let seed_solution = solve_kmedian(instance, k, kmedian_seed)?;
    let reduced = consolidate(instance, &seed_solution)?;
    let trials = config.trials_for(instance);
    let tree = best_of_trees(&reduced.base, NodePolicies::Uniform(&policy), trials, tree_seed)?;
    let reduced_clustering = Clustering::from_plan(&reduced.base, tree.plan)?;
    let dp = DpInput {
        instance: reduced.base.clone(),
        policies: reduced.base.sites().iter().map(|&c| (c, policy.clone())).collect(),
        tree_seed: tree.trial_seed,
    };
    let clustering = lift_clustering(&reduced_clustering, &reduced, instance)?;
    let audit = audit_fairness(&policy, &clustering.plan)?;
    if !audit.all_admitted() {
        return Err(Error::Invariant("pipeline produced an unfair cluster".into()));
    }
    log::info!(
        "general pipeline: reduced cost {}, original cost {}, relocation {}",
        reduced_clustering.cost,
        clustering.cost,
        reduced.relocation_cost
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
        exact: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpace;
    use std::sync::Arc;

    fn line(xs: &[f64], groups: &[usize]) -> Instance {
        let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let m = MetricSpace::from_euclidean((0..xs.len()).collect(), &coords).unwrap();
        Instance::from_groups(groups, 2, Arc::new(m)).unwrap()
    }

    #[test]
    fn four_point_line_exact() {
        let inst = line(&[0.0, 1.0, 10.0, 11.0], &[0, 1, 0, 1]);
        let out = general_pipeline(&inst, 2, &FairnessPolicy::exact(&[2, 2]), &PipelineConfig::with_seed(1)).unwrap();
        assert_eq!(out.original_cost(), 2.0);
        assert!(out.audit.all_admitted());
        assert!((out.original_cost() - out.reduced_cost()).abs() <= out.relocation_cost());
    }

    #[test]
    fn trivial_policy_matches_seeding() {
        let inst = line(&[0.0, 1.0, 5.0, 10.0, 11.0, 30.0], &[0, 1, 0, 1, 0, 1]);
        let out = general_pipeline(&inst, 3, &FairnessPolicy::unconstrained(2), &PipelineConfig::with_seed(4)).unwrap();
        assert_eq!(out.reduced_cost(), 0.0);
        assert!((out.original_cost() - out.seed_solution.cost).abs() <= out.relocation_cost());
    }

    #[test]
    fn forbid_empty_opens_every_center() {
        let inst = line(&[0.0, 1.0, 10.0, 11.0], &[0, 1, 0, 1]);
        let cfg = PipelineConfig {
            forbid_empty: true,
            ..PipelineConfig::with_seed(2)
        };
        let out = general_pipeline(&inst, 2, &FairnessPolicy::exact(&[2, 2]), &cfg).unwrap();
        assert_eq!(out.clustering.nonempty_clusters(), 2);
    }

    #[test]
    fn unsatisfiable_policy() {
        let inst = line(&[0.0, 1.0], &[0, 1]);
        let none = FairnessPolicy::explicit(vec![crate::Profile::from(vec![2, 0])], 2).unwrap();
        assert!(matches!(
            general_pipeline(&inst, 1, &none, &PipelineConfig::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn dump_reproduces_winning_table() {
        let inst = line(&[0.0, 1.0, 10.0, 11.0], &[0, 1, 0, 1]);
        let out = general_pipeline(&inst, 2, &FairnessPolicy::exact(&[2, 2]), &PipelineConfig::with_seed(3)).unwrap();
        let mut buf = Vec::new();
        out.dp.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let root_zero = text
            .lines()
            .filter(|l| l.split(' ').nth(1) == Some("0,0"))
            .any(|l| l.ends_with(&format!(" {}", out.tree_cost)));
        assert!(root_zero, "{text}");
    }

    #[test]
    fn deterministic() {
        let inst = line(&[0.0, 2.0, 3.0, 7.0, 8.0, 20.0], &[0, 1, 1, 0, 1, 0]);
        let p = FairnessPolicy::exact(&[3, 3]);
        let a = general_pipeline(&inst, 2, &p, &PipelineConfig::with_seed(9)).unwrap();
        let b = general_pipeline(&inst, 2, &p, &PipelineConfig::with_seed(9)).unwrap();
        assert_eq!(a.clustering, b.clustering);
        assert_eq!(a.tree_cost, b.tree_cost);
    }
}
