//! Instances, profiles, fairness policies and assignment plans.

mod instance;
mod plan;
mod policy;
mod profile;

pub use instance::{Instance, Point};
pub use plan::{
    audit_fairness, audit_fairness_with, evaluate_cost, AssignmentPlan, CenterAudit, Clustering,
    FairnessAudit,
};
pub use policy::{
    enumerate_box, exact_gamma, parse_rational, virtualize_groups, ConstraintMap, FairnessPolicy,
};
pub use profile::{profile_add, Profile};
