//! Fair-representation k-median clustering with zero fairness violation.
//!
//! Two pipelines are provided:
//!
//! - [`pipeline::general_pipeline`]: consolidate points onto `k` seed
//!   centers, embed the reduced metric into sampled dominating trees, and
//!   solve the fair assignment exactly on each tree with a dynamic program
//!   over per-group net-import profiles. Any membership oracle over cluster
//!   profiles can serve as the fairness policy.
//! - [`exact_fair::exact_pipeline`]: for exact fairness, first compute a
//!   near-fair assignment, then re-solve only a small set of movable points
//!   (problematic points plus a bounded number of fairlets per cluster).

pub mod consolidation;
pub mod error;
pub mod exact_fair;
pub mod frt;
pub mod kmedian;
pub mod lp;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod tree_dp;

pub type PointId = usize;
pub type LocationId = usize;
pub type GroupId = usize;

pub use error::{Error, Result};
pub use metric::MetricSpace;
pub use model::{AssignmentPlan, Clustering, FairnessPolicy, Instance, Point, Profile};
