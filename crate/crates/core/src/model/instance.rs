use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::{GroupId, LocationId, PointId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub id: PointId,
    pub group: GroupId,
    pub location: LocationId,
}

/// Labelled points placed at locations of a metric space.
///
/// The metric's location set doubles as the set of candidate sites: every
/// metric location may host a center, even when no point sits there.
#[derive(Debug, Clone)]
pub struct Instance {
    points: Vec<Point>,
    num_groups: usize,
    group_sizes: Vec<usize>,
    metric: Arc<MetricSpace>,
}

impl Instance {
    pub fn new(mut points: Vec<Point>, num_groups: usize, metric: Arc<MetricSpace>) -> Result<Self> {
        points.sort_unstable_by_key(|p| p.id);
        let mut group_sizes = vec![0; num_groups];
        for (i, p) in points.iter().enumerate() {
            if i > 0 && points[i - 1].id == p.id {
                return Err(Error::InvalidInput(format!("duplicate point id {}", p.id)));
            }
            if p.group >= num_groups {
                return Err(Error::InvalidInput(format!(
                    "point {} has group {} but only {num_groups} groups exist",
                    p.id, p.group
                )));
            }
            if !metric.contains(p.location) {
                return Err(Error::UnknownLocation(p.location));
            }
            group_sizes[p.group] += 1;
        }
        Ok(Self {
            points,
            num_groups,
            group_sizes,
            metric,
        })
    }

    /// One point per location `i` with group `groups[i]`; point id = location id = index.
    pub fn from_groups(groups: &[GroupId], num_groups: usize, metric: Arc<MetricSpace>) -> Result<Self> {
        let points = groups
            .iter()
            .enumerate()
            .map(|(i, &g)| Point {
                id: metric.ids().get(i).copied().unwrap_or(i),
                group: g,
                location: metric.ids().get(i).copied().unwrap_or(i),
            })
            .collect();
        Self::new(points, num_groups, metric)
    }

    /// Points sorted by id.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, id: PointId) -> Option<&Point> {
        self.points
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.points[i])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// `|X_1|, …, |X_ℓ|`.
    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn group_totals(&self) -> Profile {
        Profile::from_counts(self.group_sizes.iter().map(|&s| s as i64).collect())
    }

    pub fn metric(&self) -> &Arc<MetricSpace> {
        &self.metric
    }

    /// All candidate sites (the metric's locations), in metric order.
    pub fn sites(&self) -> &[LocationId] {
        self.metric.ids()
    }

    /// Distinct locations that host at least one point.
    pub fn occupied_locations(&self) -> Vec<LocationId> {
        let set: BTreeSet<LocationId> = self.points.iter().map(|p| p.location).collect();
        set.into_iter().collect()
    }

    /// `v(q)` for every site (zero profile for empty sites).
    pub fn location_profiles(&self) -> BTreeMap<LocationId, Profile> {
        let mut out: BTreeMap<LocationId, Profile> = self
            .sites()
            .iter()
            .map(|&q| (q, Profile::zeros(self.num_groups)))
            .collect();
        for p in &self.points {
            out.get_mut(&p.location)
                .expect("point locations are validated against the metric")
                .bump(p.group, 1);
        }
        out
    }

    /// Same points and labels, moved to new locations in a new metric.
    pub fn relocated(
        &self,
        new_location: impl Fn(&Point) -> LocationId,
        metric: Arc<MetricSpace>,
    ) -> Result<Instance> {
        let points = self
            .points
            .iter()
            .map(|p| Point {
                location: new_location(p),
                ..*p
            })
            .collect();
        Instance::new(points, self.num_groups, metric)
    }

    /// Sub-instance on a subset of points, keeping metric and group count.
    pub fn subset(&self, keep: impl Fn(&Point) -> bool) -> Instance {
        let points: Vec<Point> = self.points.iter().copied().filter(|p| keep(p)).collect();
        let mut group_sizes = vec![0; self.num_groups];
        for p in &points {
            group_sizes[p.group] += 1;
        }
        Instance {
            points,
            num_groups: self.num_groups,
            group_sizes,
            metric: Arc::clone(&self.metric),
        }
    }
}
