//! CSV ingestion.
//!
//! Points come as `id,group,x1,...,xd` (Euclidean) or as `id,group` together
//! with a headerless n×n distance matrix. Group labels are mapped to indices
//! by first appearance; a `|` in the group column lists several memberships.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::sync::Arc;

use fairmed_core::model::{virtualize_groups, ConstraintMap};
use fairmed_core::{Instance, MetricSpace, Point};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Ingested {
    pub instance: Instance,
    /// Point names from the `id` column, in row order. Row `i` is point and
    /// location `i`.
    pub names: Vec<String>,
    /// Original group labels in order of first appearance.
    pub labels: Vec<String>,
    /// Present when some row belongs to several groups.
    pub virtual_map: Option<ConstraintMap>,
}

impl Ingested {
    /// Label of each group the instance counts in.
    pub fn group_names(&self) -> Vec<String> {
        match &self.virtual_map {
            None => self.labels.clone(),
            Some(map) => (0..map.num_virtual())
                .map(|v| {
                    map.pattern(v)
                        .iter()
                        .map(|&g| self.labels[g].as_str())
                        .collect::<Vec<_>>()
                        .join("|")
                })
                .collect(),
        }
    }
}

fn input_err(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}:{line}: {msg}", path.display()))
}

fn open(path: &Path, has_headers: bool) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_number(path: &Path, line: u64, field: &str) -> Result<f64, CliError> {
    let x: f64 = field
        .parse()
        .map_err(|_| input_err(path, line, format!("not a number: {field:?}")))?;
    if !x.is_finite() {
        return Err(input_err(path, line, format!("not a finite number: {field:?}")));
    }
    Ok(x)
}

pub fn load_instance(points: &Path, matrix: Option<&Path>) -> Result<Ingested, CliError> {
    let mut reader = open(points, true)?;
    let header = reader
        .headers()
        .map_err(|e| input_err(points, 1, e))?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 2 || !cols[0].eq_ignore_ascii_case("id") || !cols[1].eq_ignore_ascii_case("group") {
        return Err(input_err(points, 1, "header must start with id,group"));
    }
    let dim = cols.len() - 2;
    match (dim, matrix) {
        (0, None) => return Err(input_err(points, 1, "no coordinate columns and no distance matrix given")),
        (d, Some(_)) if d > 0 => {
            return Err(input_err(points, 1, "coordinate columns cannot be combined with a distance matrix"))
        }
        _ => {}
    }

    let mut names = Vec::new();
    let mut seen = HashSet::new();
    let mut labels: Vec<String> = Vec::new();
    let mut memberships: Vec<BTreeSet<usize>> = Vec::new();
    let mut coords = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", points.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != cols.len() {
            return Err(input_err(
                points,
                line,
                format!("expected {} fields, found {}", cols.len(), record.len()),
            ));
        }
        let name = record[0].to_string();
        if name.is_empty() {
            return Err(input_err(points, line, "empty id"));
        }
        if !seen.insert(name.clone()) {
            return Err(input_err(points, line, format!("duplicate id {name:?}")));
        }
        let mut groups = BTreeSet::new();
        for label in record[1].split('|').map(str::trim) {
            if label.is_empty() {
                return Err(input_err(points, line, "empty group label"));
            }
            let idx = match labels.iter().position(|l| l == label) {
                Some(i) => i,
                None => {
                    labels.push(label.to_string());
                    labels.len() - 1
                }
            };
            groups.insert(idx);
        }
        memberships.push(groups);
        let row = (2..record.len())
            .map(|c| parse_number(points, line, &record[c]))
            .collect::<Result<Vec<_>, _>>()?;
        coords.push(row);
        names.push(name);
    }
    if names.is_empty() {
        return Err(input_err(points, 2, "no points"));
    }
    let n = names.len();
    let ids: Vec<usize> = (0..n).collect();

    let metric = match matrix {
        None => MetricSpace::from_euclidean(ids, &coords)?,
        Some(path) => {
            let rows = read_matrix(path)?;
            if rows.len() != n {
                return Err(CliError::Input(format!(
                    "{}: matrix has {} rows for {n} points",
                    path.display(),
                    rows.len()
                )));
            }
            MetricSpace::from_matrix(ids, &rows)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
    };

    let overlapping = memberships.iter().any(|g| g.len() > 1);
    let (groups, num_groups, virtual_map) = if overlapping {
        let raw: Vec<_> = memberships.into_iter().enumerate().collect();
        let (assigned, map) = virtualize_groups(&raw, labels.len());
        let groups = assigned.into_iter().map(|(_, g)| g).collect::<Vec<_>>();
        (groups, map.num_virtual(), Some(map))
    } else {
        let groups = memberships
            .iter()
            .map(|g| *g.iter().next().expect("at least one label"))
            .collect::<Vec<_>>();
        (groups, labels.len(), None)
    };
    let points_vec = groups
        .iter()
        .enumerate()
        .map(|(i, &group)| Point { id: i, group, location: i })
        .collect();
    let instance = Instance::new(points_vec, num_groups, Arc::new(metric))?;
    Ok(Ingested {
        instance,
        names,
        labels,
        virtual_map,
    })
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = open(path, false)?;
    let mut rows = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(input_err(path, line, format!("ragged row with {} fields", record.len())));
        }
        rows.push(
            record
                .iter()
                .map(|f| parse_number(path, line, f))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(rows)
}
