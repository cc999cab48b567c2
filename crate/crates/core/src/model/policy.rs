//! Fairness policies: membership oracles over nonnegative profiles.
//!
//! All bound checks are done by integer cross-multiplication in `i128`, so
//! admission never depends on floating-point rounding.

use std::collections::{BTreeSet, HashSet};

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::GroupId;

/// Set of admissible cluster profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FairnessPolicy {
    /// `α_j ‖R‖₁ ≤ R_j ≤ β_j ‖R‖₁` for every group.
    AlphaBeta {
        alpha: Vec<Rational64>,
        beta: Vec<Rational64>,
    },
    /// `R_j = (|X_j| / |X|) ‖R‖₁` for every group.
    Exact { group_sizes: Vec<u64> },
    /// `Σ_{i∈D} R_i ≥ α ‖R‖₁`.
    Coverage {
        groups: Vec<GroupId>,
        alpha: Rational64,
        num_groups: usize,
    },
    /// Admits exactly the listed profiles.
    ExplicitSet {
        profiles: BTreeSet<Profile>,
        num_groups: usize,
    },
    /// Admits `R` iff `base` admits `R + offset`.
    ShiftedBy {
        base: Box<FairnessPolicy>,
        offset: Profile,
    },
    /// `base` is stated over original (possibly overlapping) groups and
    /// evaluated on profiles over the virtual groups of `map`.
    Virtual {
        base: Box<FairnessPolicy>,
        map: ConstraintMap,
    },
}

impl FairnessPolicy {
    pub fn alpha_beta(alpha: Vec<Rational64>, beta: Vec<Rational64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::LengthMismatch {
                left: alpha.len(),
                right: beta.len(),
            });
        }
        for (j, (a, b)) in alpha.iter().zip(&beta).enumerate() {
            if a.is_negative() || a > b || *b > Rational64::one() {
                return Err(Error::InvalidInput(format!(
                    "group {j}: need 0 <= alpha <= beta <= 1, got alpha={a}, beta={b}"
                )));
            }
        }
        Ok(Self::AlphaBeta { alpha, beta })
    }

    /// AlphaBeta with `α = 0`, `β = 1`: every profile is fair.
    pub fn unconstrained(groups: usize) -> Self {
        Self::AlphaBeta {
            alpha: vec![Rational64::zero(); groups],
            beta: vec![Rational64::one(); groups],
        }
    }

    pub fn exact(group_sizes: &[usize]) -> Self {
        Self::Exact {
            group_sizes: group_sizes.iter().map(|&s| s as u64).collect(),
        }
    }

    pub fn coverage(groups: Vec<GroupId>, alpha: Rational64, num_groups: usize) -> Result<Self> {
        if alpha.is_negative() || alpha > Rational64::one() {
            return Err(Error::InvalidInput(format!(
                "coverage alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if let Some(&g) = groups.iter().find(|&&g| g >= num_groups) {
            return Err(Error::InvalidInput(format!(
                "coverage group {g} out of range for {num_groups} groups"
            )));
        }
        Ok(Self::Coverage {
            groups,
            alpha,
            num_groups,
        })
    }

    pub fn explicit(profiles: impl IntoIterator<Item = Profile>, num_groups: usize) -> Result<Self> {
        let profiles: BTreeSet<Profile> = profiles.into_iter().collect();
        for p in &profiles {
            if p.len() != num_groups {
                return Err(Error::LengthMismatch {
                    left: p.len(),
                    right: num_groups,
                });
            }
            p.ensure_nonnegative()?;
        }
        Ok(Self::ExplicitSet {
            profiles,
            num_groups,
        })
    }

    pub fn shifted(base: FairnessPolicy, offset: Profile) -> Result<Self> {
        offset.ensure_nonnegative()?;
        Ok(Self::ShiftedBy {
            base: Box::new(base),
            offset,
        })
    }

    pub fn virtualized(base: FairnessPolicy, map: ConstraintMap) -> Self {
        Self::Virtual {
            base: Box::new(base),
            map,
        }
    }

    /// Number of profile coordinates this policy expects, if it constrains it.
    pub fn num_groups(&self) -> Option<usize> {
        match self {
            Self::AlphaBeta { alpha, .. } => Some(alpha.len()),
            Self::Exact { group_sizes } => Some(group_sizes.len()),
            Self::Coverage { num_groups, .. } | Self::ExplicitSet { num_groups, .. } => {
                Some(*num_groups)
            }
            Self::ShiftedBy { offset, .. } => Some(offset.len()),
            Self::Virtual { map, .. } => Some(map.num_virtual()),
        }
    }

    /// Membership test `R ∈ F`. `R` must be nonnegative.
    pub fn admits(&self, profile: &Profile) -> Result<bool> {
        profile.ensure_nonnegative()?;
        if let Some(groups) = self.num_groups() {
            if groups != profile.len() {
                return Err(Error::LengthMismatch {
                    left: profile.len(),
                    right: groups,
                });
            }
        }
        Ok(self.admits_counts(profile.counts(), profile.total()))
    }

    /// Membership on raw counts with an explicit cluster size; `total`
    /// differs from the coordinate sum only for virtualized groups.
    fn admits_counts(&self, counts: &[i64], total: i64) -> bool {
        match self {
            Self::AlphaBeta { alpha, beta } => {
                counts.iter().zip(alpha.iter().zip(beta)).all(|(&c, (a, b))| {
                    let c = c as i128;
                    let t = total as i128;
                    let lo = *a.numer() as i128 * t <= c * *a.denom() as i128;
                    let hi = c * *b.denom() as i128 <= *b.numer() as i128 * t;
                    lo && hi
                })
            }
            Self::Exact { group_sizes } => {
                let n: i128 = group_sizes.iter().map(|&s| s as i128).sum();
                counts
                    .iter()
                    .zip(group_sizes)
                    .all(|(&c, &s)| c as i128 * n == s as i128 * total as i128)
            }
            Self::Coverage { groups, alpha, .. } => {
                let covered: i128 = groups.iter().map(|&g| counts[g] as i128).sum();
                covered * *alpha.denom() as i128 >= *alpha.numer() as i128 * total as i128
            }
            Self::ExplicitSet { profiles, .. } => {
                profiles.contains(&Profile::from_counts(counts.to_vec()))
            }
            Self::ShiftedBy { base, offset } => {
                let shifted: Vec<i64> = counts
                    .iter()
                    .zip(offset.counts())
                    .map(|(c, o)| c + o)
                    .collect();
                base.admits_counts(&shifted, total + offset.total())
            }
            Self::Virtual { base, map } => base.admits_counts(&map.original_counts(counts), total),
        }
    }

    /// The exact-fairness violation `max_j |R_j − (f_j/f)‖R‖₁|` when this
    /// policy (possibly shifted) is an exact-fairness policy.
    pub fn exact_violation(&self, profile: &Profile) -> Option<Rational64> {
        match self {
            Self::Exact { group_sizes } => Some(exact_gamma(group_sizes, profile)),
            Self::ShiftedBy { base, offset } => base.exact_violation(&profile.add(offset)),
            _ => None,
        }
    }

    /// The policy with every offset removed.
    pub fn unshifted(&self) -> &FairnessPolicy {
        match self {
            Self::ShiftedBy { base, .. } => base.unshifted(),
            other => other,
        }
    }

    /// Replaces this policy by the explicit set of nonempty profiles it
    /// admits inside the box `0 ≤ R ≤ bounds`.
    pub fn forbid_empty(&self, bounds: &[i64], max_profiles: usize) -> Result<Self> {
        let mut admitted = Vec::new();
        let boxed = enumerate_box(bounds, max_profiles)?;
        for p in boxed {
            if !p.is_zero() && self.admits(&p)? {
                admitted.push(p);
            }
        }
        Self::explicit(admitted, bounds.len())
    }
}

/// `max_j |R_j − (n_j/N)‖R‖₁|` for group sizes `n_j` summing to `N`.
pub fn exact_gamma(group_sizes: &[u64], profile: &Profile) -> Rational64 {
    let n: i64 = group_sizes.iter().map(|&s| s as i64).sum();
    if n == 0 {
        return Rational64::zero();
    }
    let total = profile.total();
    let worst = profile
        .counts()
        .iter()
        .zip(group_sizes)
        .map(|(&c, &s)| (c * n - s as i64 * total).abs())
        .max()
        .unwrap_or(0);
    Rational64::new(worst, n)
}

/// All integer vectors `0 ≤ p ≤ bounds`, in lexicographic order.
pub fn enumerate_box(bounds: &[i64], max_profiles: usize) -> Result<Vec<Profile>> {
    let mut size: usize = 1;
    for &b in bounds {
        size = size
            .checked_mul((b.max(0) + 1) as usize)
            .filter(|&s| s <= max_profiles)
            .ok_or_else(|| {
                Error::TooLarge(format!(
                    "profile box {bounds:?} exceeds {max_profiles} profiles"
                ))
            })?;
    }
    let mut out = Vec::with_capacity(size);
    let mut cur = vec![0i64; bounds.len()];
    loop {
        out.push(Profile::from_counts(cur.clone()));
        let mut j = bounds.len();
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            if cur[j] < bounds[j] {
                cur[j] += 1;
                for c in cur.iter_mut().skip(j + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
}

/// Parses a rational from `p/q`, an integer, or a decimal string such as
/// `0.375`, without going through binary floating point.
pub fn parse_rational(text: &str) -> Result<Rational64> {
    let bad = || Error::InvalidInput(format!("not a rational number: {text:?}"));
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(num, den));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac_part.len() > 18 {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: i64 = digits.parse().map_err(|_| bad())?;
    let den = 10i64.pow(frac_part.len() as u32);
    let r = Rational64::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Maps virtual-group counts back to original-group counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintMap {
    /// Membership pattern of each virtual group.
    patterns: Vec<BTreeSet<GroupId>>,
    original_groups: usize,
}

impl ConstraintMap {
    pub fn num_virtual(&self) -> usize {
        self.patterns.len()
    }

    pub fn num_original(&self) -> usize {
        self.original_groups
    }

    pub fn pattern(&self, virtual_group: GroupId) -> &BTreeSet<GroupId> {
        &self.patterns[virtual_group]
    }

    /// Original group `j` count is the sum over virtual groups whose pattern contains `j`.
    pub fn original_counts(&self, virtual_counts: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.original_groups];
        for (pattern, &c) in self.patterns.iter().zip(virtual_counts) {
            for &j in pattern {
                out[j] += c;
            }
        }
        out
    }

    /// True when every pattern is the singleton of its own index.
    pub fn is_identity(&self) -> bool {
        self.patterns.len() == self.original_groups
            && self
                .patterns
                .iter()
                .enumerate()
                .all(|(i, p)| p.len() == 1 && p.contains(&i))
    }
}

/// Replaces overlapping group memberships by disjoint virtual groups, one per
/// distinct membership pattern present. Returns `(point, virtual group)`
/// labels in input order and the map back to original groups.
///
/// Virtual groups are ordered by pattern size, then lexicographically; the
/// empty pattern (points in no group) comes last.
pub fn virtualize_groups(
    raw_points: &[(crate::PointId, BTreeSet<GroupId>)],
    original_groups: usize,
) -> (Vec<(crate::PointId, GroupId)>, ConstraintMap) {
    let distinct: HashSet<&BTreeSet<GroupId>> = raw_points.iter().map(|(_, g)| g).collect();
    let mut patterns: Vec<BTreeSet<GroupId>> = distinct.into_iter().cloned().collect();
    patterns.sort_by(|a, b| {
        (a.is_empty(), a.len(), a.iter().collect::<Vec<_>>())
            .cmp(&(b.is_empty(), b.len(), b.iter().collect::<Vec<_>>()))
    });
    let labels = raw_points
        .iter()
        .map(|(id, g)| (*id, patterns.iter().position(|p| p == g).unwrap()))
        .collect();
    let original_groups = patterns
        .iter()
        .flat_map(|p| p.iter().map(|&g| g + 1))
        .max()
        .unwrap_or(0)
        .max(original_groups);
    (
        labels,
        ConstraintMap {
            patterns,
            original_groups,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn p(v: &[i64]) -> Profile {
        Profile::from(v.to_vec())
    }

    fn ab() -> FairnessPolicy {
        FairnessPolicy::alpha_beta(vec![r(2, 5), r(2, 5)], vec![r(3, 5), r(3, 5)]).unwrap()
    }

    #[test]
    fn alpha_beta_examples() {
        assert!(ab().admits(&p(&[1, 1])).unwrap());
        assert!(!ab().admits(&p(&[2, 0])).unwrap());
        assert!(ab().admits(&p(&[0, 0])).unwrap());
    }

    #[test]
    fn exact_examples() {
        let exact = FairnessPolicy::exact(&[2, 2]);
        assert!(!exact.admits(&p(&[2, 1])).unwrap());
        assert!(exact.admits(&p(&[3, 3])).unwrap());
        assert!(exact.admits(&p(&[0, 0])).unwrap());
    }

    #[test]
    fn coverage_and_empty() {
        let cov = FairnessPolicy::coverage(vec![0, 2], r(3, 10), 3).unwrap();
        assert!(cov.admits(&p(&[0, 0, 0])).unwrap());
        assert!(cov.admits(&p(&[1, 7, 2])).unwrap());
        assert!(!cov.admits(&p(&[1, 8, 1])).unwrap());
    }

    #[test]
    fn negative_profile_rejected() {
        assert!(matches!(
            ab().admits(&p(&[1, -1])),
            Err(Error::NegativeProfile { .. })
        ));
    }

    #[test]
    fn shifted_admits_sum() {
        let shifted = FairnessPolicy::shifted(FairnessPolicy::exact(&[1, 1]), p(&[2, 1])).unwrap();
        assert!(shifted.admits(&p(&[0, 1])).unwrap());
        assert!(!shifted.admits(&p(&[0, 0])).unwrap());
        assert!(FairnessPolicy::shifted(ab(), p(&[-1, 0])).is_err());
    }

    #[test]
    fn alpha_beta_validation() {
        assert!(FairnessPolicy::alpha_beta(vec![r(1, 2)], vec![r(1, 3)]).is_err());
        assert!(FairnessPolicy::alpha_beta(vec![r(0, 1)], vec![r(3, 2)]).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("0.4").unwrap(), r(2, 5));
        assert_eq!(parse_rational("2/5").unwrap(), r(2, 5));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert_eq!(parse_rational(".125").unwrap(), r(1, 8));
        assert_eq!(parse_rational("0.1").unwrap(), r(1, 10));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1e-3").is_err());
    }

    #[test]
    fn gamma_example() {
        let exact = FairnessPolicy::exact(&[1, 1]);
        assert_eq!(exact.exact_violation(&p(&[4, 2])), Some(r(1, 1)));
        assert_eq!(exact.exact_violation(&p(&[3, 3])), Some(r(0, 1)));
    }

    #[test]
    fn virtual_groups_overlap() {
        let a: BTreeSet<_> = [0].into();
        let b: BTreeSet<_> = [1].into();
        let ab_: BTreeSet<_> = [0, 1].into();
        let raw = vec![(0, a.clone()), (1, b.clone()), (2, ab_.clone()), (3, a)];
        let (labels, map) = virtualize_groups(&raw, 2);
        assert_eq!(map.num_virtual(), 3);
        assert_eq!(labels, vec![(0, 0), (1, 1), (2, 2), (3, 0)]);
        // group 0 reads virtual {0} and {0,1}
        assert_eq!(map.original_counts(&[5, 7, 11]), vec![16, 18]);
    }

    #[test]
    fn virtual_groups_identity_and_empty() {
        let raw: Vec<_> = (0..4).map(|i| (i, BTreeSet::from([i % 2]))).collect();
        let (labels, map) = virtualize_groups(&raw, 2);
        assert!(map.is_identity());
        assert!(labels.iter().all(|&(i, g)| g == i % 2));

        let raw = vec![(0, BTreeSet::from([0])), (1, BTreeSet::new())];
        let (labels, map) = virtualize_groups(&raw, 1);
        assert_eq!(map.num_virtual(), 2);
        assert_eq!(labels, vec![(0, 0), (1, 1)]);
        assert_eq!(map.original_counts(&[3, 9]), vec![3]);
    }

    #[test]
    fn virtual_policy_uses_true_cluster_size() {
        // one point in both groups: original counts (1,1) but cluster size 1
        let raw = vec![(0, BTreeSet::from([0, 1]))];
        let (_, map) = virtualize_groups(&raw, 2);
        let base = FairnessPolicy::alpha_beta(vec![r(0, 1); 2], vec![r(1, 1); 2]).unwrap();
        let policy = FairnessPolicy::virtualized(base, map);
        assert!(policy.admits(&p(&[1])).unwrap());
    }

    #[test]
    fn box_enumeration() {
        let all = enumerate_box(&[1, 2], 100).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], p(&[0, 0]));
        assert_eq!(all[5], p(&[1, 2]));
        assert!(enumerate_box(&[10, 10], 50).is_err());
    }

    #[test]
    fn forbid_empty_filters_zero() {
        let strict = ab().forbid_empty(&[2, 2], 1000).unwrap();
        assert!(!strict.admits(&p(&[0, 0])).unwrap());
        assert!(strict.admits(&p(&[1, 1])).unwrap());
        assert!(strict.admits(&p(&[2, 2])).unwrap());
        assert!(!strict.admits(&p(&[2, 1])).unwrap());
    }
}
