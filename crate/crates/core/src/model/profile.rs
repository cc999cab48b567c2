use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-group point counts.
///
/// Location and center profiles are nonnegative; net-import profiles used by
/// the tree DP may carry negative coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Profile(Vec<i64>);

impl Profile {
    pub fn zeros(groups: usize) -> Self {
        Self(vec![0; groups])
    }

    pub fn from_counts(counts: Vec<i64>) -> Self {
        Self(counts)
    }

    /// Unit profile: one point of `group`.
    pub fn unit(groups: usize, group: usize) -> Self {
        let mut p = Self::zeros(groups);
        p.0[group] = 1;
        p
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    /// `‖p‖₁`.
    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    /// Plain coordinate sum; equals `l1` on nonnegative profiles.
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn ensure_nonnegative(&self) -> Result<()> {
        match self.0.iter().position(|&c| c < 0) {
            Some(group) => Err(Error::NegativeProfile {
                group,
                value: self.0[group],
            }),
            None => Ok(()),
        }
    }

    fn check_len(&self, other: &Profile) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Profile) -> Result<Profile> {
        self.check_len(other)?;
        Ok(Profile(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn checked_sub(&self, other: &Profile) -> Result<Profile> {
        self.check_len(other)?;
        Ok(Profile(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    // Unchecked variants for hot loops where lengths are known to agree.
    pub(crate) fn add(&self, other: &Profile) -> Profile {
        debug_assert_eq!(self.len(), other.len());
        Profile(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub(crate) fn sub(&self, other: &Profile) -> Profile {
        debug_assert_eq!(self.len(), other.len());
        Profile(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub(crate) fn add_assign(&mut self, other: &Profile) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub(crate) fn bump(&mut self, group: usize, by: i64) {
        self.0[group] += by;
    }
}

/// Coordinate-wise sum of two profiles of equal length.
pub fn profile_add(a: &Profile, b: &Profile) -> Result<Profile> {
    a.checked_add(b)
}

impl Index<usize> for Profile {
    type Output = i64;

    fn index(&self, group: usize) -> &i64 {
        &self.0[group]
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl From<Vec<i64>> for Profile {
    fn from(counts: Vec<i64>) -> Self {
        Self(counts)
    }
}
