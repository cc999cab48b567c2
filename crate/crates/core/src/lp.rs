//! Small dense two-phase simplex over exact rationals.
//!
//! Minimizes `c·x` subject to linear rows and `x ≥ 0`. Pricing is Dantzig's
//! rule, switching to Bland's rule after a run of degenerate pivots so the
//! method cannot cycle. Intended for the few hundred variables of an
//! aggregate assignment program, not for large models.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

type Q = BigRational;

const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_STREAK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, Q)>,
    pub relation: Relation,
    pub rhs: Q,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Minimized.
    pub objective: Vec<Q>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![Q::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Q)>, relation: Relation, rhs: Q) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }
}

/// Exact conversion of a finite float.
pub fn rational_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::InvalidInput(format!("{x} is not a finite number")))
}

pub fn rational_from_int(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    rows: Vec<Vec<Q>>,
    /// Reduced costs, last entry is minus the objective value.
    obj: Vec<Q>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.cols).filter(|&j| !pivot_row[j].is_zero()).collect();
        let eliminate = |row: &mut Vec<Q>| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &nz {
                let d = &f * &pivot_row[j];
                row[j] -= d;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    fn set_objective(&mut self, cost: &[Q]) {
        let mut obj: Vec<Q> = cost.to_vec();
        obj.push(Q::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = obj[b].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.cols {
                if !self.rows[i][j].is_zero() {
                    let d = &cb * &self.rows[i][j];
                    obj[j] -= d;
                }
            }
        }
        self.obj = obj;
    }

    /// Runs simplex iterations over columns with `allowed[j]`. Returns
    /// `false` when the objective is unbounded below.
    fn optimize(&mut self, allowed: &[bool]) -> Result<bool> {
        let mut streak = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter: Option<usize> = None;
            for j in 0..self.cols {
                if !allowed[j] || !self.obj[j].is_negative() {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if enter.is_none_or(|e| self.obj[j] < self.obj[e]) {
                    enter = Some(j);
                }
            }
            let Some(c) = enter else { return Ok(true) };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[self.cols] / &row[c];
                let better = match &leave {
                    None => true,
                    Some((l, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return Ok(false) };
            streak = if ratio.is_zero() { streak + 1 } else { 0 };
            self.pivot(r, c);
        }
        Err(Error::Invariant("simplex exceeded its pivot budget".into()))
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.num_vars;
    if lp.objective.len() != n {
        return Err(Error::LengthMismatch {
            left: lp.objective.len(),
            right: n,
        });
    }
    let m = lp.constraints.len();
    // columns: structural | one slack per inequality | one artificial per row
    let slacks = lp
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let cols = n + slacks + m;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack = n;
    for (i, con) in lp.constraints.iter().enumerate() {
        let mut row = vec![Q::zero(); cols + 1];
        for (v, a) in &con.coeffs {
            if *v >= n {
                return Err(Error::InvalidInput(format!("variable {v} out of range")));
            }
            row[*v] += a;
        }
        match con.relation {
            Relation::Le => {
                row[slack] = Q::one();
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -Q::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        row[cols] = con.rhs.clone();
        if row[cols].is_negative() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[n + slacks + i] = Q::one();
        basis.push(n + slacks + i);
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        obj: Vec::new(),
        basis,
        cols,
    };

    // phase one: drive the artificials to zero
    let mut phase1 = vec![Q::zero(); cols];
    for c in phase1.iter_mut().skip(n + slacks) {
        *c = Q::one();
    }
    tab.set_objective(&phase1);
    let all = vec![true; cols];
    tab.optimize(&all)?;
    if !tab.obj[cols].is_zero() {
        return Ok(LpOutcome::Infeasible);
    }
    // pivot remaining zero-level artificials out, dropping redundant rows
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n + slacks {
            match (0..n + slacks).find(|&j| !tab.rows[i][j].is_zero()) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase2 = vec![Q::zero(); cols];
    phase2[..n].clone_from_slice(&lp.objective);
    tab.set_objective(&phase2);
    let mut allowed = vec![true; cols];
    for a in allowed.iter_mut().skip(n + slacks) {
        *a = false;
    }
    if !tab.optimize(&allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![Q::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[i][cols].clone();
        }
    }
    let value = -tab.obj[cols].clone();
    Ok(LpOutcome::Optimal { x, value })
}
