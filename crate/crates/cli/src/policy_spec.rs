//! Command-line policy grammar.
//!
//! ```text
//! none
//! exact
//! alphabeta:0.4,0.4;0.6,0.6      alpha list; beta list
//! coverage:D=1,3;alpha=0.3       D lists 1-based groups
//! explicit:2,0;1,1               admitted profiles
//! ```
//!
//! Rationals may be written as `p/q` or as decimals.

use fairmed_core::model::parse_rational;
use fairmed_core::{FairnessPolicy, Profile};
use num_rational::Rational64;

use crate::CliError;

fn bad(spec: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("policy {spec:?}: {why}"))
}

fn rationals(spec: &str, list: &str) -> Result<Vec<Rational64>, CliError> {
    list.split(',')
        .map(|t| parse_rational(t).map_err(|e| bad(spec, e)))
        .collect()
}

/// Parses `spec` for an instance whose original groups have the given sizes.
pub fn parse_policy(spec: &str, group_sizes: &[usize]) -> Result<FairnessPolicy, CliError> {
    let groups = group_sizes.len();
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let policy = match kind.trim() {
        "none" => FairnessPolicy::unconstrained(groups),
        "exact" => FairnessPolicy::exact(group_sizes),
        "alphabeta" => {
            let (a, b) = args
                .split_once(';')
                .ok_or_else(|| bad(spec, "expected alpha list;beta list"))?;
            let alpha = rationals(spec, a)?;
            let beta = rationals(spec, b)?;
            if alpha.len() != groups {
                return Err(bad(spec, format!("{} alphas for {groups} groups", alpha.len())));
            }
            FairnessPolicy::alpha_beta(alpha, beta).map_err(|e| bad(spec, e))?
        }
        "coverage" => {
            let mut d = None;
            let mut alpha = None;
            for part in args.split(';') {
                match part.split_once('=') {
                    Some(("D", list)) => {
                        let ids = list
                            .split(',')
                            .map(|t| match t.trim().parse::<usize>() {
                                Ok(i) if (1..=groups).contains(&i) => Ok(i - 1),
                                _ => Err(bad(spec, format!("group {t:?} is not in 1..={groups}"))),
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        d = Some(ids);
                    }
                    Some(("alpha", v)) => alpha = Some(parse_rational(v).map_err(|e| bad(spec, e))?),
                    _ => return Err(bad(spec, format!("unexpected {part:?}"))),
                }
            }
            let d = d.ok_or_else(|| bad(spec, "missing D="))?;
            let alpha = alpha.ok_or_else(|| bad(spec, "missing alpha="))?;
            FairnessPolicy::coverage(d, alpha, groups).map_err(|e| bad(spec, e))?
        }
        "explicit" => {
            let profiles = args
                .split(';')
                .map(|p| {
                    p.split(',')
                        .map(|c| c.trim().parse::<i64>().map_err(|_| bad(spec, format!("bad count {c:?}"))))
                        .collect::<Result<Vec<_>, _>>()
                        .map(Profile::from)
                })
                .collect::<Result<Vec<_>, _>>()?;
            FairnessPolicy::explicit(profiles, groups).map_err(|e| bad(spec, e))?
        }
        other => return Err(bad(spec, format!("unknown policy kind {other:?}"))),
    };
    Ok(policy)
}
