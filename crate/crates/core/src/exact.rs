//! Exhaustive reference enumerators for small instances.

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervention::{is_subset, Intervention, VarSet};
use crate::oracle::Oracle;
use crate::scm::hp::ContingencySearch;
use crate::scm::VarId;
use crate::search::{mutually_minimal, CauseResult, SearchSpace};

/// Default cap on the number of interventions the brute-force enumerator
/// may visit.
pub const DEFAULT_EXACT_BUDGET: u128 = 1 << 24;

/// Number of interventions with at most `max_size` pairs over the given
/// domain sizes.
pub fn instance_size(domain_sizes: &[usize], max_size: usize) -> u128 {
    // e[j] = sum over j-subsets of the product of their domain sizes
    let mut e = vec![0u128; max_size + 1];
    e[0] = 1;
    for &d in domain_sizes {
        for j in (1..=max_size).rev() {
            e[j] = e[j].saturating_add(e[j - 1].saturating_mul(d as u128));
        }
    }
    e.into_iter().fold(0u128, |a, b| a.saturating_add(b))
}

/// Every intervention up to `max_size` pairs, by size and then in canonical
/// order; returns one witness (smallest contingency) per minimal cancelling
/// counterfactual set.
///
/// Interventions whose counterfactual set contains an already found one are
/// not queried.
pub fn enumerate_causes(
    space: &SearchSpace,
    oracle: &dyn Oracle,
    max_size: usize,
    budget: u128,
) -> Result<Vec<CauseResult>> {
    let max_size = max_size.min(space.vars.len());
    let sizes: Vec<usize> = space
        .vars
        .iter()
        .map(|v| space.domains[v.index()].len())
        .collect();
    let size = instance_size(&sizes, max_size);
    if size > budget {
        return Err(Error::BudgetExceeded { size, budget });
    }
    let v_star = &space.v_star;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut found: Vec<CauseResult> = Vec::new();

    for n in 1..=max_size {
        for vars in space.vars.iter().copied().combinations(n) {
            let radix: Vec<u32> = vars
                .iter()
                .map(|v| space.domains[v.index()].len() as u32)
                .collect();
            if radix.contains(&0) {
                continue;
            }
            let mut digits = vec![0u32; n];
            loop {
                let e = Intervention::from_pairs(vars.iter().copied().zip(digits.iter().copied()))?;
                let c = e.cause_vars(v_star);
                let covered = c.is_empty() || found.iter().any(|f| is_subset(&f.cause_vars, &c));
                if !covered && !oracle.query(&e, &mut rng)? {
                    found.push(CauseResult::from_witness(&e, v_star, n));
                }
                let mut i = n;
                let done = loop {
                    if i == 0 {
                        break true;
                    }
                    i -= 1;
                    digits[i] += 1;
                    if digits[i] < radix[i] {
                        break false;
                    }
                    digits[i] = 0;
                };
                if done {
                    break;
                }
            }
        }
    }
    Ok(mutually_minimal(found))
}

/// Every minimal cause with at most `max_cause_size` variables, each with a
/// smallest contingency found by an exact search over downstream deviations.
///
/// Needs an oracle that observes downstream effects.
pub fn enumerate_causes_guided(
    space: &SearchSpace,
    oracle: &dyn Oracle,
    max_cause_size: usize,
    budget: u64,
) -> Result<Vec<CauseResult>> {
    if !oracle.observes_downstream() {
        return Err(Error::InvalidConfig(
            "guided enumeration needs post-intervention values".into(),
        ));
    }
    let v_star = &space.v_star;
    let mut allowed = space.vars.clone();
    allowed.sort_by_key(|v| space.rank[v.index()]);
    let search = ContingencySearch {
        v_star,
        allowed: &allowed,
        rank: &space.rank,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut remaining = budget;
    let mut spent = 0u64;
    let mut found: Vec<CauseResult> = Vec::new();
    for n in 1..=max_cause_size.min(space.vars.len()) {
        for vars in space.vars.iter().copied().combinations(n) {
            if found.iter().any(|f| is_subset(&f.cause_vars, &vars)) {
                continue;
            }
            let alternatives: Vec<Vec<u32>> = vars
                .iter()
                .map(|v| {
                    (0..space.domains[v.index()].len() as u32)
                        .filter(|&x| x != v_star[v.index()])
                        .collect()
                })
                .collect();
            if alternatives.iter().any(Vec::is_empty) {
                continue;
            }
            let mut best: Option<(Intervention, VarSet)> = None;
            for values in alternatives
                .iter()
                .map(|a| a.iter().copied())
                .multi_cartesian_product()
            {
                let cause = Intervention::from_pairs(vars.iter().copied().zip(values))?;
                let w = search.smallest(
                    &cause,
                    |e, state| oracle.query_observe(e, &mut rng, state),
                    &mut remaining,
                    &mut spent,
                )?;
                if let Some(w) = w {
                    if best.as_ref().is_none_or(|(_, b)| w.len() < b.len()) {
                        best = Some((cause, w));
                    }
                }
            }
            if let Some((cause, w)) = best {
                let e = cause.pinned(&w, v_star);
                found.push(CauseResult::from_witness(&e, v_star, e.len()));
            }
        }
    }
    Ok(found)
}

/// Reference file: named cause sets with their witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCause {
    pub cause: Vec<String>,
    pub values: Vec<crate::scm::Value>,
    pub contingency: Vec<String>,
}

pub fn reference_entries(space: &SearchSpace, causes: &[CauseResult]) -> Vec<ReferenceCause> {
    causes
        .iter()
        .map(|c| ReferenceCause {
            cause: space.describe_vars(&c.cause_vars),
            values: c
                .cause_vars
                .iter()
                .zip(&c.counterfactual_values)
                .map(|(v, &x)| space.domains[v.index()].value(x))
                .collect(),
            contingency: space.describe_vars(&c.contingency_vars),
        })
        .collect()
}

/// Cause variable sets as sorted id lists, for comparisons.
pub fn cause_sets(causes: &[CauseResult]) -> Vec<Vec<VarId>> {
    let mut out: Vec<Vec<VarId>> = causes.iter().map(|c| c.cause_vars.to_vec()).collect();
    out.sort();
    out.dedup();
    out
}
