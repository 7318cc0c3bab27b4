//! The three actual-cause conditions, checked exhaustively on small candidates.

use super::{Context, Scm, VarId};
use crate::error::{Error, Result};
use crate::intervention::{Intervention, VarSet};

/// Default cap on the counterfactual settings AC3 may enumerate.
pub const DEFAULT_AC3_BUDGET: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HpVerdict {
    pub ac1: bool,
    pub ac2: bool,
    pub ac3: bool,
}

impl HpVerdict {
    pub fn holds(&self) -> bool {
        self.ac1 && self.ac2 && self.ac3
    }
}

/// Finds the smallest contingency set that, added to `cause` at actual
/// values, makes the target fail.
///
/// Only variables that deviate from their actual value in the current
/// counterfactual state are tried, in increasing topological rank. Pinning a
/// variable that already sits at its actual value changes nothing, and in an
/// inclusion-minimal contingency listed by rank, each member deviates once
/// the earlier members are pinned, since later members cannot be its
/// ancestors. So the restricted breadth-first search misses no minimal set,
/// and returns a smallest one, ties broken by rank order.
pub(crate) struct ContingencySearch<'a> {
    pub v_star: &'a [u32],
    /// Candidate contingency members sorted by `rank`.
    pub allowed: &'a [VarId],
    pub rank: &'a [u32],
}

impl ContingencySearch<'_> {
    /// `observe` evaluates an intervention, writing the full post-intervention
    /// state, and reports whether the target still holds. Each call costs one
    /// unit of `budget`.
    pub fn smallest<F>(
        &self,
        cause: &Intervention,
        mut observe: F,
        budget: &mut u64,
        spent: &mut u64,
    ) -> Result<Option<VarSet>>
    where
        F: FnMut(&Intervention, &mut Vec<u32>) -> Result<bool>,
    {
        let mut state = Vec::new();
        let mut level: Vec<(VarSet, Option<u32>)> = vec![(VarSet::new(), None)];
        loop {
            let mut next = Vec::new();
            for (pins, last) in &level {
                if *budget == 0 {
                    return Err(Error::BudgetExceeded {
                        size: *spent as u128 + 1,
                        budget: *spent as u128,
                    });
                }
                *budget -= 1;
                *spent += 1;
                let e = cause.pinned(pins, self.v_star);
                if !observe(&e, &mut state)? {
                    return Ok(Some(pins.clone()));
                }
                for &x in self.allowed {
                    let r = self.rank[x.index()];
                    if last.is_some_and(|l| r <= l) || cause.contains_var(x) {
                        continue;
                    }
                    if state[x.index()] != self.v_star[x.index()] {
                        let mut p = pins.clone();
                        p.push(x);
                        next.push((p, Some(r)));
                    }
                }
            }
            if next.is_empty() {
                return Ok(None);
            }
            for (p, _) in &mut next {
                p.sort_unstable();
            }
            level = next;
        }
    }
}

pub(crate) fn scm_ranks(scm: &Scm) -> Vec<u32> {
    let mut rank = vec![0u32; scm.endogenous().len()];
    for (i, v) in scm.topological_order().iter().enumerate() {
        rank[v.index()] = i as u32;
    }
    rank
}

/// Settings AC3 enumerates: counterfactual tuples over every non-empty proper
/// subset of the cause.
fn ac3_settings(sizes: &[u128]) -> u128 {
    // prod(1 + s) sums the products over all subsets, including the empty and the full one
    let all = sizes
        .iter()
        .fold(1u128, |acc, &s| acc.saturating_mul(1 + s));
    let full = sizes.iter().fold(1u128, |acc, &s| acc.saturating_mul(s));
    all.saturating_sub(full).saturating_sub(1)
}

/// Checks AC1, AC2 and AC3 for `cause` (with its counterfactual values)
/// under the contingency `contingency` held at actual values.
///
/// AC3 enumerates every non-empty proper subset of the cause with every
/// counterfactual assignment, searching each for any contingency. This is
/// exponential in the cause size and meant for verification.
pub fn check_hp_cause(
    scm: &Scm,
    ctx: &Context,
    cause: &Intervention,
    contingency: &[VarId],
    budget: u128,
) -> Result<HpVerdict> {
    if contingency.iter().any(|w| cause.contains_var(*w)) {
        return Err(Error::InvalidConfig(
            "cause and contingency must be disjoint".into(),
        ));
    }
    let v_star = scm.actual_values(ctx)?.0;
    let exo = ctx.values();
    let mut buf = Vec::new();
    let mut holds = |e: &Intervention, out: &mut Vec<u32>| -> Result<bool> {
        scm.evaluate_into(exo, e.pairs(), out)?;
        scm.target_holds(out, exo)
    };

    let ac1 = holds(&Intervention::empty(), &mut buf)?;
    let counterfactual = cause.pairs().iter().all(|&(v, x)| x != v_star[v.index()]);
    let probe = cause.pinned(contingency, &v_star);
    let ac2 = !cause.is_empty() && counterfactual && !holds(&probe, &mut buf)?;

    let n = cause.len();
    let sizes: Vec<u128> = cause
        .vars()
        .map(|v| scm.domains()[v.index()].len() as u128 - 1)
        .collect();
    let settings = ac3_settings(&sizes);
    if settings > budget {
        return Err(Error::CandidateTooLarge { settings, budget });
    }

    let rank = scm_ranks(scm);
    let mut search_vars = scm.search_variables();
    search_vars.sort_by_key(|v| rank[v.index()]);
    let mut eval_budget = u64::try_from(budget).unwrap_or(u64::MAX);
    let mut spent = 0u64;

    let vars: Vec<VarId> = cause.vars().collect();
    let mut ac3 = true;
    'subsets: for mask in 1u64..(1u64 << n) - 1 {
        let members: Vec<VarId> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| vars[i])
            .collect();
        let alternatives: Vec<Vec<u32>> = members
            .iter()
            .map(|v| {
                (0..scm.domains()[v.index()].len() as u32)
                    .filter(|&x| x != v_star[v.index()])
                    .collect()
            })
            .collect();
        if alternatives.iter().any(Vec::is_empty) {
            continue;
        }
        let allowed: Vec<VarId> = search_vars
            .iter()
            .copied()
            .filter(|v| !members.contains(v))
            .collect();
        let search = ContingencySearch {
            v_star: &v_star,
            allowed: &allowed,
            rank: &rank,
        };
        let mut digits = vec![0usize; members.len()];
        loop {
            let sub = Intervention::from_pairs(
                members
                    .iter()
                    .zip(&digits)
                    .zip(&alternatives)
                    .map(|((&v, &d), alt)| (v, alt[d])),
            )?;
            if search
                .smallest(&sub, &mut holds, &mut eval_budget, &mut spent)?
                .is_some()
            {
                ac3 = false;
                break 'subsets;
            }
            // mixed-radix increment
            let mut i = 0;
            while i < digits.len() {
                digits[i] += 1;
                if digits[i] < alternatives[i].len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
    }
    Ok(HpVerdict { ac1, ac2, ac3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;

    fn rt() -> (Scm, Context) {
        let scm = benchmarks::rock_throwing();
        let ctx = Context::from_bools(&scm, &[true, true]).unwrap();
        (scm, ctx)
    }

    #[test]
    fn suzy_throw_is_a_cause_given_billy_missing() {
        let (scm, ctx) = rt();
        let st = scm.var("ST").unwrap();
        let bh = scm.var("BH").unwrap();
        let v = check_hp_cause(
            &scm,
            &ctx,
            &Intervention::single(st, 0),
            &[bh],
            DEFAULT_AC3_BUDGET,
        )
        .unwrap();
        assert_eq!(
            v,
            HpVerdict {
                ac1: true,
                ac2: true,
                ac3: true
            }
        );
    }

    #[test]
    fn empty_cause_fails_ac2() {
        let (scm, ctx) = rt();
        let v =
            check_hp_cause(&scm, &ctx, &Intervention::empty(), &[], DEFAULT_AC3_BUDGET).unwrap();
        assert!(v.ac1 && !v.ac2);
    }

    #[test]
    fn two_variable_cause_fails_ac3() {
        let (scm, ctx) = rt();
        let st = scm.var("ST").unwrap();
        let bh = scm.var("BH").unwrap();
        let c = Intervention::from_pairs([(st, 0), (bh, 0)]).unwrap();
        let v = check_hp_cause(&scm, &ctx, &c, &[], DEFAULT_AC3_BUDGET).unwrap();
        assert!(!v.ac3);
        let c = Intervention::from_pairs([(st, 0), (scm.var("SH").unwrap(), 0)]).unwrap();
        let v = check_hp_cause(&scm, &ctx, &c, &[bh], DEFAULT_AC3_BUDGET).unwrap();
        assert!(v.ac2 && !v.ac3);
    }

    #[test]
    fn budget_is_enforced() {
        let (scm, ctx) = rt();
        let c = Intervention::from_pairs([
            (scm.var("ST").unwrap(), 0),
            (scm.var("SH").unwrap(), 0),
            (scm.var("BT").unwrap(), 0),
        ])
        .unwrap();
        assert!(matches!(
            check_hp_cause(&scm, &ctx, &c, &[], 3),
            Err(Error::CandidateTooLarge {
                settings: 6,
                budget: 3
            })
        ));
    }

    #[test]
    fn settings_count_matches_subset_enumeration() {
        let sizes = [1u128, 2, 3];
        let mut brute = 0;
        for mask in 1..7u32 {
            let mut p = 1;
            for (i, s) in sizes.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    p *= s;
                }
            }
            brute += p;
        }
        assert_eq!(ac3_settings(&sizes), brute);
    }
}
