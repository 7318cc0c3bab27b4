//! Iterative sub-instance identification: beam searches on small variable
//! sets taken from the causal graph, moving from the target's parents
//! towards the roots.

use std::collections::VecDeque;

use itertools::Itertools;

use super::{identify_causes, mutually_minimal, BeamConfig, CauseResult, SearchSpace, SearchStats};
use crate::error::{Error, Result};
use crate::heuristic::Heuristic;
use crate::intervention::{is_subset, union, VarSet};
use crate::oracle::{Oracle, PinnedOracle};
use crate::scm::VarId;

/// Largest cause whose subsets are expanded into new instances.
pub const MAX_EXPANDED_CAUSE: usize = 16;

/// How a cause `C` found on an instance is turned into new instances, for a
/// non-empty subset `s` of `C`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsiExpansion {
    /// Parents of `s` plus the rest of the cause.
    #[default]
    CauseVariables,
    /// Parents of `s` plus the rest of the instance that produced `C`.
    PriorInstance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceTask {
    pub instance: VarSet,
    /// Held at actual values while the instance is searched, minus any
    /// variable of the instance itself.
    pub base_contingency: VarSet,
}

#[derive(Clone, Debug, Default)]
pub struct IsiMemory {
    instances: Vec<VarSet>,
}

impl IsiMemory {
    pub fn instances(&self) -> &[VarSet] {
        &self.instances
    }
}

/// Admits `candidate` into `memory` unless it is a subset of a stored
/// instance; returns whether it was admitted.
pub fn check_inclusion(candidate: &[VarId], memory: &mut IsiMemory) -> bool {
    if memory.instances.iter().any(|m| is_subset(candidate, m)) {
        return false;
    }
    memory.instances.push(candidate.iter().copied().collect());
    true
}

/// New instances from a cause: one per non-empty subset of `cause`, by size
/// and then lexicographically.
pub fn expand_cause_instances(
    cause: &[VarId],
    contingency: &[VarId],
    parents: &[Vec<VarId>],
    prior_instance: &[VarId],
    mode: IsiExpansion,
) -> Result<Vec<InstanceTask>> {
    if cause.len() > MAX_EXPANDED_CAUSE {
        return Err(Error::CauseTooLargeForExpansion {
            size: cause.len(),
            limit: MAX_EXPANDED_CAUSE,
        });
    }
    let rest_of = match mode {
        IsiExpansion::CauseVariables => cause,
        IsiExpansion::PriorInstance => prior_instance,
    };
    let mut out = Vec::new();
    for size in 1..=cause.len() {
        for s in cause.iter().copied().combinations(size) {
            let mut inst: VarSet = rest_of.iter().copied().filter(|v| !s.contains(v)).collect();
            for x in &s {
                inst.extend(parents[x.index()].iter().copied());
            }
            inst.sort_unstable();
            inst.dedup();
            out.push(InstanceTask {
                instance: inst,
                base_contingency: contingency.iter().copied().collect(),
            });
        }
    }
    Ok(out)
}

/// Runs beam searches on a queue of instances, starting from `roots`
/// (normally the target's parents), and expands every cause found into
/// instances over its variables' parents.
///
/// `parents` may list more parents than the true graph has; it must not
/// miss any.
pub fn identify_causes_isi(
    space: &SearchSpace,
    parents: &[Vec<VarId>],
    roots: &[VarId],
    oracle: &dyn Oracle,
    heuristic: &Heuristic,
    config: &BeamConfig,
    mode: IsiExpansion,
) -> Result<(Vec<CauseResult>, SearchStats)> {
    config.validate()?;
    if parents.len() != space.names.len() {
        return Err(Error::InvalidConfig(
            "parent map does not cover every variable".into(),
        ));
    }
    let searchable = |vars: &[VarId]| -> VarSet {
        let mut out: VarSet = vars
            .iter()
            .copied()
            .filter(|v| space.vars.contains(v))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    let mut stats = SearchStats::default();
    let mut all = Vec::new();
    let mut memory = IsiMemory::default();
    let mut queue = VecDeque::new();
    let first = searchable(roots);
    if first.is_empty() {
        return Ok((all, stats));
    }
    check_inclusion(&first, &mut memory);
    queue.push_back(InstanceTask {
        instance: first,
        base_contingency: VarSet::new(),
    });

    while let Some(task) = queue.pop_front() {
        let pins: Vec<VarId> = task
            .base_contingency
            .iter()
            .copied()
            .filter(|v| !task.instance.contains(v))
            .collect();
        let pinned = PinnedOracle::new(oracle, pins.clone(), &space.v_star);
        let sub = space.restrict(&task.instance);
        let cfg = BeamConfig {
            seed: crate::mix_seed(config.seed, stats.isi_steps),
            ..config.clone()
        };
        stats.isi_steps += 1;
        let (found, st) = identify_causes(&sub, &pinned, heuristic, &cfg)?;
        stats.merge(&st);
        let productive = !found.is_empty();
        for mut c in found {
            c.contingency_vars = union(&c.contingency_vars, &pins);
            for next in expand_cause_instances(
                &c.cause_vars,
                &c.contingency_vars,
                parents,
                &task.instance,
                mode,
            )? {
                let inst = searchable(&next.instance);
                if !inst.is_empty() && check_inclusion(&inst, &mut memory) {
                    queue.push_back(InstanceTask {
                        instance: inst,
                        base_contingency: next.base_contingency,
                    });
                }
            }
            all.push(c);
        }
        if config.early_stop && productive {
            break;
        }
    }
    Ok((mutually_minimal(all), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::heuristic::HeuristicKind;
    use crate::oracle::ScmOracle;
    use crate::scm::Context;

    fn set(scm: &crate::scm::Scm, names: &[&str]) -> VarSet {
        let mut s: VarSet = names.iter().map(|n| scm.var(n).unwrap()).collect();
        s.sort_unstable();
        s
    }

    #[test]
    fn inclusion_against_memory() {
        let scm = benchmarks::rock_throwing();
        let mut mem = IsiMemory::default();
        assert!(check_inclusion(&set(&scm, &["SH", "BH"]), &mut mem));
        assert!(check_inclusion(&set(&scm, &["ST"]), &mut mem));
        assert!(!check_inclusion(&set(&scm, &["SH", "BH"]), &mut mem));
        assert!(!check_inclusion(&set(&scm, &["BH"]), &mut mem));
        assert_eq!(mem.instances().len(), 2);
    }

    #[test]
    fn expansion_of_shatter_hit() {
        let scm = benchmarks::rock_throwing();
        let tasks = expand_cause_instances(
            &set(&scm, &["SH"]),
            &set(&scm, &["BH"]),
            scm.parent_map(),
            &set(&scm, &["SH", "BH"]),
            IsiExpansion::CauseVariables,
        )
        .unwrap();
        assert_eq!(
            tasks,
            vec![InstanceTask {
                instance: set(&scm, &["ST"]),
                base_contingency: set(&scm, &["BH"]),
            }]
        );
    }

    #[test]
    fn expansion_of_dk2() {
        let scm = benchmarks::smk_base(3);
        let tasks = expand_cause_instances(
            &set(&scm, &["DK2"]),
            &set(&scm, &["DK3"]),
            scm.parent_map(),
            &set(&scm, &["DK1", "DK2", "DK3"]),
            IsiExpansion::CauseVariables,
        )
        .unwrap();
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].instance, set(&scm, &["DK1", "GP2", "GK2"]));
        let prior = expand_cause_instances(
            &set(&scm, &["DK2"]),
            &set(&scm, &["DK3"]),
            scm.parent_map(),
            &set(&scm, &["DK1", "DK2", "DK3"]),
            IsiExpansion::PriorInstance,
        )
        .unwrap();
        assert_eq!(prior[0].instance, set(&scm, &["DK1", "DK3", "GP2", "GK2"]));
    }

    #[test]
    fn subsets_come_by_size_then_lexicographic() {
        let scm = benchmarks::smk_base(1);
        let c = set(&scm, &["FS1", "FN1"]);
        let tasks =
            expand_cause_instances(&c, &[], scm.parent_map(), &c, IsiExpansion::CauseVariables)
                .unwrap();
        let got: Vec<VarSet> = tasks.into_iter().map(|t| t.instance).collect();
        // leaves have no parents
        assert_eq!(
            got,
            vec![set(&scm, &["FN1"]), set(&scm, &["FS1"]), VarSet::new()]
        );
    }

    #[test]
    fn oversized_causes_are_refused() {
        let parents = vec![Vec::new(); 17];
        let c: Vec<VarId> = (0..17).map(VarId).collect();
        assert!(matches!(
            expand_cause_instances(&c, &[], &parents, &c, IsiExpansion::CauseVariables),
            Err(Error::CauseTooLargeForExpansion {
                size: 17,
                limit: 16
            })
        ));
    }

    #[test]
    fn rock_throwing_walks_back_to_suzy() {
        let scm = benchmarks::rock_throwing();
        let ctx = Context::from_bools(&scm, &[true, true]).unwrap();
        let space = SearchSpace::from_scm(&scm, &ctx).unwrap();
        let oracle = ScmOracle::new(&scm, &ctx).unwrap();
        let h = Heuristic::new(HeuristicKind::Positive, &space, 0, true).unwrap();
        let (causes, stats) = identify_causes_isi(
            &space,
            scm.parent_map(),
            &scm.target_parents(),
            &oracle,
            &h,
            &BeamConfig::default(),
            IsiExpansion::CauseVariables,
        )
        .unwrap();
        let got: Vec<(VarSet, VarSet)> = causes
            .iter()
            .map(|c| (c.cause_vars.clone(), c.contingency_vars.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                (set(&scm, &["SH"]), set(&scm, &["BH"])),
                (set(&scm, &["ST"]), set(&scm, &["BH"])),
            ]
        );
        assert_eq!(stats.isi_steps, 2);
    }

    #[test]
    fn no_cause_at_the_top_drains_after_one_run() {
        let scm = benchmarks::rock_throwing();
        let ctx = Context::from_bools(&scm, &[true, true]).unwrap();
        let space = SearchSpace::from_scm(&scm, &ctx).unwrap();
        let always = crate::oracle::FnOracle::new(|_| Ok(true), space.v_star.clone());
        let h = Heuristic::new(HeuristicKind::Constant, &space, 0, false).unwrap();
        let (causes, stats) = identify_causes_isi(
            &space,
            scm.parent_map(),
            &scm.target_parents(),
            &always,
            &h,
            &BeamConfig::default(),
            IsiExpansion::CauseVariables,
        )
        .unwrap();
        assert!(causes.is_empty());
        assert_eq!(stats.isi_steps, 1);
    }
}
