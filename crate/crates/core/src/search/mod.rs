//! Level-wise beam search over interventions, returning minimal cancelling
//! interventions as approximate actual causes.

mod isi;

use indexmap::IndexSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristic::{Heuristic, HeuristicKind};
use crate::intervention::{is_subset, minimal_indices, union, Intervention, VarSet};
use crate::oracle::{Oracle, PinnedOracle};
use crate::scm::{Context, Domain, Scm, VarId};
use crate::stochastic::{self, Lucb, LucbConfig};

type FxIndexSet<T> = IndexSet<T, FxBuildHasher>;

pub use isi::{
    check_inclusion, expand_cause_instances, identify_causes_isi, InstanceTask, IsiExpansion,
    IsiMemory, MAX_EXPANDED_CAUSE,
};

/// Variables, domains and actual values an identifier works with.
///
/// Per-variable vectors are indexed by [`VarId`] and cover every variable
/// the oracle knows about; `vars` lists the ones the search may intervene on.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub names: Vec<String>,
    pub domains: Vec<Domain>,
    pub v_star: Vec<u32>,
    pub vars: Vec<VarId>,
    /// Topological rank per variable; index order when no graph is known.
    pub rank: Vec<u32>,
}

impl SearchSpace {
    pub fn new(
        names: Vec<String>,
        domains: Vec<Domain>,
        v_star: Vec<u32>,
        vars: Vec<VarId>,
    ) -> Result<Self> {
        let n = names.len();
        if domains.len() != n || v_star.len() != n {
            return Err(Error::InvalidConfig(
                "names, domains and actual values differ in length".into(),
            ));
        }
        for (i, (&x, d)) in v_star.iter().zip(&domains).enumerate() {
            if x as usize >= d.len() {
                return Err(Error::ValueOutsideDomain {
                    variable: names[i].clone(),
                    value: format!("#{x}"),
                });
            }
        }
        if let Some(v) = vars.iter().find(|v| v.index() >= n) {
            return Err(Error::UnknownVariable(format!("#{}", v.0)));
        }
        Ok(SearchSpace {
            names,
            domains,
            v_star,
            vars,
            rank: (0..n as u32).collect(),
        })
    }

    /// Every endogenous variable except the target one, with actual values
    /// taken in `ctx`.
    pub fn from_scm(scm: &Scm, ctx: &Context) -> Result<Self> {
        Ok(SearchSpace {
            names: scm.names(),
            domains: scm.domains().to_vec(),
            v_star: scm.actual_values(ctx)?.0,
            vars: scm.search_variables(),
            rank: crate::scm::hp::scm_ranks(scm),
        })
    }

    /// Same space with the searchable variables replaced by `vars`.
    pub fn restrict(&self, vars: &[VarId]) -> Self {
        SearchSpace {
            vars: vars.to_vec(),
            ..self.clone()
        }
    }

    pub fn var(&self, name: &str) -> Result<VarId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| VarId(i as u32))
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn describe_vars(&self, vars: &[VarId]) -> Vec<String> {
        vars.iter().map(|v| self.names[v.index()].clone()).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum StochasticMode {
    /// One oracle answer per element.
    #[default]
    Off,
    Naive {
        samples: u64,
    },
    Lucb(LucbConfig),
}

impl StochasticMode {
    pub fn name(&self) -> &'static str {
        match self {
            StochasticMode::Off => "off",
            StochasticMode::Naive { .. } => "naive",
            StochasticMode::Lucb(_) => "lucb",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    /// -1 keeps every candidate.
    pub beam_size: i64,
    /// 0 means the number of searchable variables.
    pub max_steps: usize,
    pub early_stop: bool,
    /// Cancellation threshold on estimated probabilities.
    pub epsilon: f64,
    pub stochastic: StochasticMode,
    /// In stochastic runs, rank the beam by the heuristic instead of the
    /// estimated probability.
    pub keep_heuristic: bool,
    pub seed: u64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: -1,
            max_steps: 0,
            early_stop: false,
            epsilon: 0.3,
            stochastic: StochasticMode::Off,
            keep_heuristic: false,
            seed: 0,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.beam_size < -1 {
            return Err(Error::InvalidConfig("beam size must be >= 1 or -1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig("epsilon must lie in (0, 1)".into()));
        }
        match &self.stochastic {
            StochasticMode::Naive { samples: 0 } => Err(Error::InvalidConfig(
                "naive evaluation needs at least one sample".into(),
            )),
            StochasticMode::Lucb(c) => c.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CauseResult {
    pub cause_vars: VarSet,
    /// Variables held at their actual values in the witness.
    pub contingency_vars: VarSet,
    /// Value index per cause variable, in `cause_vars` order.
    pub counterfactual_values: Vec<u32>,
    pub depth_found: usize,
}

impl CauseResult {
    pub(crate) fn from_witness(e: &Intervention, v_star: &[u32], depth: usize) -> Self {
        let (cause_vars, contingency_vars) = e.split_sets(v_star);
        let counterfactual_values = cause_vars.iter().map(|&v| e.get(v).unwrap()).collect();
        CauseResult {
            cause_vars,
            contingency_vars,
            counterfactual_values,
            depth_found: depth,
        }
    }

    pub fn cause(&self) -> Intervention {
        Intervention::from_pairs(
            self.cause_vars
                .iter()
                .copied()
                .zip(self.counterfactual_values.iter().copied()),
        )
        .expect("cause variables are distinct")
    }

    /// The cancelling intervention: counterfactual values on the cause,
    /// actual values on the contingency.
    pub fn witness(&self, v_star: &[u32]) -> Intervention {
        self.cause().pinned(&self.contingency_vars, v_star)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_per_depth: Vec<usize>,
    pub causes_per_depth: Vec<usize>,
    pub oracle_calls: u64,
    pub lucb_runs: u64,
    pub lucb_converged: u64,
    pub lucb_certificate_failures: u64,
    pub isi_steps: u64,
}

impl SearchStats {
    /// Adds `other` in, summing per-depth counts position by position.
    pub fn merge(&mut self, other: &SearchStats) {
        fn add(a: &mut Vec<usize>, b: &[usize]) {
            if a.len() < b.len() {
                a.resize(b.len(), 0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        add(&mut self.nodes_per_depth, &other.nodes_per_depth);
        add(&mut self.causes_per_depth, &other.causes_per_depth);
        self.oracle_calls += other.oracle_calls;
        self.lucb_runs += other.lucb_runs;
        self.lucb_converged += other.lucb_converged;
        self.lucb_certificate_failures += other.lucb_certificate_failures;
        self.isi_steps += other.isi_steps;
    }
}

/// Singleton interventions with every counterfactual value of every variable.
pub fn init_candidates(space: &SearchSpace) -> Vec<Intervention> {
    let mut out = Vec::new();
    for &x in &space.vars {
        for val in 0..space.domains[x.index()].len() as u32 {
            if val != space.v_star[x.index()] {
                out.push(Intervention::single(x, val));
            }
        }
    }
    out
}

/// Children of every beam element with one more variable, each child once.
///
/// Counterfactual values of `X` are skipped when the parent's counterfactual
/// set plus `X` already contains a known cause.
pub fn expand_beam(
    beam: &[Intervention],
    space: &SearchSpace,
    known: &[VarSet],
) -> Vec<Intervention> {
    if beam.is_empty() {
        return init_candidates(space);
    }
    let mut out: FxIndexSet<Intervention> = FxIndexSet::default();
    for parent in beam {
        let c = parent.cause_vars(&space.v_star);
        // a known cause blocks x when x is the only variable it has outside c
        let mut blocking = VarSet::new();
        for k in known {
            if let Some(Some(x)) = lone_missing(k, &c) {
                blocking.push(x);
            }
        }
        for &x in &space.vars {
            if parent.contains_var(x) {
                continue;
            }
            let blocked = blocking.contains(&x);
            let actual = space.v_star[x.index()];
            for val in 0..space.domains[x.index()].len() as u32 {
                if val != actual && blocked {
                    continue;
                }
                out.insert(parent.with(x, val));
            }
        }
    }
    out.into_iter().collect()
}

/// `Some(None)` when `k` is a subset of `c`, `Some(Some(x))` when `x` is
/// the only element of `k` missing from `c`, `None` otherwise.
fn lone_missing(k: &[VarId], c: &[VarId]) -> Option<Option<VarId>> {
    let mut missing = None;
    let mut j = 0;
    for &x in k {
        while j < c.len() && c[j] < x {
            j += 1;
        }
        if j < c.len() && c[j] == x {
            j += 1;
        } else if missing.replace(x).is_some() {
            return None;
        }
    }
    Some(missing)
}

struct Evaluated {
    cancels: Vec<bool>,
    /// Beam score per element; only meaningful for non-cancelling ones.
    scores: Vec<f64>,
}

fn evaluate_batch(
    batch: &[Intervention],
    oracle: &dyn Oracle,
    heuristic: &Heuristic,
    config: &BeamConfig,
    rng: &mut ChaCha8Rng,
    stats: &mut SearchStats,
) -> Result<Evaluated> {
    let want_scores = config.beam_size >= 0;
    let mut state = Vec::new();
    let mut scores = vec![0.0; batch.len()];
    let estimates = match &config.stochastic {
        StochasticMode::Off => None,
        StochasticMode::Naive { samples } => {
            let mut calls = 0u64;
            let means = stochastic::naive_evaluate(
                batch.len(),
                |i| {
                    calls += 1;
                    oracle.query(&batch[i], rng)
                },
                *samples,
            )?;
            stats.oracle_calls += calls;
            Some(means)
        }
        StochasticMode::Lucb(cfg) => {
            let cfg = LucbConfig {
                beam: config.beam_size,
                epsilon: config.epsilon,
                ..cfg.clone()
            };
            let lucb = Lucb::new(
                batch.len(),
                |i| oracle.query(&batch[i], &mut *rng),
                cfg.clone(),
            )?;
            let (outcome, _, _) = lucb.run()?;
            stats.oracle_calls += outcome.total_samples;
            stats.lucb_runs += 1;
            if outcome.converged {
                stats.lucb_converged += 1;
                if !stochastic::certificate_holds(&outcome.arms, &cfg) {
                    stats.lucb_certificate_failures += 1;
                }
            }
            Some(outcome.means)
        }
    };

    let cancels = match estimates {
        None => {
            let mut cancels = Vec::with_capacity(batch.len());
            for (i, e) in batch.iter().enumerate() {
                stats.oracle_calls += 1;
                let holds = if want_scores && heuristic.uses_state() {
                    let holds = oracle.query_observe(e, rng, &mut state)?;
                    if holds {
                        scores[i] = heuristic.score(e, &state);
                    }
                    holds
                } else {
                    let holds = oracle.query(e, rng)?;
                    if holds && want_scores {
                        scores[i] = heuristic.score(e, &[]);
                    }
                    holds
                };
                cancels.push(!holds);
            }
            cancels
        }
        Some(means) => {
            let cancels: Vec<bool> = means.iter().map(|&m| m < config.epsilon).collect();
            if want_scores {
                for (i, e) in batch.iter().enumerate() {
                    if cancels[i] {
                        continue;
                    }
                    scores[i] = if !config.keep_heuristic {
                        means[i]
                    } else if heuristic.uses_state() {
                        stats.oracle_calls += 1;
                        oracle.query_observe(e, rng, &mut state)?;
                        heuristic.score(e, &state)
                    } else {
                        heuristic.score(e, &[])
                    };
                }
            }
            cancels
        }
    };
    Ok(Evaluated { cancels, scores })
}

/// Beam search for minimal cancelling interventions.
///
/// At each depth every candidate is queried; cancelling ones whose
/// counterfactual set is minimal among known causes and among each other
/// become causes, the rest are ranked by `heuristic` (smaller is better) and
/// the best `beam_size` are expanded.
pub fn identify_causes(
    space: &SearchSpace,
    oracle: &dyn Oracle,
    heuristic: &Heuristic,
    config: &BeamConfig,
) -> Result<(Vec<CauseResult>, SearchStats)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut stats = SearchStats::default();
    let max_steps = if config.max_steps == 0 {
        space.vars.len()
    } else {
        config.max_steps
    };
    let v_star = &space.v_star;
    let mut causes: Vec<CauseResult> = Vec::new();
    let mut known: Vec<VarSet> = Vec::new();
    let mut beam: Vec<Intervention> = Vec::new();

    for depth in 1..=max_steps {
        let batch = if depth == 1 {
            init_candidates(space)
        } else {
            expand_beam(&beam, space, &known)
        };
        if batch.is_empty() {
            break;
        }
        stats.nodes_per_depth.push(batch.len());
        let eval = evaluate_batch(&batch, oracle, heuristic, config, &mut rng, &mut stats)?;

        let mut neg: Vec<(usize, VarSet)> = Vec::new();
        for (i, e) in batch.iter().enumerate() {
            if eval.cancels[i] {
                let c = e.cause_vars(v_star);
                if !c.is_empty() && !known.iter().any(|k| is_subset(k, &c)) {
                    neg.push((i, c));
                }
            }
        }
        let sets: Vec<&[VarId]> = neg.iter().map(|(_, c)| c.as_slice()).collect();
        let fresh: Vec<(usize, VarSet)> = minimal_indices(&sets)
            .into_iter()
            .map(|j| neg[j].clone())
            .collect();
        if !fresh.is_empty() {
            let keep: Vec<bool> = known
                .iter()
                .map(|k| !fresh.iter().any(|(_, c)| is_subset(c, k)))
                .collect();
            let mut it = keep.iter();
            causes.retain(|_| *it.next().unwrap());
            let mut it = keep.iter();
            known.retain(|_| *it.next().unwrap());
        }
        stats.causes_per_depth.push(fresh.len());
        for (i, c) in fresh {
            causes.push(CauseResult::from_witness(&batch[i], v_star, depth));
            known.push(c);
        }

        if config.early_stop && !causes.is_empty() {
            break;
        }
        let mut pos: Vec<usize> = (0..batch.len())
            .filter(|&i| !eval.cancels[i])
            .filter(|&i| {
                let c = batch[i].cause_vars(v_star);
                !known.iter().any(|k| is_subset(k, &c))
            })
            .collect();
        if config.beam_size >= 0 {
            pos.sort_by(|&a, &b| eval.scores[a].total_cmp(&eval.scores[b]));
            pos.truncate(config.beam_size as usize);
        }
        let mut batch = batch;
        beam = pos
            .into_iter()
            .map(|i| std::mem::replace(&mut batch[i], Intervention::empty()))
            .collect();
        if beam.is_empty() {
            break;
        }
    }
    Ok((causes, stats))
}

/// Keeps only the causes whose variable sets are minimal, first witness wins.
pub fn mutually_minimal(causes: Vec<CauseResult>) -> Vec<CauseResult> {
    let sets: Vec<&[VarId]> = causes.iter().map(|c| c.cause_vars.as_slice()).collect();
    let keep = minimal_indices(&sets);
    let mut out = Vec::with_capacity(keep.len());
    let mut causes: Vec<Option<CauseResult>> = causes.into_iter().map(Some).collect();
    for i in keep {
        out.push(causes[i].take().unwrap());
    }
    out
}

/// Replaces every cause by the minimal causes an unlimited search finds
/// among its own variables, with its contingency pinned.
pub fn minimize_causes(
    causes: &[CauseResult],
    space: &SearchSpace,
    oracle: &dyn Oracle,
    config: &BeamConfig,
) -> Result<(Vec<CauseResult>, SearchStats)> {
    let mut stats = SearchStats::default();
    let mut out = Vec::new();
    let heuristic = Heuristic::new(HeuristicKind::Constant, space, 0, false)?;
    for (i, cause) in causes.iter().enumerate() {
        let pins = cause.contingency_vars.to_vec();
        let pinned = PinnedOracle::new(oracle, pins.clone(), &space.v_star);
        let sub = space.restrict(&cause.cause_vars);
        let cfg = BeamConfig {
            beam_size: -1,
            max_steps: cause.cause_vars.len(),
            early_stop: false,
            seed: crate::mix_seed(config.seed, i as u64),
            ..config.clone()
        };
        let (found, st) = identify_causes(&sub, &pinned, &heuristic, &cfg)?;
        stats.merge(&st);
        for mut c in found {
            c.contingency_vars = union(&c.contingency_vars, &pins);
            c.depth_found = cause.depth_found;
            out.push(c);
        }
    }
    Ok((mutually_minimal(out), stats))
}
