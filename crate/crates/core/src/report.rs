//! Options, models and run reports shared by the command line, the
//! experiment harness and the C interface.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{self, Builtin, SmkBlackBox};
use crate::error::{Error, Result};
use crate::exact::{self, ReferenceCause};
use crate::heuristic::{Heuristic, HeuristicKind};
use crate::oracle::{NoisyScmOracle, Oracle, ScmOracle};
use crate::scm::{Context, NoiseModel, Scm, Value, VarId};
use crate::search::{
    identify_causes, identify_causes_isi, minimize_causes, BeamConfig, CauseResult, IsiExpansion,
    SearchSpace, SearchStats, StochasticMode,
};
use crate::stochastic::LucbConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    Base,
    Isi,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Algorithm::Base),
            "isi" => Ok(Algorithm::Isi),
            _ => Err(Error::InvalidConfig(format!("unknown algorithm `{s}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Base => "base",
            Algorithm::Isi => "isi",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StochasticKind {
    #[default]
    Off,
    Naive,
    Lucb,
}

impl FromStr for StochasticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(StochasticKind::Off),
            "naive" => Ok(StochasticKind::Naive),
            "lucb" => Ok(StochasticKind::Lucb),
            _ => Err(Error::InvalidConfig(format!(
                "unknown stochastic mode `{s}`"
            ))),
        }
    }
}

impl fmt::Display for StochasticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StochasticKind::Off => "off",
            StochasticKind::Naive => "naive",
            StochasticKind::Lucb => "lucb",
        })
    }
}

/// Everything an identification run is configured by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifyOptions {
    pub algorithm: Algorithm,
    pub beam: i64,
    pub max_steps: usize,
    pub early_stop: bool,
    pub heuristic: HeuristicKind,
    pub epsilon: f64,
    pub stochastic: StochasticKind,
    pub samples: u64,
    pub batch: u64,
    pub tc: f64,
    pub tnc: f64,
    pub tb: f64,
    pub nmax: Option<u64>,
    pub seed: u64,
    pub minimize: bool,
    pub keep_heuristic: bool,
    pub isi_expansion: IsiExpansion,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions {
            algorithm: Algorithm::Base,
            beam: -1,
            max_steps: 0,
            early_stop: false,
            heuristic: HeuristicKind::Positive,
            epsilon: 0.3,
            stochastic: StochasticKind::Off,
            samples: 20,
            batch: 10,
            tc: 0.01,
            tnc: 0.01,
            tb: 0.1,
            nmax: None,
            seed: 0,
            minimize: false,
            keep_heuristic: false,
            isi_expansion: IsiExpansion::CauseVariables,
        }
    }
}

impl IdentifyOptions {
    pub fn beam_config(&self) -> BeamConfig {
        let stochastic = match self.stochastic {
            StochasticKind::Off => StochasticMode::Off,
            StochasticKind::Naive => StochasticMode::Naive {
                samples: self.samples,
            },
            StochasticKind::Lucb => StochasticMode::Lucb(LucbConfig {
                batch_size: self.batch,
                epsilon: self.epsilon,
                t_c: self.tc,
                t_nc: self.tnc,
                t_b: self.tb,
                n_max: self.nmax,
                samples_per_arm: self.samples,
                beam: self.beam,
                ..LucbConfig::default()
            }),
        };
        BeamConfig {
            beam_size: self.beam,
            max_steps: self.max_steps,
            early_stop: self.early_stop,
            epsilon: self.epsilon,
            stochastic,
            keep_heuristic: self.keep_heuristic,
            seed: self.seed,
        }
    }
}

/// Causal graph handed to the sub-instance identifier: parent lists per
/// variable and the variables the first instance is made of.
#[derive(Clone, Copy, Debug)]
pub struct Graph<'a> {
    pub parents: &'a [Vec<VarId>],
    pub roots: &'a [VarId],
}

/// Runs the configured identifier on a prepared space and oracle.
pub fn identify_with(
    space: &SearchSpace,
    oracle: &dyn Oracle,
    graph: Option<Graph<'_>>,
    opts: &IdentifyOptions,
) -> Result<(Vec<CauseResult>, SearchStats)> {
    let heuristic = Heuristic::new(
        opts.heuristic,
        space,
        opts.seed,
        oracle.observes_downstream(),
    )?;
    let cfg = opts.beam_config();
    let (causes, mut stats) = match opts.algorithm {
        Algorithm::Base => identify_causes(space, oracle, &heuristic, &cfg)?,
        Algorithm::Isi => {
            let g = graph.ok_or_else(|| {
                Error::InvalidConfig("sub-instance search needs a causal graph".into())
            })?;
            identify_causes_isi(
                space,
                g.parents,
                g.roots,
                oracle,
                &heuristic,
                &cfg,
                opts.isi_expansion,
            )?
        }
    };
    if !opts.minimize {
        return Ok((causes, stats));
    }
    let (causes, more) = minimize_causes(&causes, space, oracle, &cfg)?;
    stats.merge(&more);
    Ok((causes, stats))
}

/// A system to identify causes in.
#[derive(Clone, Debug)]
pub enum Model {
    Explicit(Scm),
    Noisy(Scm, NoiseModel),
    BlackBox(SmkBlackBox),
}

impl Model {
    pub fn from_builtin(b: Builtin) -> Result<Model> {
        Ok(match b {
            Builtin::SmkBlackbox(k) => Model::BlackBox(benchmarks::smk_blackbox(k)),
            Builtin::SmkNoisy(k, rate) => {
                let (scm, noise) = benchmarks::smk_noisy(k, rate)?;
                Model::Noisy(scm, noise)
            }
            other => Model::Explicit(other.scm()?),
        })
    }

    /// The model whose exogenous layout contexts refer to.
    pub fn scm(&self) -> &Scm {
        match self {
            Model::Explicit(s) | Model::Noisy(s, _) => s,
            Model::BlackBox(b) => b.model(),
        }
    }

    pub fn space(&self, ctx: &Context) -> Result<SearchSpace> {
        match self {
            Model::Explicit(s) | Model::Noisy(s, _) => SearchSpace::from_scm(s, ctx),
            Model::BlackBox(b) => b.space(ctx),
        }
    }

    /// Runs `f` with this model's oracle in `ctx`, and its graph when it has one.
    pub fn with_oracle<T>(
        &self,
        ctx: &Context,
        f: impl FnOnce(&dyn Oracle, Option<Graph<'_>>) -> Result<T>,
    ) -> Result<T> {
        match self {
            Model::Explicit(s) => {
                let roots = s.target_parents();
                let g = Graph {
                    parents: s.parent_map(),
                    roots: &roots,
                };
                f(&ScmOracle::new(s, ctx)?, Some(g))
            }
            Model::Noisy(s, noise) => {
                let roots = s.target_parents();
                let g = Graph {
                    parents: s.parent_map(),
                    roots: &roots,
                };
                f(&NoisyScmOracle::new(s, ctx, *noise)?, Some(g))
            }
            Model::BlackBox(b) => f(&b.oracle(ctx)?, None),
        }
    }

    /// The same oracle with noise removed.
    pub fn with_clean_oracle<T>(
        &self,
        ctx: &Context,
        f: impl FnOnce(&dyn Oracle) -> Result<T>,
    ) -> Result<T> {
        match self {
            Model::Explicit(s) | Model::Noisy(s, _) => f(&ScmOracle::new(s, ctx)?),
            Model::BlackBox(b) => f(&b.oracle(ctx)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauseRecord {
    pub cause: Vec<String>,
    pub values: Vec<Value>,
    pub contingency: Vec<String>,
    pub depth: usize,
}

pub fn cause_records(space: &SearchSpace, causes: &[CauseResult]) -> Vec<CauseRecord> {
    exact::reference_entries(space, causes)
        .into_iter()
        .zip(causes)
        .map(|(r, c)| CauseRecord {
            cause: r.cause,
            values: r.values,
            contingency: r.contingency,
            depth: c.depth_found,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub options: IdentifyOptions,
    /// Exogenous value indices.
    pub context: Vec<u32>,
    pub causes: Vec<CauseRecord>,
    pub stats: SearchStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

/// Identifies causes of `model` in `ctx`. The report carries the wall-clock
/// time of the identifier call.
pub fn run_identify(
    model: &Model,
    name: &str,
    ctx: &Context,
    opts: &IdentifyOptions,
) -> Result<(RunReport, Vec<CauseResult>)> {
    let space = model.space(ctx)?;
    let start = Instant::now();
    let (causes, stats) = model.with_oracle(ctx, |oracle, graph| {
        identify_with(&space, oracle, graph, opts)
    })?;
    let runtime = start.elapsed().as_secs_f64();
    let report = RunReport {
        model: name.to_string(),
        options: opts.clone(),
        context: ctx.values().to_vec(),
        causes: cause_records(&space, &causes),
        stats,
        runtime_s: Some(runtime),
    };
    Ok((report, causes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub model: String,
    pub context: Vec<u32>,
    pub max_size: usize,
    pub causes: Vec<ReferenceCause>,
}

/// Brute-force reference causes of `model` in `ctx`, noise removed.
pub fn run_exact(
    model: &Model,
    name: &str,
    ctx: &Context,
    max_size: usize,
    budget: u128,
) -> Result<(ExactReport, Vec<CauseResult>)> {
    let space = model.space(ctx)?;
    let causes = model.with_clean_oracle(ctx, |o| {
        exact::enumerate_causes(&space, o, max_size, budget)
    })?;
    let report = ExactReport {
        model: name.to_string(),
        context: ctx.values().to_vec(),
        max_size,
        causes: exact::reference_entries(&space, &causes),
    };
    Ok((report, causes))
}

/// Reads a context given as a JSON object of exogenous names to values, or
/// as an array of values in declaration order.
pub fn parse_context(scm: &Scm, text: &str) -> Result<Context> {
    let json: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let exo = scm.exogenous();
    let lookup = |i: usize, v: &serde_json::Value| -> Result<u32> {
        let value: Value =
            serde_json::from_value(v.clone()).map_err(|e| Error::Schema(e.to_string()))?;
        exo[i]
            .domain
            .index_of(value)
            .ok_or_else(|| Error::ValueOutsideDomain {
                variable: exo[i].name.clone(),
                value: value.to_string(),
            })
    };
    let values = match &json {
        serde_json::Value::Array(items) => {
            if items.len() != exo.len() {
                return Err(Error::Schema(format!(
                    "context has {} values, model has {} exogenous variables",
                    items.len(),
                    exo.len()
                )));
            }
            items
                .iter()
                .enumerate()
                .map(|(i, v)| lookup(i, v))
                .collect::<Result<Vec<_>>>()?
        }
        serde_json::Value::Object(map) => {
            let mut values = vec![None; exo.len()];
            for (name, v) in map {
                let i = scm.exo(name)?;
                values[i] = Some(lookup(i, v)?);
            }
            values
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    v.ok_or_else(|| Error::Schema(format!("context misses `{}`", exo[i].name)))
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => {
            return Err(Error::Schema(
                "context must be an array or an object".into(),
            ))
        }
    };
    Context::new(scm, values)
}
