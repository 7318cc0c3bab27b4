//! Experiment grids over the SMK family: runs every cell on sampled
//! contexts, scores the results and writes CSV tables.
//!
//! Files written by [`ExperimentOutcome::write`]:
//!
//! * `runs.csv`: one row per cell and context with columns
//!   `scm,k,algorithm,beam,stochastic_mode,samples,batch,seed,context_id,
//!   precision,recall,f1,missed,overshoot,runtime_s,oracle_calls,n_causes`
//! * `summary.csv`: one row per cell, mean, median, extremes and quartiles
//!   of every metric
//! * `f1_vs_beam.csv`, `runtime_vs_beam.csv`, `runtime_vs_k.csv`
//! * `accuracy.csv` for smallest-cause grids
//! * `errors.csv` when some runs failed

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{self, Builtin, DEFAULT_NOISE};
use crate::error::{Error, Result};
use crate::exact::{self, DEFAULT_EXACT_BUDGET};
use crate::metrics::{self, F1Mode, Summary};
use crate::mix_seed;
use crate::report::{identify_with, Algorithm, IdentifyOptions, Model, StochasticKind};
use crate::scm::{Context, VarId};
use crate::search::{minimize_causes, mutually_minimal, BeamConfig, CauseResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScmKind {
    #[default]
    Smk,
    SmkNonboolean,
    SmkBlackbox,
    SmkNoisy,
}

impl ScmKind {
    pub fn name(self) -> &'static str {
        match self {
            ScmKind::Smk => "smk",
            ScmKind::SmkNonboolean => "smk-nonboolean",
            ScmKind::SmkBlackbox => "smk-blackbox",
            ScmKind::SmkNoisy => "smk-noisy",
        }
    }

    pub fn builtin(self, k: usize, noise: f64) -> Builtin {
        match self {
            ScmKind::Smk => Builtin::Smk(k),
            ScmKind::SmkNonboolean => Builtin::SmkNonboolean(k),
            ScmKind::SmkBlackbox => Builtin::SmkBlackbox(k),
            ScmKind::SmkNoisy => Builtin::SmkNoisy(k, noise),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Find every cause; score against a reference set.
    #[default]
    All,
    /// Stop at the first productive level; score the size of the smallest
    /// cause found.
    Smallest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentGrid {
    pub scm: ScmKind,
    pub attackers: Vec<usize>,
    pub beams: Vec<i64>,
    pub algorithms: Vec<Algorithm>,
    pub stochastic: Vec<StochasticKind>,
    pub seeds: Vec<u64>,
    pub contexts: usize,
    pub context_seed: u64,
    pub noise: f64,
    pub task: Task,
    pub f1_mode: F1Mode,
    pub reference_max_size: usize,
    pub reference_budget: u128,
    /// Settings shared by every cell. Algorithm, beam, stochastic mode and
    /// seed are taken from the cell.
    pub options: IdentifyOptions,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            scm: ScmKind::Smk,
            attackers: vec![2],
            beams: vec![25],
            algorithms: vec![Algorithm::Base],
            stochastic: vec![StochasticKind::Off],
            seeds: vec![0],
            contexts: 20,
            context_seed: 0,
            noise: DEFAULT_NOISE,
            task: Task::All,
            f1_mode: F1Mode::Harmonic,
            reference_max_size: 5,
            reference_budget: DEFAULT_EXACT_BUDGET,
            options: IdentifyOptions::default(),
        }
    }
}

/// One fully specified configuration of a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub k: usize,
    pub algorithm: Algorithm,
    pub stochastic: StochasticKind,
    pub beam: i64,
    pub seed: u64,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("attackers", self.attackers.is_empty()),
            ("beams", self.beams.is_empty()),
            ("algorithms", self.algorithms.is_empty()),
            ("stochastic", self.stochastic.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("grid has no `{name}`")));
        }
        if self.contexts == 0 {
            return Err(Error::InvalidConfig(
                "grid needs at least one context".into(),
            ));
        }
        if self.attackers.contains(&0) {
            return Err(Error::InvalidConfig("at least one attacker".into()));
        }
        for cell in self.cells() {
            self.cell_options(&cell).beam_config().validate()?;
        }
        Ok(())
    }

    /// Cells ordered by attackers, algorithm, stochastic mode, beam, seed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &k in &self.attackers {
            for &algorithm in &self.algorithms {
                for &stochastic in &self.stochastic {
                    for &beam in &self.beams {
                        for &seed in &self.seeds {
                            out.push(Cell {
                                k,
                                algorithm,
                                stochastic,
                                beam,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn cell_options(&self, cell: &Cell) -> IdentifyOptions {
        IdentifyOptions {
            algorithm: cell.algorithm,
            beam: cell.beam,
            stochastic: cell.stochastic,
            seed: cell.seed,
            early_stop: self.options.early_stop || self.task == Task::Smallest,
            ..self.options.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRow {
    pub scm: String,
    pub k: usize,
    pub algorithm: Algorithm,
    pub beam: i64,
    pub stochastic_mode: StochasticKind,
    pub samples: u64,
    pub batch: u64,
    pub seed: u64,
    pub context_id: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub missed: Option<f64>,
    pub overshoot: Option<f64>,
    pub runtime_s: f64,
    pub oracle_calls: u64,
    pub n_causes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub scm: String,
    pub k: usize,
    pub algorithm: Algorithm,
    pub beam: i64,
    pub stochastic_mode: StochasticKind,
    pub seed: u64,
    pub context_id: usize,
    pub sd: bool,
    pub dk: bool,
    pub cause_size: Option<usize>,
    pub expected_size: usize,
    pub accuracy: f64,
    pub runtime_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub cell: usize,
    pub context_id: usize,
    pub message: String,
}

/// Where a context's reference set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    Exact,
    UnionMinimized,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reference {
    pub k: usize,
    pub context_id: usize,
    pub source: ReferenceSource,
    pub causes: Vec<Vec<VarId>>,
}

/// Raw output of one identifier run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub cell: usize,
    pub context_id: usize,
    pub causes: Vec<CauseResult>,
    pub runtime_s: f64,
    pub oracle_calls: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutcome {
    pub cells: Vec<Cell>,
    pub rows: Vec<RunRow>,
    pub accuracy: Vec<AccuracyRow>,
    pub references: Vec<Reference>,
    pub errors: Vec<ErrorRow>,
}

/// Seed owned by the run of `cell` on context `context_id`.
pub fn run_seed(cell_seed: u64, cell: usize, context_id: usize) -> u64 {
    mix_seed(mix_seed(cell_seed, cell as u64), context_id as u64)
}

fn contexts_for(grid: &ExperimentGrid, model: &Model, k: usize) -> Result<Vec<Context>> {
    benchmarks::sample_contexts(
        model.scm(),
        grid.contexts,
        mix_seed(grid.context_seed, k as u64),
    )
}

/// Runs every cell on every context, with at most `jobs` worker threads
/// (0 picks the number of cores).
pub fn run_experiment(grid: &ExperimentGrid, jobs: usize) -> Result<ExperimentOutcome> {
    grid.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| run_in_pool(grid))
}

struct World {
    k: usize,
    model: Model,
    contexts: Vec<Context>,
}

fn run_in_pool(grid: &ExperimentGrid) -> Result<ExperimentOutcome> {
    let cells = grid.cells();
    let mut worlds = Vec::new();
    for &k in &grid.attackers {
        if worlds.iter().any(|w: &World| w.k == k) {
            continue;
        }
        let model = Model::from_builtin(grid.scm.builtin(k, grid.noise))?;
        let contexts = contexts_for(grid, &model, k)?;
        worlds.push(World { k, model, contexts });
    }
    let world = |k: usize| worlds.iter().find(|w| w.k == k).unwrap();

    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, _)| (0..grid.contexts).map(move |j| (c, j)))
        .collect();
    let results: Vec<Result<RunOutput>> = jobs
        .par_iter()
        .map(|&(c, j)| {
            let cell = &cells[c];
            let w = world(cell.k);
            let mut opts = grid.cell_options(cell);
            opts.seed = run_seed(cell.seed, c, j);
            let ctx = &w.contexts[j];
            let space = w.model.space(ctx)?;
            let start = std::time::Instant::now();
            let (causes, stats) = w
                .model
                .with_oracle(ctx, |o, g| identify_with(&space, o, g, &opts))?;
            Ok(RunOutput {
                cell: c,
                context_id: j,
                causes,
                runtime_s: start.elapsed().as_secs_f64(),
                oracle_calls: stats.oracle_calls,
            })
        })
        .collect();

    let mut outputs = Vec::new();
    let mut errors = Vec::new();
    for (&(c, j), r) in jobs.iter().zip(results) {
        match r {
            Ok(o) => outputs.push(o),
            Err(e) => errors.push(ErrorRow {
                cell: c,
                context_id: j,
                message: e.to_string(),
            }),
        }
    }

    let mut outcome = ExperimentOutcome {
        cells: cells.clone(),
        errors,
        ..ExperimentOutcome::default()
    };
    match grid.task {
        Task::All => {
            let keys: Vec<(usize, usize)> = worlds
                .iter()
                .flat_map(|w| (0..w.contexts.len()).map(move |j| (w.k, j)))
                .collect();
            let refs: Vec<Result<Reference>> = keys
                .par_iter()
                .map(|&(k, j)| {
                    let found = outputs
                        .iter()
                        .filter(|o| cells[o.cell].k == k && o.context_id == j);
                    build_reference(grid, &world(k).model, &world(k).contexts[j], k, j, found)
                })
                .collect();
            for r in refs {
                outcome.references.push(r?);
            }
            for o in &outputs {
                let cell = &cells[o.cell];
                let reference = outcome
                    .references
                    .iter()
                    .find(|r| r.k == cell.k && r.context_id == o.context_id)
                    .unwrap();
                let s = metrics::score(
                    &exact::cause_sets(&o.causes),
                    &reference.causes,
                    grid.f1_mode,
                );
                let mut row = base_row(grid, cell, o);
                row.precision = Some(s.precision);
                row.recall = Some(s.recall);
                row.f1 = Some(s.f1);
                row.missed = Some(s.missed);
                row.overshoot = Some(s.overshoot);
                outcome.rows.push(row);
            }
        }
        Task::Smallest => {
            for o in &outputs {
                let cell = &cells[o.cell];
                outcome.rows.push(base_row(grid, cell, o));
                if grid.scm == ScmKind::SmkNonboolean {
                    continue;
                }
                let w = world(cell.k);
                let (sd, dk) = benchmarks::smk_facts(w.model.scm(), &w.contexts[o.context_id])?;
                let expected = metrics::expected_smallest_size(sd, dk)?;
                let size = o.causes.iter().map(|c| c.cause_vars.len()).min();
                let accuracy = match size {
                    Some(s) => metrics::smallest_cause_accuracy(s, sd, dk)?,
                    None => 0.0,
                };
                outcome.accuracy.push(AccuracyRow {
                    scm: grid.scm.name().into(),
                    k: cell.k,
                    algorithm: cell.algorithm,
                    beam: cell.beam,
                    stochastic_mode: cell.stochastic,
                    seed: cell.seed,
                    context_id: o.context_id,
                    sd,
                    dk,
                    cause_size: size,
                    expected_size: expected,
                    accuracy,
                    runtime_s: o.runtime_s,
                });
            }
        }
    }
    Ok(outcome)
}

fn base_row(grid: &ExperimentGrid, cell: &Cell, o: &RunOutput) -> RunRow {
    RunRow {
        scm: grid.scm.name().into(),
        k: cell.k,
        algorithm: cell.algorithm,
        beam: cell.beam,
        stochastic_mode: cell.stochastic,
        samples: grid.options.samples,
        batch: grid.options.batch,
        seed: cell.seed,
        context_id: o.context_id,
        precision: None,
        recall: None,
        f1: None,
        missed: None,
        overshoot: None,
        runtime_s: o.runtime_s,
        oracle_calls: o.oracle_calls,
        n_causes: o.causes.len(),
    }
}

/// Exact causes when the instance fits the budget, otherwise the union of
/// everything identified on this context, reduced to minimal causes.
pub fn build_reference<'a>(
    grid: &ExperimentGrid,
    model: &Model,
    ctx: &Context,
    k: usize,
    context_id: usize,
    found: impl Iterator<Item = &'a RunOutput>,
) -> Result<Reference> {
    let space = model.space(ctx)?;
    match model.with_clean_oracle(ctx, |o| {
        exact::enumerate_causes(&space, o, grid.reference_max_size, grid.reference_budget)
    }) {
        Ok(causes) => {
            return Ok(Reference {
                k,
                context_id,
                source: ReferenceSource::Exact,
                causes: exact::cause_sets(&causes),
            })
        }
        Err(e) if e.is_budget() => {}
        Err(e) => return Err(e),
    }
    let causes = union_minimize(
        model,
        ctx,
        found.flat_map(|o| o.causes.iter().cloned()),
        grid.context_seed,
    )?;
    Ok(Reference {
        k,
        context_id,
        source: ReferenceSource::UnionMinimized,
        causes: exact::cause_sets(&causes),
    })
}

/// Pools causes found by several runs, drops non-minimal ones and shrinks
/// each survivor to a minimal cause with the noise-free oracle.
pub fn union_minimize(
    model: &Model,
    ctx: &Context,
    causes: impl IntoIterator<Item = CauseResult>,
    seed: u64,
) -> Result<Vec<CauseResult>> {
    let mut pooled: Vec<CauseResult> = Vec::new();
    for c in causes {
        if !pooled.iter().any(|p| p.cause_vars == c.cause_vars) {
            pooled.push(c);
        }
    }
    pooled.sort_by(|a, b| a.cause_vars.cmp(&b.cause_vars));
    let pooled = mutually_minimal(pooled);
    let space = model.space(ctx)?;
    let cfg = BeamConfig {
        seed,
        ..BeamConfig::default()
    };
    let (shrunk, _) =
        model.with_clean_oracle(ctx, |o| minimize_causes(&pooled, &space, o, &cfg))?;
    let mut out: Vec<CauseResult> = Vec::new();
    for c in shrunk {
        if !out.iter().any(|p| p.cause_vars == c.cause_vars) {
            out.push(c);
        }
    }
    out.sort_by(|a, b| a.cause_vars.cmp(&b.cause_vars));
    Ok(mutually_minimal(out))
}

const SUMMARY_METRICS: [&str; 9] = [
    "precision",
    "recall",
    "f1",
    "missed",
    "overshoot",
    "runtime_s",
    "oracle_calls",
    "n_causes",
    "accuracy",
];

fn metric(row: &RunRow, name: &str) -> Option<f64> {
    match name {
        "precision" => row.precision,
        "recall" => row.recall,
        "f1" => row.f1,
        "missed" => row.missed,
        "overshoot" => row.overshoot,
        "runtime_s" => Some(row.runtime_s),
        "oracle_calls" => Some(row.oracle_calls as f64),
        "n_causes" => Some(row.n_causes as f64),
        _ => None,
    }
}

fn push_summary(record: &mut Vec<String>, s: Option<Summary>) {
    match s {
        Some(s) => {
            record.extend([s.mean, s.median, s.min, s.max, s.q1, s.q3].map(|x| x.to_string()))
        }
        None => record.extend(std::iter::repeat_n(String::new(), 6)),
    }
}

fn summary_header(prefix: &[&str], metrics: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for m in metrics {
        for stat in ["mean", "median", "min", "max", "q1", "q3"] {
            h.push(format!("{m}_{stat}"));
        }
    }
    h
}

impl ExperimentOutcome {
    fn cell_rows(&self, c: &Cell) -> impl Iterator<Item = &RunRow> {
        let c = c.clone();
        self.rows.iter().filter(move |r| {
            r.k == c.k
                && r.algorithm == c.algorithm
                && r.stochastic_mode == c.stochastic
                && r.beam == c.beam
                && r.seed == c.seed
        })
    }

    fn cell_accuracy(&self, c: &Cell) -> Vec<f64> {
        self.accuracy
            .iter()
            .filter(|r| {
                r.k == c.k
                    && r.algorithm == c.algorithm
                    && r.stochastic_mode == c.stochastic
                    && r.beam == c.beam
                    && r.seed == c.seed
            })
            .map(|r| r.accuracy)
            .collect()
    }

    /// Mean of a metric over every row of the matching cells.
    pub fn mean_by(&self, filter: impl Fn(&RunRow) -> bool, name: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| filter(r))
            .filter_map(|r| metric(r, name))
            .collect();
        metrics::summarize(&v).map(|s| s.mean)
    }

    pub fn write(&self, dir: &Path, scm: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("runs.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(RUN_COLUMNS)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        w.write_record(summary_header(
            &[
                "scm",
                "k",
                "algorithm",
                "beam",
                "stochastic_mode",
                "seed",
                "n",
            ],
            &SUMMARY_METRICS,
        ))?;
        for c in &self.cells {
            let rows: Vec<&RunRow> = self.cell_rows(c).collect();
            let mut rec = vec![
                scm.to_string(),
                c.k.to_string(),
                c.algorithm.to_string(),
                c.beam.to_string(),
                c.stochastic.to_string(),
                c.seed.to_string(),
                rows.len().to_string(),
            ];
            for m in SUMMARY_METRICS {
                let v: Vec<f64> = if m == "accuracy" {
                    self.cell_accuracy(c)
                } else {
                    rows.iter().filter_map(|r| metric(r, m)).collect()
                };
                push_summary(&mut rec, metrics::summarize(&v));
            }
            w.write_record(rec)?;
        }
        w.flush()?;

        self.write_vs_beam(dir, scm, "f1_vs_beam.csv", "f1")?;
        self.write_vs_beam(dir, scm, "runtime_vs_beam.csv", "runtime_s")?;
        self.write_vs_k(dir, scm)?;

        if !self.accuracy.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("accuracy.csv"))?;
            for r in &self.accuracy {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        if !self.errors.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("errors.csv"))?;
            for r in &self.errors {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Ok(())
    }

    fn groups<K: Ord + Clone>(&self, key: impl Fn(&RunRow) -> K) -> BTreeMap<K, Vec<&RunRow>> {
        let mut map: BTreeMap<K, Vec<&RunRow>> = BTreeMap::new();
        for r in &self.rows {
            map.entry(key(r)).or_default().push(r);
        }
        map
    }

    fn write_vs_beam(&self, dir: &Path, scm: &str, file: &str, m: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join(file))?;
        w.write_record(summary_header(
            &["scm", "k", "algorithm", "stochastic_mode", "beam", "n"],
            &[m],
        ))?;
        let groups = self.groups(|r| {
            (
                r.k,
                r.algorithm.to_string(),
                r.stochastic_mode.to_string(),
                r.beam,
            )
        });
        for ((k, alg, mode, beam), rows) in groups {
            let v: Vec<f64> = rows.iter().filter_map(|r| metric(r, m)).collect();
            let mut rec = vec![
                scm.to_string(),
                k.to_string(),
                alg,
                mode,
                beam.to_string(),
                v.len().to_string(),
            ];
            push_summary(&mut rec, metrics::summarize(&v));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_vs_k(&self, dir: &Path, scm: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join("runtime_vs_k.csv"))?;
        w.write_record(summary_header(
            &["scm", "algorithm", "stochastic_mode", "beam", "k", "n"],
            &["runtime_s"],
        ))?;
        let groups = self.groups(|r| {
            (
                r.algorithm.to_string(),
                r.stochastic_mode.to_string(),
                r.beam,
                r.k,
            )
        });
        for ((alg, mode, beam, k), rows) in groups {
            let v: Vec<f64> = rows.iter().map(|r| r.runtime_s).collect();
            let mut rec = vec![
                scm.to_string(),
                alg,
                mode,
                beam.to_string(),
                k.to_string(),
                v.len().to_string(),
            ];
            push_summary(&mut rec, metrics::summarize(&v));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const RUN_COLUMNS: [&str; 17] = [
    "scm",
    "k",
    "algorithm",
    "beam",
    "stochastic_mode",
    "samples",
    "batch",
    "seed",
    "context_id",
    "precision",
    "recall",
    "f1",
    "missed",
    "overshoot",
    "runtime_s",
    "oracle_calls",
    "n_causes",
];
