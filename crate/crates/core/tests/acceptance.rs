//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Failing criteria are reported but only fail the process when
//! `ACTCAUSE_STRICT_ACCEPTANCE` is set.

mod common;

use std::time::Instant;

use actcause::benchmarks::{self, smk_showcase_context};
use actcause::exact::{self, DEFAULT_EXACT_BUDGET};
use actcause::harness::{run_experiment, ExperimentGrid, ExperimentOutcome, RunRow, ScmKind, Task};
use actcause::metrics::{self, F1Mode};
use actcause::report::{run_identify, Algorithm, IdentifyOptions, Model, StochasticKind};
use actcause::scm::{check_hp_cause, DEFAULT_AC3_BUDGET};
use actcause::search::CauseResult;
use actcause::{Context, HeuristicKind, Scm, ScmOracle, SearchSpace};

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: String) -> Result<String, String> {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(start: Instant, limit: f64, msg: String) -> Result<String, String> {
    let t = start.elapsed().as_secs_f64();
    ensure(t < limit, format!("{msg}; {t:.2}s of {limit}s"))
}

fn named(space: &SearchSpace, causes: &[CauseResult]) -> Vec<(Vec<String>, Vec<String>)> {
    let mut v: Vec<_> = causes
        .iter()
        .map(|c| {
            (
                space.describe_vars(&c.cause_vars),
                space.describe_vars(&c.contingency_vars),
            )
        })
        .collect();
    v.sort();
    v
}

fn showcase_expected() -> Vec<(Vec<String>, Vec<String>)> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let w = s(&["DK3"]);
    let mut v = vec![
        (s(&["DK"]), vec![]),
        (s(&["DK2"]), w.clone()),
        (s(&["GK2"]), w.clone()),
        (s(&["GP2"]), w.clone()),
        (s(&["FS2", "FN2"]), w.clone()),
        (s(&["FF2", "FDB2"]), w),
    ];
    v.sort();
    v
}

fn rock_throwing_trace() -> Result<String, String> {
    let start = Instant::now();
    let model = Model::Explicit(benchmarks::rock_throwing());
    let ctx = Context::from_bools(model.scm(), &[true, true]).map_err(err)?;
    let opts = IdentifyOptions {
        beam: 3,
        ..IdentifyOptions::default()
    };
    let (report, causes) = run_identify(&model, "rock-throwing", &ctx, &opts).map_err(err)?;
    let space = model.space(&ctx).map_err(err)?;
    let first: Vec<String> = actcause::search::init_candidates(&space)
        .iter()
        .map(|e| model.scm().describe(e))
        .collect();
    let got = named(&space, &causes);
    let s = |x: &str| vec![x.to_string()];
    let want = vec![(s("SH"), s("BH")), (s("ST"), s("BH"))];
    let values_ok = report
        .causes
        .iter()
        .all(|c| c.values == vec![actcause::Value::Bool(false)]);
    let mut first_sorted = first.clone();
    first_sorted.sort();
    let want_first = ["{BH=true}", "{BT=false}", "{SH=false}", "{ST=false}"];
    ensure(
        got == want
            && values_ok
            && first_sorted == want_first
            && report.stats.nodes_per_depth[0] == 4,
        format!("causes {got:?}, first candidates {first:?}"),
    )
    .and_then(|m| within(start, 0.1, m))
}

fn smk_showcase_base() -> Result<String, String> {
    let start = Instant::now();
    let model = Model::Explicit(benchmarks::smk_base(3));
    let ctx = smk_showcase_context(model.scm()).map_err(err)?;
    let opts = IdentifyOptions {
        beam: 200,
        max_steps: 6,
        ..IdentifyOptions::default()
    };
    let (report, causes) = run_identify(&model, "smk:3", &ctx, &opts).map_err(err)?;
    let space = model.space(&ctx).map_err(err)?;
    let nodes = &report.stats.nodes_per_depth;
    let d2 = nodes.get(1).copied().unwrap_or(0) as f64;
    ensure(
        named(&space, &causes) == showcase_expected()
            && nodes[0] == 35
            && (d2 - 1717.0).abs() <= 0.02 * 1717.0,
        format!(
            "{} causes, depth-1 {} nodes, depth-2 {} nodes",
            causes.len(),
            nodes[0],
            d2
        ),
    )
    .and_then(|m| within(start, 30.0, m))
}

fn smk_showcase_isi() -> Result<String, String> {
    let start = Instant::now();
    let model = Model::Explicit(benchmarks::smk_base(3));
    let ctx = smk_showcase_context(model.scm()).map_err(err)?;
    let opts = IdentifyOptions {
        algorithm: Algorithm::Isi,
        ..IdentifyOptions::default()
    };
    let (report, causes) = run_identify(&model, "smk:3", &ctx, &opts).map_err(err)?;
    let space = model.space(&ctx).map_err(err)?;
    ensure(
        named(&space, &causes) == showcase_expected(),
        format!(
            "{} causes in {} sub-instance runs",
            causes.len(),
            report.stats.isi_steps
        ),
    )
    .and_then(|m| within(start, 10.0, m))
}

fn oracle_equivalence() -> Result<String, String> {
    let start = Instant::now();
    let grid = ExperimentGrid {
        attackers: vec![2],
        beams: vec![-1],
        contexts: 20,
        context_seed: 11,
        reference_max_size: 5,
        options: IdentifyOptions {
            max_steps: 5,
            ..IdentifyOptions::default()
        },
        ..ExperimentGrid::default()
    };
    let out = run_experiment(&grid, 1).map_err(err)?;
    let exact_refs = out
        .references
        .iter()
        .all(|r| r.source == actcause::harness::ReferenceSource::Exact);
    let perfect = out.rows.iter().filter(|r| r.f1 == Some(1.0)).count();
    ensure(
        exact_refs && out.errors.is_empty() && perfect == 20,
        format!("{perfect}/20 contexts with F1 = 1"),
    )
    .and_then(|m| within(start, 60.0, m))
}

/// Every identifier on rock-throwing and on sampled SMK worlds.
fn ac_soundness() -> Result<String, String> {
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut non_minimal = 0usize;
    let mut record = |oracle: &dyn actcause::Oracle, v_star: &[u32], causes: &[CauseResult]| {
        checked += causes.len();
        violations += common::ac2_violations(oracle, v_star, causes);
        if !common::mutually_minimal(causes) {
            non_minimal += 1;
        }
    };
    let variants: Vec<IdentifyOptions> = {
        let base = IdentifyOptions {
            seed: 5,
            ..IdentifyOptions::default()
        };
        let mut v = Vec::new();
        for beam in [1, 3, 12, 25] {
            for algorithm in [Algorithm::Base, Algorithm::Isi] {
                for minimize in [false, true] {
                    v.push(IdentifyOptions {
                        beam,
                        algorithm,
                        minimize,
                        ..base.clone()
                    });
                }
            }
        }
        for heuristic in [
            HeuristicKind::Changed,
            HeuristicKind::Occam,
            HeuristicKind::Random,
        ] {
            v.push(IdentifyOptions {
                beam: 5,
                heuristic,
                ..base.clone()
            });
        }
        v.push(IdentifyOptions {
            beam: 5,
            early_stop: true,
            ..base.clone()
        });
        v.push(IdentifyOptions {
            beam: -1,
            max_steps: 3,
            ..base.clone()
        });
        v
    };

    let mut worlds: Vec<(Model, Vec<Context>)> = Vec::new();
    let rt = benchmarks::rock_throwing();
    let rt_ctx = Context::from_bools(&rt, &[true, true]).map_err(err)?;
    worlds.push((Model::Explicit(rt), vec![rt_ctx]));
    for b in ["smk:2", "smk:3", "smk-nonboolean:2", "smk-blackbox:2"] {
        let model = Model::from_builtin(b.parse().map_err(err)?).map_err(err)?;
        let ctxs = benchmarks::sample_contexts(model.scm(), 5, 3).map_err(err)?;
        worlds.push((model, ctxs));
    }
    for (model, ctxs) in &worlds {
        for ctx in ctxs {
            let space = model.space(ctx).map_err(err)?;
            for opts in &variants {
                if matches!(model, Model::BlackBox(_)) && opts.algorithm == Algorithm::Isi {
                    continue;
                }
                let (_, causes) = run_identify(model, "world", ctx, opts).map_err(err)?;
                model
                    .with_clean_oracle(ctx, |o| {
                        record(o, &space.v_star, &causes);
                        Ok(())
                    })
                    .map_err(err)?;
            }
        }
    }

    let mut exact_checked = 0usize;
    let mut exact_failures = 0usize;
    let mut exact_cases: Vec<(Scm, Vec<Context>, usize)> = vec![(
        benchmarks::rock_throwing(),
        vec![Context::from_bools(&benchmarks::rock_throwing(), &[true, true]).map_err(err)?],
        5,
    )];
    let smk = benchmarks::smk_base(2);
    let ctxs = benchmarks::sample_contexts(&smk, 4, 8).map_err(err)?;
    exact_cases.push((smk, ctxs, 4));
    for (scm, ctxs, max_size) in &exact_cases {
        for ctx in ctxs {
            let space = SearchSpace::from_scm(scm, ctx).map_err(err)?;
            let oracle = ScmOracle::new(scm, ctx).map_err(err)?;
            let causes = exact::enumerate_causes(&space, &oracle, *max_size, DEFAULT_EXACT_BUDGET)
                .map_err(err)?;
            for c in &causes {
                exact_checked += 1;
                let v = check_hp_cause(
                    scm,
                    ctx,
                    &c.cause(),
                    &c.contingency_vars,
                    DEFAULT_AC3_BUDGET,
                )
                .map_err(err)?;
                if !v.holds() {
                    exact_failures += 1;
                }
            }
            if !common::mutually_minimal(&causes) {
                non_minimal += 1;
            }
        }
    }
    ensure(
        violations == 0 && non_minimal == 0 && exact_failures == 0 && checked > 0,
        format!(
            "{checked} identified causes, {violations} AC2 violations, {non_minimal} non-minimal outputs, \
             {exact_checked} exact causes with {exact_failures} full-check failures"
        ),
    )
}

fn isi_precision() -> Result<String, String> {
    let mut runs = 0usize;
    let mut imperfect = 0usize;
    let mut causes_checked = 0usize;
    for k in [2, 3] {
        let scm = benchmarks::smk_base(k);
        let model = Model::Explicit(scm.clone());
        let ctxs = benchmarks::sample_contexts(&scm, 20, 100 + k as u64).map_err(err)?;
        for ctx in &ctxs {
            let opts = IdentifyOptions {
                algorithm: Algorithm::Isi,
                beam: 25,
                ..IdentifyOptions::default()
            };
            let (_, causes) = run_identify(&model, "smk", ctx, &opts).map_err(err)?;
            runs += 1;
            let mut correct = 0usize;
            for c in &causes {
                let v = check_hp_cause(
                    &scm,
                    ctx,
                    &c.cause(),
                    &c.contingency_vars,
                    DEFAULT_AC3_BUDGET,
                )
                .map_err(err)?;
                correct += v.holds() as usize;
            }
            causes_checked += causes.len();
            if correct != causes.len() {
                imperfect += 1;
            }
        }
    }
    ensure(
        imperfect == 0,
        format!("{runs} runs, {causes_checked} causes, {imperfect} runs below precision 1"),
    )
}

fn smallest_grid(
    algorithm: Algorithm,
    beams: Vec<i64>,
    k: usize,
    contexts: usize,
) -> Result<ExperimentOutcome, String> {
    let grid = ExperimentGrid {
        attackers: vec![k],
        algorithms: vec![algorithm],
        beams,
        contexts,
        context_seed: 21,
        task: Task::Smallest,
        ..ExperimentGrid::default()
    };
    run_experiment(&grid, 1).map_err(err)
}

fn mean_accuracy(out: &ExperimentOutcome, beam: i64) -> f64 {
    let v: Vec<f64> = out
        .accuracy
        .iter()
        .filter(|r| r.beam == beam)
        .map(|r| r.accuracy)
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn smallest_cause_accuracy() -> Result<String, String> {
    let mut isi_means = Vec::new();
    let mut base_means = Vec::new();
    let mut inversions = Vec::new();
    for k in [2, 4, 6] {
        let isi = smallest_grid(Algorithm::Isi, vec![25], k, 20)?;
        if !isi.errors.is_empty() || isi.accuracy.len() != 20 {
            return Err(format!("isi at k={k}: {} errors", isi.errors.len()));
        }
        isi_means.push(mean_accuracy(&isi, 25));
        let base = smallest_grid(Algorithm::Base, vec![1, 25, 50], k, 20)?;
        let m: Vec<f64> = [1, 25, 50]
            .iter()
            .map(|&b| mean_accuracy(&base, b))
            .collect();
        for w in m.windows(2) {
            if w[1] < w[0] {
                inversions.push(w[0] - w[1]);
            }
        }
        base_means.push(m);
    }
    ensure(
        isi_means.iter().all(|&m| m == 1.0)
            && inversions.len() <= 1
            && inversions.iter().all(|&d| d <= 0.05),
        format!("isi accuracy {isi_means:?}; base accuracy by beam 1/25/50 {base_means:?}"),
    )
}

fn beam_tradeoff() -> Result<String, String> {
    let beams = vec![1, 12, 25, 37, 50];
    let grid = ExperimentGrid {
        attackers: vec![2],
        beams: beams.clone(),
        contexts: 50,
        context_seed: 31,
        ..ExperimentGrid::default()
    };
    let out = run_experiment(&grid, 1).map_err(err)?;
    let f1: Vec<f64> = beams
        .iter()
        .map(|&b| out.mean_by(|r: &RunRow| r.beam == b, "f1").unwrap_or(0.0))
        .collect();
    let rt: Vec<f64> = beams
        .iter()
        .map(|&b| {
            out.mean_by(|r: &RunRow| r.beam == b, "runtime_s")
                .unwrap_or(0.0)
        })
        .collect();
    let monotone = rt.windows(2).all(|w| w[1] >= w[0]);
    ensure(
        f1[4] - f1[0] >= 0.2 && monotone,
        format!("mean f1 {f1:.3?}, mean runtime {rt:?}"),
    )
}

/// Least squares over the given feature rows.
fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = rows[0].len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (r, &t) in rows.iter().zip(y) {
        for i in 0..n {
            for j in 0..n {
                a[i][j] += r[i] * r[j];
            }
            a[i][n] += r[i] * t;
        }
    }
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

fn complexity_trend() -> Result<String, String> {
    let ks = [2usize, 4, 6, 8];
    let mut times = Vec::new();
    for &k in &ks {
        let out = smallest_grid(Algorithm::Base, vec![25], k, 20)?;
        let mut best = f64::INFINITY;
        // repeat to damp scheduler noise; keep the fastest mean
        for _ in 0..3 {
            let again = smallest_grid(Algorithm::Base, vec![25], k, 20)?;
            best = best.min(
                again
                    .mean_by(|_| true, "runtime_s")
                    .unwrap_or(f64::INFINITY),
            );
        }
        best = best.min(out.mean_by(|_| true, "runtime_s").unwrap_or(f64::INFINITY));
        times.push(best);
    }
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let quad = lstsq(
        &x.iter().map(|&k| vec![1.0, k, k * k]).collect::<Vec<_>>(),
        &times,
    );
    let quad_res: f64 = x
        .iter()
        .zip(&times)
        .map(|(&k, &t)| (quad[0] + quad[1] * k + quad[2] * k * k - t).powi(2))
        .sum::<f64>()
        .sqrt();
    let logs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ex = lstsq(&x.iter().map(|&k| vec![1.0, k]).collect::<Vec<_>>(), &logs);
    let exp_res: f64 = x
        .iter()
        .zip(&times)
        .map(|(&k, &t)| ((ex[0] + ex[1] * k).exp() - t).powi(2))
        .sum::<f64>()
        .sqrt();
    ensure(
        quad_res <= 0.5 * exp_res,
        format!("runtimes {times:?}; residual quadratic {quad_res:.2e}, exponential {exp_res:.2e}"),
    )
}

fn stochastic_evaluation() -> Result<String, String> {
    let beam = 12;
    let grid = |scm: ScmKind, stochastic: StochasticKind| ExperimentGrid {
        scm,
        attackers: vec![2],
        beams: vec![beam],
        stochastic: vec![stochastic],
        contexts: 20,
        context_seed: 41,
        noise: 0.01,
        seeds: vec![9],
        options: IdentifyOptions {
            epsilon: 0.3,
            samples: 20,
            batch: 10,
            tc: 0.01,
            tnc: 0.01,
            tb: 0.1,
            ..IdentifyOptions::default()
        },
        ..ExperimentGrid::default()
    };
    let det = run_experiment(&grid(ScmKind::Smk, StochasticKind::Off), 1).map_err(err)?;
    let naive = run_experiment(&grid(ScmKind::SmkNoisy, StochasticKind::Naive), 1).map_err(err)?;
    let median = |o: &ExperimentOutcome| {
        let v: Vec<f64> = o.rows.iter().filter_map(|r| r.f1).collect();
        metrics::summarize(&v).map(|s| s.median).unwrap_or(0.0)
    };
    let (md, mn) = (median(&det), median(&naive));

    let model = Model::from_builtin("smk-noisy:2:0.01".parse().map_err(err)?).map_err(err)?;
    let ctxs = benchmarks::sample_contexts(model.scm(), 20, 41).map_err(err)?;
    let mut converged = 0u64;
    let mut failures = 0u64;
    let mut deterministic = true;
    for (i, ctx) in ctxs.iter().enumerate() {
        let opts = IdentifyOptions {
            beam,
            stochastic: StochasticKind::Lucb,
            seed: 1000 + i as u64,
            ..grid(ScmKind::SmkNoisy, StochasticKind::Lucb).options
        };
        let (mut a, _) = run_identify(&model, "smk-noisy", ctx, &opts).map_err(err)?;
        converged += a.stats.lucb_converged;
        failures += a.stats.lucb_certificate_failures;
        if i < 3 {
            for stochastic in [StochasticKind::Lucb, StochasticKind::Naive] {
                let opts = IdentifyOptions {
                    stochastic,
                    ..opts.clone()
                };
                let (mut x, _) = run_identify(&model, "smk-noisy", ctx, &opts).map_err(err)?;
                let (mut y, _) = run_identify(&model, "smk-noisy", ctx, &opts).map_err(err)?;
                x.runtime_s = None;
                y.runtime_s = None;
                deterministic &=
                    serde_json::to_string(&x).unwrap() == serde_json::to_string(&y).unwrap();
            }
        }
        a.runtime_s = None;
    }
    ensure(
        (md - mn).abs() <= 0.15 && failures == 0 && deterministic,
        format!(
            "median f1 deterministic {md:.3}, naive {mn:.3}; {converged} converged bandit runs, \
             {failures} stop-condition violations; reruns identical: {deterministic}"
        ),
    )
}

fn heuristic_comparison() -> Result<String, String> {
    let model = Model::Explicit(benchmarks::smk_base(2));
    let ctxs = benchmarks::sample_contexts(model.scm(), 30, 51).map_err(err)?;
    let mut references = Vec::new();
    for ctx in &ctxs {
        let (_, causes) =
            actcause::report::run_exact(&model, "smk:2", ctx, 5, DEFAULT_EXACT_BUDGET)
                .map_err(err)?;
        references.push(common::sets(&causes));
    }
    let mut means = Vec::new();
    for h in [
        HeuristicKind::Positive,
        HeuristicKind::Occam,
        HeuristicKind::Negative,
        HeuristicKind::Constant,
    ] {
        let opts = IdentifyOptions {
            beam: 12,
            heuristic: h,
            ..IdentifyOptions::default()
        };
        let mut total = 0.0;
        for (ctx, reference) in ctxs.iter().zip(&references) {
            let (_, causes) = run_identify(&model, "smk:2", ctx, &opts).map_err(err)?;
            total += metrics::score(&common::sets(&causes), reference, F1Mode::Harmonic).f1;
        }
        means.push((h.name(), total / ctxs.len() as f64));
    }
    let good = [means[0].1, means[1].1];
    let bad = [means[2].1, means[3].1];
    ensure(
        good.iter().all(|g| bad.iter().all(|b| g > b)),
        format!("mean f1 {means:.3?}"),
    )
}

fn main() {
    let checks: Vec<(&str, Check)> = vec![
        ("rock-throwing golden trace", rock_throwing_trace),
        ("smk k=3 showcase, base search", smk_showcase_base),
        ("smk k=3 showcase, sub-instance search", smk_showcase_isi),
        (
            "oracle equivalence with exact enumeration",
            oracle_equivalence,
        ),
        ("AC soundness suite", ac_soundness),
        ("sub-instance precision", isi_precision),
        ("smallest-cause accuracy", smallest_cause_accuracy),
        ("beam-size tradeoff trend", beam_tradeoff),
        ("complexity trend", complexity_trend),
        ("stochastic evaluation", stochastic_evaluation),
        ("heuristic comparison", heuristic_comparison),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = check();
        let t = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS {name}: {msg} [{t:.2}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} [{t:.2}s]");
            }
        }
    }
    println!("{failed} criteria failed");
    if failed > 0 && std::env::var_os("ACTCAUSE_STRICT_ACCEPTANCE").is_some() {
        std::process::exit(1);
    }
}
