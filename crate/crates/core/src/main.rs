use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use actcause::benchmarks::{self, Builtin};
use actcause::exact::DEFAULT_EXACT_BUDGET;
use actcause::harness::{run_experiment, ExperimentGrid};
use actcause::report::{self, Algorithm, IdentifyOptions, Model, StochasticKind};
use actcause::search::IsiExpansion;
use actcause::{Context, Error, HeuristicKind, Scm};

#[derive(Parser)]
#[command(
    name = "actcause",
    version,
    about = "Identify actual causes in structural causal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify causes of the target in one context.
    Identify(IdentifyArgs),
    /// Enumerate every cause up to a size by brute force.
    Exact(ExactArgs),
    /// Write a builtin model as JSON.
    Gen(GenArgs),
    /// Run an experiment grid and write CSV tables.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// rock-throwing, smk:K, smk-nonboolean:K, smk-blackbox:K, smk-noisy:K[:RATE]
    #[arg(long, conflicts_with = "scm", required_unless_present = "scm")]
    builtin: Option<String>,
    /// Model JSON file.
    #[arg(long)]
    scm: Option<PathBuf>,
    /// Context JSON file (object of exogenous names or array of values).
    #[arg(long, conflicts_with_all = ["u", "showcase"])]
    context: Option<PathBuf>,
    /// Context given inline as JSON.
    #[arg(long, conflicts_with = "showcase")]
    u: Option<String>,
    /// The three-attacker SMK showcase context.
    #[arg(long)]
    showcase: bool,
    /// Output file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Options file; flags given on the command line override it.
    #[arg(long)]
    options: Option<PathBuf>,
    #[arg(long, value_parser = kebab::<Algorithm>)]
    algorithm: Option<Algorithm>,
    /// Beam width, -1 keeps every candidate.
    #[arg(long, allow_hyphen_values = true)]
    beam: Option<i64>,
    /// Depth limit, 0 means the number of search variables.
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    early_stop: bool,
    #[arg(long, value_parser = kebab::<HeuristicKind>)]
    heuristic: Option<HeuristicKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_parser = kebab::<StochasticKind>)]
    stochastic: Option<StochasticKind>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    batch: Option<u64>,
    #[arg(long)]
    tc: Option<f64>,
    #[arg(long)]
    tnc: Option<f64>,
    #[arg(long)]
    tb: Option<f64>,
    #[arg(long)]
    nmax: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Shrink every cause to a minimal one afterwards.
    #[arg(long)]
    minimize: bool,
    /// Rank with the heuristic even under stochastic evaluation.
    #[arg(long)]
    keep_heuristic: bool,
    #[arg(long, value_parser = kebab::<IsiExpansion>)]
    isi_expansion: Option<IsiExpansion>,
    /// Include the wall-clock runtime in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    max_size: usize,
    #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
    budget: u128,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    builtin: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid JSON file.
    grid: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Worker threads, 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match output {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(())
}

fn load(args: &ModelArgs) -> Result<(Model, String, Context), Error> {
    let (model, name, builtin) = match (&args.builtin, &args.scm) {
        (Some(b), _) => {
            let b: Builtin = b.parse()?;
            (Model::from_builtin(b)?, b.to_string(), Some(b))
        }
        (None, Some(p)) => (
            Model::Explicit(Scm::from_json(&read(p)?)?),
            p.display().to_string(),
            None,
        ),
        (None, None) => return Err(Error::InvalidConfig("give --builtin or --scm".into())),
    };
    let scm = model.scm();
    let ctx = if let Some(p) = &args.context {
        report::parse_context(scm, &read(p)?)?
    } else if let Some(text) = &args.u {
        report::parse_context(scm, text)?
    } else if args.showcase {
        benchmarks::smk_showcase_context(scm)?
    } else {
        match builtin {
            Some(Builtin::RockThrowing) => Context::from_bools(scm, &[true, true])?,
            Some(_) if scm.exogenous().len() == 18 => benchmarks::smk_showcase_context(scm)?,
            _ => {
                return Err(Error::InvalidConfig(
                    "give --context, --u or --showcase".into(),
                ))
            }
        }
    };
    Ok((model, name, ctx))
}

fn identify(args: IdentifyArgs) -> Result<(), Error> {
    let (model, name, ctx) = load(&args.model)?;
    let mut opts: IdentifyOptions = match &args.options {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::Schema(e.to_string()))?,
        None => IdentifyOptions::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { opts.$f = v; } )* };
    }
    set!(
        algorithm,
        beam,
        max_steps,
        heuristic,
        epsilon,
        stochastic,
        samples,
        batch,
        tc,
        tnc,
        tb,
        isi_expansion
    );
    opts.early_stop |= args.early_stop;
    opts.minimize |= args.minimize;
    opts.keep_heuristic |= args.keep_heuristic;
    if args.nmax.is_some() {
        opts.nmax = args.nmax;
    }
    match args.seed {
        Some(s) => opts.seed = s,
        None if args.options.is_none() => {
            opts.seed = rand::random();
            eprintln!("seed: {}", opts.seed);
        }
        None => {}
    }
    let (mut rep, _) = report::run_identify(&model, &name, &ctx, &opts)?;
    if !args.timing {
        rep.runtime_s = None;
    }
    emit(&args.model.output, &serde_json::to_string_pretty(&rep)?)
}

fn exact(args: ExactArgs) -> Result<(), Error> {
    let (model, name, ctx) = load(&args.model)?;
    let (rep, _) = report::run_exact(&model, &name, &ctx, args.max_size, args.budget)?;
    emit(&args.model.output, &serde_json::to_string_pretty(&rep)?)
}

fn generate(args: GenArgs) -> Result<(), Error> {
    let b: Builtin = args.builtin.parse()?;
    emit(&args.output, &b.scm()?.to_json())
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let grid: ExperimentGrid =
        serde_json::from_str(&read(&args.grid)?).map_err(|e| Error::Schema(e.to_string()))?;
    let out = run_experiment(&grid, args.jobs)?;
    for e in &out.errors {
        eprintln!("cell {} context {}: {}", e.cell, e.context_id, e.message);
    }
    out.write(&args.output, grid.scm.name())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Identify(a) => identify(a),
        Command::Exact(a) => exact(a),
        Command::Gen(a) => generate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                e if e.is_budget() => 3,
                Error::Io(_) | Error::Csv(_) => 1,
                _ => 2,
            })
        }
    }
}
