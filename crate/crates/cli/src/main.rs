//! `gmatch`: sample instances, match templates, run multi-round
//! discovery, sweep experiment grids, and cross-check small cases
//! against exhaustive search.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use gmatch_cli::config::{ExperimentConfig, SchemeConfig, StrategyConfig};
use gmatch_cli::io::{
    self, assignment_to_vec, DiscoverReport, InstanceMeta, MatchReport, RoundReport,
};
use gmatch_cli::{grid, oracle, CliError, Result};

use gmatch_core::diversify::{discover, PenaltySchedule};
use gmatch_core::fw::{match_restarts, relabel_for_seeds, FwConfig, FwPenalty, LayeredPair};
use gmatch_core::graph::pad;
use gmatch_core::mat::Mat;
use gmatch_core::mcer::{sample_mcer, sample_similarity};
use gmatch_core::rng::{derive_rng, mix};

#[derive(Parser)]
#[command(
    name = "gmatch",
    version,
    about = "Locate noisy template copies in a background graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a model instance and write its files to a directory.
    Generate(GenerateArgs),
    /// One multi-restart match of a template against a background.
    Match(MatchArgs),
    /// Multi-round discovery with penalties between rounds.
    Discover(DiscoverArgs),
    /// Full experiment grid from a JSON config.
    Grid(GridArgs),
    /// Exhaustive search oracle for small instances.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config supplying the model and similarity sections.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for template.csv, background.csv,
    /// similarity.csv, and meta.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Overlap size; defaults to the model's.
    #[arg(long)]
    k: Option<usize>,
    /// Repetition index: generates exactly the instance the grid uses
    /// for this (k, rep).
    #[arg(long, default_value_t = 0)]
    rep: usize,
}

#[derive(Args)]
struct InstanceArgs {
    /// Template graph (.csv adjacency or edge list).
    #[arg(long)]
    template: PathBuf,
    /// Background graph (.csv adjacency or edge list).
    #[arg(long)]
    background: PathBuf,
    /// Node similarity matrix (dense CSV); zeros when absent.
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Node count override for edge-list templates.
    #[arg(long)]
    template_nodes: Option<usize>,
    /// Node count override for edge-list backgrounds.
    #[arg(long)]
    background_nodes: Option<usize>,
    /// Weight of the similarity term.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = SchemeConfig::Centered)]
    scheme: SchemeConfig,
    /// Seed pair file: one `template background` id pair per line.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatcherArgs {
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Movement threshold; defaults to 1e-6 * n.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    matcher: MatcherArgs,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    matcher: MatcherArgs,
    /// Penalty strengths, one per round transition (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    #[arg(long, value_enum, default_value_t = StrategyConfig::Similarity)]
    strategy: StrategyConfig,
    /// Number of rounds; defaults to one more than the eps list.
    #[arg(long)]
    rounds: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Override the config's repetition count.
    #[arg(long)]
    mc_reps: Option<usize>,
    /// Override the per-repetition CSV path.
    #[arg(long)]
    per_rep: Option<PathBuf>,
    /// Override the aggregate CSV path.
    #[arg(long)]
    aggregate: Option<PathBuf>,
    /// Record wall-clock time per repetition (makes reruns differ).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Match(args) => run_match(args),
        Command::Discover(args) => run_discover(args),
        Command::Grid(args) => run_grid(args),
        Command::Oracle(args) => run_oracle(args),
    }
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    let config: ExperimentConfig = io::read_json(&args.config)?;
    config.validate()?;
    let model = config
        .model
        .as_ref()
        .ok_or_else(|| CliError::Config("generate needs a model section".into()))?;
    let sim_config = config
        .similarity
        .as_ref()
        .ok_or_else(|| CliError::Config("generate needs a similarity section".into()))?;
    let k = args.k.unwrap_or(model.overlap);
    let spec = model.to_spec(k);
    spec.validate()?;
    let instance_key = mix(config.master_seed, mix(k as u64, args.rep as u64));
    let instance = sample_mcer(&spec, &mut derive_rng(instance_key, 0))?;
    let sim = sample_similarity(
        &spec,
        &sim_config.to_spec(),
        &mut derive_rng(instance_key, 1),
    )?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;
    io::write_graph(&args.out_dir.join("template.csv"), &instance.template)?;
    io::write_graph(&args.out_dir.join("background.csv"), &instance.background)?;
    io::write_matrix(&args.out_dir.join("similarity.csv"), &sim)?;
    io::write_json(
        &args.out_dir.join("meta.json"),
        &InstanceMeta {
            m: spec.m,
            n: spec.n,
            truth: instance.truth.iter().map(assignment_to_vec).collect(),
            master_seed: config.master_seed,
        },
    )?;
    eprintln!("wrote instance to {}", args.out_dir.display());
    Ok(())
}

struct LoadedInstance {
    template: gmatch_core::graph::Graph,
    background: gmatch_core::graph::Graph,
    sim: Mat,
    pairs: Vec<(usize, usize)>,
}

fn load_instance(args: &InstanceArgs) -> Result<LoadedInstance> {
    let template = io::read_graph(&args.template, args.template_nodes)?;
    let background = io::read_graph(&args.background, args.background_nodes)?;
    let (m, n) = (template.n(), background.n());
    let sim = match &args.similarity {
        Some(path) => {
            let sim = io::read_similarity(path)?;
            if sim.rows() != m || sim.cols() != n {
                return Err(CliError::Config(format!(
                    "similarity is {}x{}, expected {m}x{n}",
                    sim.rows(),
                    sim.cols()
                )));
            }
            sim
        }
        None => Mat::zeros(m, n),
    };
    let pairs = match &args.seeds {
        Some(path) => read_seed_pairs(path)?,
        None => Vec::new(),
    };
    Ok(LoadedInstance {
        template,
        background,
        sim,
        pairs,
    })
}

fn read_seed_pairs(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Config(format!("seed file line {}: want `t b`", lineno + 1));
        let mut parts = line.split_whitespace();
        let t: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let b: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        pairs.push((t, b));
    }
    Ok(pairs)
}

fn fw_config(matcher: &MatcherArgs, lambda: f64, seeds: usize, n: usize) -> FwConfig {
    FwConfig {
        lambda,
        eta: matcher.eta.unwrap_or(1e-6 * n as f64),
        max_iters: matcher.max_iters,
        n_restarts: matcher.restarts,
        seeds,
        master_seed: matcher.master_seed,
    }
}

fn emit_report<T: serde::Serialize>(out: &Option<PathBuf>, report: &T) -> Result<()> {
    match out {
        Some(path) => io::write_json(path, report),
        None => {
            let text = serde_json::to_string_pretty(report)
                .map_err(|e| CliError::Io(format!("serializing json: {e}")))?;
            use std::io::Write;
            // Tolerate a closed pipe (e.g. piping into `head`).
            match writeln!(std::io::stdout(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn run_match(args: MatchArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let (ra, rb, rsim, maps) =
        relabel_for_seeds(&inst.template, &inst.background, &inst.sim, &inst.pairs)?;
    let problem = LayeredPair::single(pad(&ra, &rb, args.instance.scheme.to_core())?);
    let fw = fw_config(
        &args.matcher,
        args.instance.lambda,
        inst.pairs.len(),
        inst.background.n(),
    );
    let results = match_restarts(&problem, &rsim, &fw, &FwPenalty::None)?;
    let best = &results[0];
    let report = MatchReport {
        assignment: assignment_to_vec(&maps.translate(&best.assignment)?),
        objective: best.objective,
        iterations: best.iterations,
        converged: best.converged,
        restart_objectives: results.iter().map(|r| r.objective).collect(),
    };
    emit_report(&args.instance.out, &report)
}

fn run_discover(args: DiscoverArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let (ra, rb, rsim, maps) =
        relabel_for_seeds(&inst.template, &inst.background, &inst.sim, &inst.pairs)?;
    let problem = LayeredPair::single(pad(&ra, &rb, args.instance.scheme.to_core())?);
    let fw = fw_config(
        &args.matcher,
        args.instance.lambda,
        inst.pairs.len(),
        inst.background.n(),
    );
    let rounds = args.rounds.unwrap_or(args.eps.len() + 1);
    let log = discover(
        &problem,
        &rsim,
        &fw,
        &PenaltySchedule::PerRound(args.eps.clone()),
        args.strategy.to_core(),
        rounds,
    )?;
    let report = DiscoverReport {
        strategy: format!("{:?}", log.strategy).to_lowercase(),
        rounds: log
            .rounds
            .iter()
            .map(|r| {
                Ok(RoundReport {
                    assignment: assignment_to_vec(&maps.translate(&r.assignment)?),
                    objective: r.objective,
                    iterations: r.iterations,
                    converged: r.converged,
                    sim_digest: r.sim_digest,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    emit_report(&args.instance.out, &report)
}

fn run_grid(args: GridArgs) -> Result<()> {
    let mut config: ExperimentConfig = io::read_json(&args.config)?;
    if let Some(seed) = args.master_seed {
        config.master_seed = seed;
    }
    if let Some(reps) = args.mc_reps {
        config.mc_reps = reps;
    }
    if let Some(path) = args.per_rep {
        config.outputs.per_rep_csv = path;
    }
    if let Some(path) = args.aggregate {
        config.outputs.aggregate_csv = path;
    }
    if args.timing {
        config.timing = true;
    }
    let output = grid::run_grid(&config)?;
    for path in [&config.outputs.per_rep_csv, &config.outputs.aggregate_csv] {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
        }
    }
    grid::emit_results(
        &output,
        &config.outputs.per_rep_csv,
        &config.outputs.aggregate_csv,
    )?;
    eprintln!(
        "wrote {} repetition rows to {} and {} cell rows to {}",
        output.rep_rows.len(),
        config.outputs.per_rep_csv.display(),
        output.cell_rows.len(),
        config.outputs.aggregate_csv.display()
    );
    Ok(())
}

fn run_oracle(args: OracleArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    if !inst.pairs.is_empty() {
        return Err(CliError::Config(
            "the exhaustive oracle does not take seeds".into(),
        ));
    }
    let (assignment, objective) = oracle::brute_force_match(
        &inst.template,
        &inst.background,
        &inst.sim,
        args.instance.lambda,
        args.instance.scheme.to_core(),
    )?;
    #[derive(serde::Serialize)]
    struct OracleReport {
        assignment: Vec<usize>,
        objective: f64,
    }
    emit_report(
        &args.instance.out,
        &OracleReport {
            assignment: assignment_to_vec(&assignment),
            objective,
        },
    )
}
