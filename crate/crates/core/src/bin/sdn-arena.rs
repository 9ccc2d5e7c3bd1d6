//! Command-line front end: seeded game series, t-test comparisons, reward
//! charts, and topology config checks. Exit codes: 0 success, 1 usage
//! (bad flags or unresolvable config), 2 runtime failure.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use sdn_arena::agents::AgentKind;
use sdn_arena::experiment::{self, RunRecord, SeriesOptions};
use sdn_arena::game::{Role, TurnEvent};
use sdn_arena::plot;
use sdn_arena::stats;
use sdn_arena::topology::{self, TopologyConfig};

const DEFAULT_CONFIG: &str = "topology.toml";
const OUT_ENV: &str = "SDN_ARENA_OUT";

#[derive(Parser)]
#[command(
    name = "sdn-arena",
    version,
    about = "Turn-based attacker/defender games on a simulated network",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded series of games; writes results.csv, per-run turn logs,
    /// and one checkpoint per agent under the output directory
    Simulate(SimulateArgs),
    /// Compare defender turn counts from two results.csv files with a
    /// Student-t test; writes ttest.txt and ttest.csv
    Stats(StatsArgs),
    /// Render per-run cumulative rewards as an SVG bar chart plus a CSV twin
    Plot(PlotArgs),
    /// Topology config helpers
    Topo(TopoArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Role assignment: 1 = hybrid defends and DDQN attacks, 2 = swapped
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    game: u8,
    /// Games in the series [default: 10]
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    runs: Option<u32>,
    /// Per-agent turn cap of each game [default: 25000, or 2000 with --quick]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    turns_per_agent: Option<u64>,
    /// Topology config file [default: ./topology.toml]
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; both agents derive their streams from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory [default: out/game<GAME>]
    #[arg(long, value_name = "DIR", env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Desk-scale preset (runs 10, turns 2000); explicit flags still win
    #[arg(long)]
    quick: bool,
    /// Attacker algorithm [default: chosen by --game]
    #[arg(long, value_enum)]
    attacker: Option<AgentChoice>,
    /// Defender algorithm [default: chosen by --game]
    #[arg(long, value_enum)]
    defender: Option<AgentChoice>,
}

#[derive(Args)]
struct StatsArgs {
    /// results.csv of the first series
    #[arg(long, value_name = "CSV")]
    game1: PathBuf,
    /// results.csv of the second series
    #[arg(long, value_name = "CSV")]
    game2: PathBuf,
    /// Significance level of the reported critical values
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Test variant; paired requires equally long series
    #[arg(long, value_enum, default_value_t = ModeChoice::Paired)]
    mode: ModeChoice,
    /// Output directory [default: out/stats]
    #[arg(long, value_name = "DIR", env = OUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// results.csv (one bar pair per row) or one turns_runNN.jsonl
    /// (aggregated to a single pair)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output SVG path; the CSV twin lands beside it
    #[arg(long, value_name = "FILE", default_value = "out/reward.svg")]
    out: PathBuf,
    /// Game label applied when aggregating a JSONL turn log
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    game: u8,
}

#[derive(Args)]
struct TopoArgs {
    #[command(subcommand)]
    command: TopoCommand,
}

#[derive(Subcommand)]
enum TopoCommand {
    /// Parse a config and print the derived observation slot layout
    Validate {
        /// Topology config file [default: ./topology.toml]
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
    /// Print the bundled default topology config as TOML
    Default {
        /// Write to this file instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentChoice {
    Ddqn,
    N2d,
    Random,
}

impl From<AgentChoice> for AgentKind {
    fn from(choice: AgentChoice) -> Self {
        match choice {
            AgentChoice::Ddqn => AgentKind::Ddqn,
            AgentChoice::N2d => AgentKind::N2d,
            AgentChoice::Random => AgentKind::Random,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeChoice {
    Paired,
    Unpaired,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
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
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Stats(args) => run_stats(args),
        Command::Plot(args) => run_plot(args),
        Command::Topo(args) => match args.command {
            TopoCommand::Validate { config } => topo_validate(config),
            TopoCommand::Default { out } => topo_default(out),
        },
    };
    match result {
        Ok(text) => {
            // Best-effort stdout: artifacts are already on disk, and a
            // closed pipe (e.g. `| head`) must not turn into a failure.
            let _ = io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// `--config` wins; otherwise `./topology.toml` must exist. Having neither
/// is a usage error, not a runtime one.
fn resolve_config(explicit: Option<PathBuf>) -> Result<PathBuf, CliError> {
    if let Some(path) = explicit {
        return Ok(path);
    }
    let fallback = Path::new(DEFAULT_CONFIG);
    if fallback.exists() {
        Ok(fallback.to_path_buf())
    } else {
        Err(CliError::Usage(format!(
            "no --config given and no ./{DEFAULT_CONFIG} in the working directory \
             (try `sdn-arena topo default --out {DEFAULT_CONFIG}`)"
        )))
    }
}

fn simulate(args: SimulateArgs) -> Result<String, CliError> {
    let runs = args.runs.unwrap_or(10);
    let turns_per_agent = args
        .turns_per_agent
        .unwrap_or(if args.quick { 2_000 } else { 25_000 });
    let config_path = resolve_config(args.config)?;
    let topo = std::sync::Arc::new(
        topology::load_config(&config_path).map_err(CliError::runtime)?,
    );
    let out_dir = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("out/game{}", args.game)));

    let opts = SeriesOptions {
        game_id: args.game,
        runs,
        turns_per_agent,
        seed: args.seed,
        attacker: args.attacker.map(Into::into),
        defender: args.defender.map(Into::into),
    };
    let records =
        experiment::run_series(&topo, &opts, Some(&out_dir)).map_err(CliError::runtime)?;

    let mut text = format!(
        "game {} series: {} runs, cap {} turns per agent, seed {}\n",
        args.game, runs, turns_per_agent, args.seed
    );
    let _ = writeln!(
        text,
        "{:>4}  {:<8}  {:>9}  {:>9}  {:>9}",
        "run", "winner", "def_turns", "def_score", "att_score"
    );
    for r in &records {
        let _ = writeln!(
            text,
            "{:>4}  {:<8}  {:>9}  {:>9}  {:>9}",
            r.run,
            r.winner.name(),
            r.defender_turns,
            r.defender_score,
            r.attacker_score
        );
    }
    let defender_wins = records.iter().filter(|r| r.winner == Role::Defender).count();
    let _ = writeln!(text, "defender wins: {defender_wins}/{}", records.len());
    let _ = writeln!(text, "artifacts: {}", out_dir.display());
    Ok(text)
}

fn run_stats(args: StatsArgs) -> Result<String, CliError> {
    let game1 = experiment::read_results_csv(&args.game1).map_err(CliError::runtime)?;
    let game2 = experiment::read_results_csv(&args.game2).map_err(CliError::runtime)?;
    let xs = experiment::defender_turns_column(&game1);
    let ys = experiment::defender_turns_column(&game2);
    let report = match args.mode {
        ModeChoice::Paired => stats::paired_ttest(&xs, &ys, args.alpha),
        ModeChoice::Unpaired => stats::unpaired_ttest(&xs, &ys, args.alpha),
    }
    .map_err(CliError::runtime)?;

    let out_dir = args.out.unwrap_or_else(|| PathBuf::from("out/stats"));
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", out_dir.display())))?;
    let mut text = report.render_text();
    write_artifact(&out_dir.join("ttest.txt"), text.as_bytes())?;
    write_artifact(&out_dir.join("ttest.csv"), report.render_csv().as_bytes())?;
    let _ = writeln!(text, "artifacts: {}", out_dir.display());
    Ok(text)
}

fn run_plot(args: PlotArgs) -> Result<String, CliError> {
    let records = load_plot_records(&args.input, args.game)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Runtime(format!("create {}: {e}", parent.display())))?;
    }
    plot::emit_reward_plot(&records, &args.out).map_err(CliError::runtime)?;
    Ok(format!(
        "wrote {} and {}\n",
        args.out.display(),
        args.out.with_extension("csv").display()
    ))
}

fn load_plot_records(input: &Path, game: u8) -> Result<Vec<RunRecord>, CliError> {
    match input.extension().and_then(|e| e.to_str()) {
        Some("csv") => experiment::read_results_csv(input).map_err(CliError::runtime),
        Some("jsonl") => aggregate_turn_log(input, game),
        _ => Err(CliError::Runtime(format!(
            "{}: unsupported input, expected a .csv results table or .jsonl turn log",
            input.display()
        ))),
    }
}

/// Fold one turn log back into the run record its game produced.
fn aggregate_turn_log(path: &Path, game: u8) -> Result<Vec<RunRecord>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("read {}: {e}", path.display())))?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let event: TurnEvent = serde_json::from_str(line).map_err(|e| {
            CliError::Runtime(format!("{}:{}: bad turn event: {e}", path.display(), i + 1))
        })?;
        events.push(event);
    }
    let Some(last) = events.last() else {
        return Ok(Vec::new());
    };
    let winner = last.winner.ok_or_else(|| {
        CliError::Runtime(format!("{}: log ends before a winner", path.display()))
    })?;
    let sum = |role: Role| {
        events
            .iter()
            .filter(|e| e.role == role)
            .map(|e| i64::from(e.reward))
            .sum()
    };
    Ok(vec![RunRecord {
        run: 1,
        game,
        winner,
        defender_turns: events.iter().filter(|e| e.role == Role::Defender).count() as u64,
        defender_score: last.defender_score,
        attacker_score: last.attacker_score,
        defender_reward_sum: sum(Role::Defender),
        attacker_reward_sum: sum(Role::Attacker),
        seed: 0,
    }])
}

fn topo_validate(config: Option<PathBuf>) -> Result<String, CliError> {
    let path = resolve_config(config)?;
    let cfg = topology::load_config(&path).map_err(CliError::runtime)?;
    Ok(format!(
        "{}: ok\n{}",
        path.display(),
        topology::describe_slots(&cfg)
    ))
}

fn topo_default(out: Option<PathBuf>) -> Result<String, CliError> {
    let text = TopologyConfig::default_config_toml();
    match out {
        Some(path) => {
            write_artifact(&path, text.as_bytes())?;
            Ok(format!("wrote {}\n", path.display()))
        }
        None => Ok(text.to_string()),
    }
}

fn write_artifact(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))
}
