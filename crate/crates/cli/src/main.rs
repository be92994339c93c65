//! Command-line front end: generate task streams, run the engine over a
//! stream file, replicate a run across simulated nodes, and dump mined
//! repeats.
//!
//! Exit codes: 0 success, 1 usage or I/O failure, 2 input parse failure,
//! 3 replication divergence.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use retrace_core::cost::CostParams;
use retrace_core::engine::EngineConfig;
use retrace_core::finder::LatencyModel;
use retrace_core::generate::{generate, GeneratorSpec};
use retrace_core::pipeline::run_to_artifacts;
use retrace_core::repeats::find_repeats;
use retrace_core::replication::{run_replicated, Divergence, ReplicationConfig};
use retrace_core::task::TaskDescriptor;
use retrace_core::text::{
    parse_task_stream, serialize_annotated_stream, serialize_task_stream, ParseError,
};
use retrace_core::token::tokenize_stream;

#[derive(Parser)]
#[command(name = "retrace", version, about = "Trace identification over task streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic task stream.
    Generate(GenerateArgs),
    /// Run the engine over a task-stream file and write run artifacts.
    Run(RunArgs),
    /// Run replicated engines with randomized latencies and compare nodes.
    Replicate(ReplicateArgs),
    /// Mine a task-stream file once and dump the selected repeats.
    Mine(MineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Jacobi,
    Periodic,
    PeriodicWithNoise,
    NestedLoops,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    /// Stream family.
    #[arg(long, value_enum)]
    kind: Kind,
    /// Iterations (periodic families) or outer repetitions (nested-loops).
    #[arg(long, default_value_t = 100)]
    iterations: u64,
    /// Tasks per block for the periodic families.
    #[arg(long, default_value_t = 10)]
    period: u32,
    /// Per-token probability of an untraceable check between blocks.
    #[arg(long, default_value_t = 0.0)]
    noise_rate: f64,
    /// First inner-loop body repetitions (nested-loops).
    #[arg(long, default_value_t = 8)]
    inner_a: u32,
    /// Second inner-loop body repetitions (nested-loops).
    #[arg(long, default_value_t = 2)]
    inner_b: u32,
    /// Alphabet size (random).
    #[arg(long, default_value_t = 50)]
    alphabet: u32,
    /// Stream length (random).
    #[arg(long, default_value_t = 1000)]
    length: u64,
    /// Seed for the randomized families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// The engine knobs shared by `run` and `replicate`.
#[derive(Args)]
struct EngineArgs {
    /// Shortest repeat registered as a trace.
    #[arg(long, default_value_t = 25)]
    min_trace_length: usize,
    /// Longest trace registered; unbounded when omitted.
    #[arg(long)]
    max_trace_length: Option<usize>,
    /// History buffer capacity in tokens.
    #[arg(long, default_value_t = 5000)]
    batchsize: usize,
    /// Tokens between mining jobs; must divide the batch size.
    #[arg(long, default_value_t = 250)]
    multi_scale_factor: usize,
    /// Worker threads for mining jobs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl EngineArgs {
    fn to_config(&self) -> Result<EngineConfig, Failure> {
        let config = EngineConfig {
            min_trace_length: self.min_trace_length,
            max_trace_length: self.max_trace_length,
            batch_size: self.batchsize,
            multi_scale_factor: self.multi_scale_factor,
            workers: self.workers,
            ..EngineConfig::default()
        };
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Task-stream file.
    input: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Directory for annotated.txt, decisions.log, cost.csv, fraction.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Traced-fraction window, in tasks.
    #[arg(long, default_value_t = 5000)]
    window: usize,
    /// Fixed simulated mining latency, in tokens.
    #[arg(long)]
    latency_tokens: Option<u64>,
}

#[derive(Args)]
struct ReplicateArgs {
    /// Task-stream file.
    input: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Simulated node count.
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Base seed for per-node latency draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest simulated job latency, in tokens.
    #[arg(long, default_value_t = 100)]
    max_latency: u64,
    /// Write node 0's annotated stream here on success.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    /// Task-stream file to tokenize and mine.
    input: PathBuf,
    /// Shortest repeat reported.
    #[arg(long, default_value_t = 25)]
    min_trace_length: usize,
}

enum Failure {
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, source: ParseError },
    Divergence(Divergence),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io { .. } => 1,
            Failure::Parse { .. } => 2,
            Failure::Divergence(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::Parse { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::Divergence(d) => write!(f, "node {} diverged: {}", d.node, d.detail),
        }
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
        Command::Generate(args) => generate_cmd(args),
        Command::Run(args) => run_cmd(args),
        Command::Replicate(args) => replicate_cmd(args),
        Command::Mine(args) => mine_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

fn generate_cmd(args: GenerateArgs) -> Result<(), Failure> {
    let spec = match args.kind {
        Kind::Jacobi => GeneratorSpec::Jacobi {
            iterations: args.iterations,
        },
        Kind::Periodic => GeneratorSpec::Periodic {
            period: args.period,
            iterations: args.iterations,
        },
        Kind::PeriodicWithNoise => GeneratorSpec::PeriodicWithNoise {
            period: args.period,
            iterations: args.iterations,
            noise_rate: args.noise_rate,
        },
        Kind::NestedLoops => GeneratorSpec::NestedLoops {
            outer: args.iterations,
            inner_a: args.inner_a,
            inner_b: args.inner_b,
        },
        Kind::Random => GeneratorSpec::Random {
            alphabet: args.alphabet,
            length: args.length,
        },
    };
    if !(0.0..=1.0).contains(&args.noise_rate) {
        return Err(Failure::Usage(format!(
            "noise rate {} is not in [0, 1]",
            args.noise_rate
        )));
    }
    let text = serialize_task_stream(&generate(&spec, args.seed));
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_cmd(args: RunArgs) -> Result<(), Failure> {
    let tasks = read_tasks(&args.input)?;
    let mut config = args.engine.to_config()?;
    if let Some(tokens) = args.latency_tokens {
        config.latency = LatencyModel::FixedTokens(tokens);
    }
    if args.window < 1 {
        return Err(Failure::Usage("window must be at least 1".into()));
    }
    let artifacts = run_to_artifacts(&tasks, config, &CostParams::default(), args.window)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    write_file(&args.out_dir.join("annotated.txt"), &artifacts.annotated_text)?;
    write_file(&args.out_dir.join("decisions.log"), &artifacts.decisions_text)?;
    write_file(&args.out_dir.join("cost.csv"), &artifacts.cost_csv)?;
    write_file(&args.out_dir.join("fraction.csv"), &artifacts.fraction_csv)?;
    let s = &artifacts.summary;
    println!("tasks: {}", s.tasks);
    println!("traces registered: {}", s.traces_registered);
    println!("records: {}", s.records);
    println!("replays: {}", s.replays);
    println!("final wait count: {}", s.final_wait_count);
    println!(
        "cost: {:.6} s (untraced {:.6} s, speedup {:.3}x)",
        s.total_cost_seconds, s.untraced_cost_seconds, s.speedup
    );
    println!("final traced fraction: {:.4}", s.final_traced_fraction);
    Ok(())
}

fn replicate_cmd(args: ReplicateArgs) -> Result<(), Failure> {
    if args.nodes < 2 {
        return Err(Failure::Usage(format!(
            "replication needs at least 2 nodes, got {}",
            args.nodes
        )));
    }
    let tasks = read_tasks(&args.input)?;
    let config = args.engine.to_config()?;
    let report = run_replicated(
        &tasks,
        &config,
        &ReplicationConfig {
            nodes: args.nodes,
            base_seed: args.seed,
            max_latency_tokens: args.max_latency,
        },
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(divergence) = report.divergence {
        return Err(Failure::Divergence(divergence));
    }
    let waits: usize = report.nodes.iter().map(|n| n.waits_observed).sum();
    println!("nodes: {} (outputs identical)", args.nodes);
    println!("tasks: {}", tasks.len());
    println!("waits observed: {waits}");
    println!("final wait count: {}", report.nodes[0].final_wait_count);
    if let Some(path) = &args.out {
        write_file(path, &serialize_annotated_stream(&report.nodes[0].events))?;
    }
    Ok(())
}

fn mine_cmd(args: MineArgs) -> Result<(), Failure> {
    let tasks = read_tasks(&args.input)?;
    let tokens = tokenize_stream(&tasks);
    let result = find_repeats(&tokens, args.min_trace_length);
    println!(
        "tokens: {}, repeats: {}, coverage: {} of {}",
        tokens.len(),
        result.repeats.len(),
        result.coverage(),
        tokens.len()
    );
    for (i, repeat) in result.repeats.iter().enumerate() {
        let starts: Vec<String> = repeat.occurrences.iter().map(|o| o.to_string()).collect();
        println!("repeat {i}: len {} at [{}]", repeat.len(), starts.join(", "));
        let first = repeat.occurrences[0];
        let names: Vec<&str> = tasks[first..first + repeat.len()]
            .iter()
            .map(|t| t.task_name.as_str())
            .collect();
        println!("  tasks: {}", names.join(" "));
    }
    Ok(())
}

fn read_tasks(path: &Path) -> Result<Vec<TaskDescriptor>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io {
        path: path.to_owned(),
        source: e,
    })?;
    parse_task_stream(&text).map_err(|e| Failure::Parse {
        path: path.to_owned(),
        source: e,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io {
        path: path.to_owned(),
        source: e,
    })
}
