use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use htp_cli::{cmd_bench, cmd_inspect, cmd_parse_lib, cmd_plan, read_query, BackendSpec, CliError, RunConfig};
use htp_core::RuleLibrary;
use htp_eval::Benchmark;
use htp_planner::{BuilderParams, ExpansionMode, PipelineParams, Pruning, RuleSampling};

#[derive(Parser)]
#[command(name = "htp", version, about = "Hypertree planning runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a single query.
    Plan {
        #[command(flatten)]
        run: RunArgs,
        /// Query text, or @FILE to read it from a file.
        #[arg(long)]
        query: String,
    },
    /// Plan and evaluate every instance of a JSONL dataset.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Print the iteration table and outline of a stored trace.
    Inspect {
        trace: PathBuf,
        /// Check attachments against this library while replaying.
        #[arg(long)]
        library: Option<PathBuf>,
        /// Print only the outline.
        #[arg(long)]
        outline: bool,
    },
    /// Parse a rule library and summarise or re-render it.
    ParseLib {
        path: PathBuf,
        #[arg(long)]
        render: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Expansion {
    Instantiate,
    Refined,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampling {
    Library,
    Ranked,
}

#[derive(Args)]
struct RunArgs {
    /// Rule library; defaults to the bundled one for --benchmark.
    #[arg(long)]
    library: Option<PathBuf>,
    /// travelplanner, blocksworld, mystery or trip.
    #[arg(long)]
    benchmark: Option<Benchmark>,
    /// replay:PATH, record:PATH=MODEL@ENDPOINT, http:MODEL@ENDPOINT or config:PATH.
    #[arg(long)]
    backend: BackendSpec,
    /// Maximum number of selection and expansion iterations.
    #[arg(long, default_value_t = BuilderParams::default().depth)]
    depth: usize,
    /// Chains kept per iteration.
    #[arg(long, default_value_t = BuilderParams::default().width)]
    width: usize,
    /// Rules expanded per selected node.
    #[arg(long, default_value_t = BuilderParams::default().rule_sample)]
    rule_sample: usize,
    /// (width|prob|llm):n; n must equal --width. Defaults to width:W.
    #[arg(long)]
    pruning: Option<Pruning>,
    #[arg(long, value_enum, default_value_t = Expansion::Instantiate)]
    expansion: Expansion,
    #[arg(long, value_enum, default_value_t = Sampling::Library)]
    rule_sampling: Sampling,
    /// Knowledge manifest.
    #[arg(long)]
    knowledge: Option<PathBuf>,
    /// Reasoning steps allowed per leaf.
    #[arg(long, default_value_t = PipelineParams::default().step_budget)]
    step_budget: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Instances planned in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed for the instance scheduling order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RunArgs {
    fn config(self) -> RunConfig {
        let pruning = self.pruning.unwrap_or(Pruning::Width(self.width));
        let params = BuilderParams {
            pruning,
            ..BuilderParams::new(self.depth, self.width, self.rule_sample)
        }
        .with_expansion(match self.expansion {
            Expansion::Instantiate => ExpansionMode::Instantiate,
            Expansion::Refined => ExpansionMode::ModelRefined,
        })
        .with_rule_sampling(match self.rule_sampling {
            Sampling::Library => RuleSampling::LibraryOrder,
            Sampling::Ranked => RuleSampling::ModelRanked,
        });
        RunConfig {
            library: self.library,
            benchmark: self.benchmark,
            backend: self.backend,
            params,
            pipeline: PipelineParams {
                step_budget: self.step_budget,
                ..PipelineParams::default()
            },
            knowledge: self.knowledge,
            out: self.out,
            jobs: self.jobs,
            seed: self.seed,
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Plan { run, query } => {
            let query = read_query(&query)?;
            let config = run.config();
            let status = cmd_plan(&config, &query)?;
            println!("{}", config.out.join(htp_cli::commands::PLAN_FILE).display());
            Ok(status.exit_code())
        }
        Command::Bench { run, dataset } => {
            let config = run.config();
            let benchmark = config
                .benchmark
                .ok_or_else(|| CliError::Config("bench needs --benchmark".into()))?;
            let report = cmd_bench(&config, &dataset, benchmark)?;
            print!("{}", report.table());
            Ok(0)
        }
        Command::Inspect {
            trace,
            library,
            outline,
        } => {
            let library = library
                .map(|p| {
                    let text =
                        std::fs::read_to_string(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                    RuleLibrary::parse(&text).map_err(|e| CliError::Library(e.to_string()))
                })
                .transpose()?;
            if outline {
                let t = htp_cli::load_trace(&trace)?;
                print!("{}", htp_cli::trace_outline(&t, library.as_ref())?);
            } else {
                print!("{}", cmd_inspect(&trace, library.as_ref())?);
            }
            Ok(0)
        }
        Command::ParseLib { path, render } => {
            print!("{}", cmd_parse_lib(&path, render)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("htp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
