use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use tracing::Level;

use tutraj::pipeline::fixtures::write_bundle;
use tutraj::pipeline::{Config, Overrides, Pipeline, PipelineError, ServiceMode};
use tutraj::synth::{bundled_plan, retention_plan};

/// Turn web tutorials into GUI-agent trajectory datasets.
#[derive(Debug, Parser)]
#[command(name = "tutraj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Format of the log stream on stderr.
    #[arg(long, global = true, value_enum, default_value_t = LogFormat::Json)]
    log_format: LogFormat,
    /// More log detail; repeat for trace level.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Live,
    Record,
    Replay,
    Scripted,
}

impl From<Mode> for ServiceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Live => ServiceMode::Live,
            Mode::Record => ServiceMode::Record,
            Mode::Replay => ServiceMode::Replay,
            Mode::Scripted => ServiceMode::Scripted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Plan {
    Bundled,
    Retention,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Replace the configured work directory.
    #[arg(long)]
    work_dir: Option<PathBuf>,
    /// Worker threads; 0 uses available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Clear a non-empty stage output directory instead of refusing.
    #[arg(long)]
    overwrite: bool,
    #[arg(long, value_enum)]
    service_mode: Option<Mode>,
    #[arg(long)]
    replay_dir: Option<PathBuf>,
    /// Agent history length during generation.
    #[arg(long)]
    history_window: Option<usize>,
    /// Query the agent without any history.
    #[arg(long)]
    stateless: bool,
    /// Observations shown to the trajectory judge (1-4).
    #[arg(long)]
    judge_images: Option<usize>,
    /// Previous steps per SFT sample.
    #[arg(long)]
    sft_history: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand keywords, search every source, download and deduplicate.
    Crawl(Common),
    /// Content filter, platform, task and steps, and observations.
    Process(Common),
    /// Ask the GUI agent for each step and split on failures.
    Generate(Common),
    /// Judge candidate trajectories and write the dataset.
    Filter(Common),
    /// Render SFT samples from a dataset.
    ExportSft {
        #[command(flatten)]
        common: Common,
        /// Dataset directory; defaults to the filter stage output.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Histograms over a dataset.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score evaluation records.
    Eval {
        #[command(flatten)]
        common: Common,
        /// JSONL evaluation records; defaults to `eval.records`.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Every stage in order.
    RunAll(Common),
    /// Write a synthetic corpus with its config and recorded service replies.
    Fixtures {
        #[arg(long, value_enum, default_value_t = Plan::Bundled)]
        plan: Plan,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        overwrite: bool,
    },
}

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => Level::WARN,
        (false, 0) => Level::INFO,
        (false, 1) => Level::DEBUG,
        _ => Level::TRACE,
    };
    let builder = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level);
    match cli.log_format {
        LogFormat::Json => builder.json().with_current_span(true).init(),
        LogFormat::Text => builder.init(),
    }
}

fn pipeline(c: &Common) -> Result<Pipeline, PipelineError> {
    let mut cfg = Config::load(&c.config)?;
    cfg.apply(&Overrides {
        work_dir: c.work_dir.clone(),
        workers: c.workers,
        mode: c.service_mode.map(ServiceMode::from),
        replay_dir: c.replay_dir.clone(),
        history_window: c.history_window,
        stateless: c.stateless,
        judge_images: c.judge_images,
        export_history: c.sft_history,
        eval_records: None,
    })?;
    Pipeline::new(cfg, c.overwrite)
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("report serialization")
}

fn run(cmd: &Command) -> Result<Value, PipelineError> {
    Ok(match cmd {
        Command::Crawl(c) => to_value(pipeline(c)?.crawl()?),
        Command::Process(c) => to_value(pipeline(c)?.process()?),
        Command::Generate(c) => to_value(pipeline(c)?.generate()?),
        Command::Filter(c) => to_value(pipeline(c)?.filter()?.1),
        Command::ExportSft { common, dataset } => to_value(pipeline(common)?.export_sft(dataset.as_deref())?),
        Command::Stats { common, dataset } => to_value(pipeline(common)?.stats(dataset.as_deref())?),
        Command::Eval { common, records } => to_value(pipeline(common)?.eval(records.as_deref())?),
        Command::RunAll(c) => to_value(pipeline(c)?.run_all()?),
        Command::Fixtures { plan, out, overwrite } => {
            let plan = match plan {
                Plan::Bundled => bundled_plan(),
                Plan::Retention => retention_plan(),
            };
            to_value(write_bundle(&plan, out, *overwrite)?)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    match run(&cli.command) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.summary());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
