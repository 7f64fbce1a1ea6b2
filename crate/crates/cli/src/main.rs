//! Command-line front end: discover models from logs, generate test logs
//! from models, verify soundness, and report metrics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use procmine::bpmn::BpmnModel;
use procmine::dfg::{build_dfg, discover_loops, RelationMode};
use procmine::metrics::compute_metrics;
use procmine::parse::{parse_log, LogFormat, ParseOptions};
use procmine::pipeline::{discover, Oracle, PipelineConfig};
use procmine::simulate::{generate_log, SimConfig};
use procmine::verify::{check_soundness, VerifyConfig};

#[derive(Parser)]
#[command(name = "procmine", version, about = "Process discovery from lifecycle event logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover a BPMN model from an event log
    Discover(DiscoverArgs),
    /// Generate a synthetic event log by playing out a BPMN model
    Generate(GenerateArgs),
    /// Check a BPMN model for soundness
    Verify(VerifyArgs),
    /// Print simplicity metrics for a BPMN model
    Metrics(MetricsArgs),
    /// Export the directly-follows graph of a log as DOT
    Dfg(DfgArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Xes,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Refined,
    Classic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Classic,
    Imlc,
    Refined,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Event log (CSV or XES)
    input: PathBuf,
    /// Output BPMN file
    #[arg(short, long)]
    output: PathBuf,
    /// Log format; inferred from the file extension when omitted
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Concurrency threshold in (0, 1]
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Frequency-filter percentile in [0, 1]
    #[arg(long, default_value_t = 0.4)]
    eta: f64,
    #[arg(long, value_enum, default_value = "refined")]
    oracle: OracleArg,
    /// Skip inclusive-gateway detection
    #[arg(long)]
    no_or_detection: bool,
    /// Skip the loop-repetition repair pass
    #[arg(long)]
    no_loop_repair: bool,
    /// Skip infrequent-edge filtering
    #[arg(long)]
    no_filter: bool,
    /// Synthesize matching events for unpaired lifecycle entries instead
    /// of rejecting the log
    #[arg(long)]
    repair_pairing: bool,
    /// Also write the annotated directly-follows graph as DOT
    #[arg(long)]
    export_dfg: Option<PathBuf>,
    /// Also write overlap statistics as JSON
    #[arg(long)]
    export_stats: Option<PathBuf>,
    /// Print model metrics to stdout as JSON
    #[arg(long)]
    metrics: bool,
    /// Verify the discovered model and exit with status 3 if unsound
    #[arg(long)]
    fail_on_unsound: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// BPMN model to play out
    model: PathBuf,
    /// Output CSV event log
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 100)]
    traces: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    model: PathBuf,
    /// Maximum number of markings to explore
    #[arg(long, default_value_t = 1_000_000)]
    bound: usize,
    /// Exit with status 3 when the model is unsound
    #[arg(long)]
    fail_on_unsound: bool,
}

#[derive(Args)]
struct MetricsArgs {
    model: PathBuf,
}

#[derive(Args)]
struct DfgArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Which directly-follows relation to build
    #[arg(long, value_enum, default_value = "refined")]
    mode: ModeArg,
}

fn infer_format(path: &Path, arg: Option<FormatArg>) -> Result<LogFormat> {
    match arg {
        Some(FormatArg::Csv) => Ok(LogFormat::Csv),
        Some(FormatArg::Xes) => Ok(LogFormat::Xes),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(LogFormat::Csv),
            Some("xes") => Ok(LogFormat::Xes),
            other => bail!(
                "cannot infer log format from extension {:?}; pass --format",
                other
            ),
        },
    }
}

/// Write via a temp file and rename, so readers never see partial output.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn read_log(path: &Path, format: Option<FormatArg>, repair: bool) -> Result<procmine::event_log::RefinedLog> {
    let format = infer_format(path, format)?;
    let content = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let options = ParseOptions {
        pairing: if repair {
            procmine::event_log::PairingMode::Repair
        } else {
            procmine::event_log::PairingMode::Strict
        },
    };
    Ok(parse_log(content.as_bytes(), format, &options)?)
}

fn read_model(path: &Path) -> Result<BpmnModel> {
    let content = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(BpmnModel::from_xml(&content)?)
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Discover(args) => {
            if !(args.epsilon > 0.0 && args.epsilon <= 1.0) {
                bail!("epsilon must lie in (0, 1], got {}", args.epsilon);
            }
            let log = read_log(&args.input, args.format, args.repair_pairing)?;
            let config = PipelineConfig {
                epsilon: args.epsilon,
                eta: args.eta,
                oracle: match args.oracle {
                    OracleArg::Refined => Oracle::Refined,
                    OracleArg::Classic => Oracle::Classic,
                },
                filter_enabled: !args.no_filter,
                loop_repair: !args.no_loop_repair,
                or_detection: !args.no_or_detection,
            };
            let result = discover(&log, &config)?;
            for line in result.summary(&log) {
                eprintln!("{line}");
            }
            write_atomic(&args.output, &result.model.to_xml())?;
            if let Some(path) = &args.export_dfg {
                write_atomic(path, &result.dfg.to_dot())?;
            }
            if let Some(path) = &args.export_stats {
                write_atomic(path, &serde_json::to_string_pretty(&result.stats.to_json())?)?;
            }
            if args.metrics {
                println!("{}", serde_json::to_string_pretty(&compute_metrics(&result.model).to_json())?);
            }
            if args.fail_on_unsound {
                let report = check_soundness(&result.model, &VerifyConfig::default())?;
                if !report.sound {
                    eprintln!("model is unsound: {}", report.diagnostics.join("; "));
                    return Ok(ExitCode::from(3));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate(args) => {
            let model = read_model(&args.model)?;
            let log = generate_log(&model, &SimConfig { traces: args.traces, seed: args.seed })?;
            write_atomic(&args.output, &log.to_csv())?;
            eprintln!("wrote {} traces ({} events)", log.traces.len(), log.total_events());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let model = read_model(&args.model)?;
            let report = check_soundness(&model, &VerifyConfig { state_bound: args.bound })?;
            println!("{}", serde_json::to_string_pretty(&report.to_json())?);
            if args.fail_on_unsound && !report.sound {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics(args) => {
            let model = read_model(&args.model)?;
            println!("{}", serde_json::to_string_pretty(&compute_metrics(&model).to_json())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Dfg(args) => {
            let log = read_log(&args.input, args.format, false)?;
            let dfg = match args.mode {
                ModeArg::Classic => build_dfg(&log, RelationMode::Classic)?,
                ModeArg::Imlc => build_dfg(&log, RelationMode::Imlc)?,
                ModeArg::Refined => discover_loops(build_dfg(&log, RelationMode::Refined)?, &log),
            };
            write_atomic(&args.output, &dfg.to_dot())?;
            eprintln!("{} nodes, {} edges", dfg.nodes.len(), dfg.edges.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// 1 for problems with the input itself, 2 for failures further down the
/// pipeline (discovery, simulation, verification).
fn classify(err: &anyhow::Error) -> u8 {
    use procmine::Error::*;
    match err.downcast_ref::<procmine::Error>() {
        Some(
            Malformed { .. }
            | UnknownLifecycle { .. }
            | MissingTimestamp { .. }
            | EmptyLog
            | UnmatchedLifecycle { .. }
            | Io(_),
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}
