use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use varexp::evaluation::Aggregation;
use varexp::expertise::{Metric, Thresholds};
use varexp::pipeline;
use varexp::report;
use varexp::{Error, OutputFormat, Result, RunConfig};

#[derive(Parser)]
#[command(
    name = "varexp",
    version,
    about = "Who changes variable code in C projects, and do expertise metrics know it?"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Repository to analyze.
    #[arg(long, global = true, default_value = ".")]
    repo: PathBuf,
    /// Branch or revision to walk (default: HEAD).
    #[arg(long, global = true)]
    branch: Option<String>,
    /// Ignore commits before this instant (RFC 3339 or YYYY-MM-DD).
    #[arg(long, global = true, value_parser = parse_instant)]
    since: Option<DateTime<Utc>>,
    /// Ignore commits after this instant (RFC 3339 or YYYY-MM-DD).
    #[arg(long, global = true, value_parser = parse_instant)]
    until: Option<DateTime<Utc>>,
    /// Source file extensions, comma separated.
    #[arg(
        long = "extensions",
        global = true,
        value_delimiter = ',',
        default_value = "c,h"
    )]
    extensions: Vec<String>,
    /// Treat include guards as ordinary conditional blocks.
    #[arg(long, global = true)]
    keep_include_guards: bool,
    /// Walk only the first-parent chain of the branch.
    #[arg(long, global = true)]
    first_parent: bool,
    #[arg(long, global = true, default_value_t = varexp::expertise::DEFAULT_DOA_THRESHOLD)]
    doa_threshold: f64,
    #[arg(long, global = true, default_value_t = varexp::expertise::DEFAULT_OWNERSHIP_THRESHOLD)]
    ownership_threshold: f64,
    /// Also require this absolute DOA for authorship.
    #[arg(long, global = true)]
    doa_abs_floor: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = AggregationArg::Micro)]
    aggregation: AggregationArg,
    /// Directory for the change-classification cache.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Format printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Directory receiving analysis artifacts.
    #[arg(long, global = true, default_value = "varexp-out")]
    out: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Mine the history and write the analysis, scores and warnings.
    Analyze,
    /// Monthly generalist/specialist/mixed series and final shares.
    Specialization,
    /// Precision and recall of DOA and Ownership against variable-code changers.
    Evaluate {
        #[arg(long, value_enum, default_value_t = MetricArg::Both)]
        metric: MetricArg,
    },
    /// Project summary row with every column.
    Report,
    /// Long-form timeline series for plotting.
    PlotData,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Micro,
    Macro,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Doa,
    Ownership,
    Both,
}

fn parse_instant(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| format!("expected RFC 3339 or YYYY-MM-DD, got {s:?}"))
}

impl GlobalArgs {
    fn config(&self) -> RunConfig {
        let mut c = RunConfig::new(&self.repo, &self.out);
        c.branch = self.branch.clone();
        c.since = self.since;
        c.until = self.until;
        c.extensions = self.extensions.clone();
        c.exclude_include_guards = !self.keep_include_guards;
        c.first_parent = self.first_parent;
        c.thresholds = Thresholds {
            doa: self.doa_threshold,
            ownership: self.ownership_threshold,
            doa_abs_floor: self.doa_abs_floor,
        };
        c.aggregation = match self.aggregation {
            AggregationArg::Micro => Aggregation::Micro,
            AggregationArg::Macro => Aggregation::Macro,
        };
        c.cache_dir = self.cache_dir.clone();
        c.output_format = match self.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Markdown => OutputFormat::Markdown,
        };
        c.jobs = self.jobs;
        c
    }
}

fn run(command: &Command, config: &RunConfig) -> Result<Vec<u8>> {
    let format = config.output_format;
    Ok(match command {
        Command::Analyze => {
            let outcome = pipeline::run_analyze(config)?;
            let skeleton = report::report_skeleton(&outcome.analysis, config.aggregation);
            render_report(&skeleton, format)?
        }
        Command::Specialization => {
            let spec = pipeline::run_specialization(config)?;
            match format {
                OutputFormat::Csv => report::timeline_csv(&spec.snapshots)?,
                OutputFormat::Json => report::json_bytes(&spec)?,
                OutputFormat::Markdown => report::timeline_markdown(&spec).into_bytes(),
            }
        }
        Command::Evaluate { metric } => {
            let metrics: &[Metric] = match metric {
                MetricArg::Doa => &[Metric::Doa],
                MetricArg::Ownership => &[Metric::Ownership],
                MetricArg::Both => &[Metric::Doa, Metric::Ownership],
            };
            let rows = pipeline::run_evaluate(config, metrics)?;
            match format {
                OutputFormat::Csv => report::evaluation_csv(&rows)?,
                OutputFormat::Json => report::json_bytes(&rows)?,
                OutputFormat::Markdown => report::evaluation_markdown(&rows).into_bytes(),
            }
        }
        Command::Report => render_report(&pipeline::run_report(config)?, format)?,
        Command::PlotData => {
            let spec = pipeline::run_specialization(config)?;
            match format {
                OutputFormat::Csv => report::plot_data_csv(&spec.snapshots)?,
                OutputFormat::Json => report::json_bytes(&spec.snapshots)?,
                OutputFormat::Markdown => report::timeline_markdown(&spec).into_bytes(),
            }
        }
    })
}

fn render_report(r: &report::ProjectReport, format: OutputFormat) -> Result<Vec<u8>> {
    Ok(match format {
        OutputFormat::Csv => report::report_csv(r)?,
        OutputFormat::Json => report::json_bytes(r)?,
        OutputFormat::Markdown => report::report_markdown(r).into_bytes(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let config = cli.global.config();
    match run(&cli.command, &config) {
        Ok(bytes) => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(&bytes).and_then(|_| stdout.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!(
                        "error: {}",
                        Error::Io {
                            path: "<stdout>".into(),
                            source: e
                        }
                    );
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
