use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use psg::{analyze, experiment, export};
use psg_core::games::ClassifyConfig;
use psg_core::{Mode, RuleSpec};
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "psg", version, about = "Project submission games for participatory budgeting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every game built from a directory of .pb files.
    Run {
        /// Comma-separated rules, e.g. basicav,phragmen,mes.
        #[arg(long, value_delimiter = ',', default_value = "basicav,phragmen,mes")]
        rules: Vec<String>,
        #[arg(long, default_value = "psg")]
        mode: Mode,
        /// Comma-separated proposer counts.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        proposers: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        max_projects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `file-order` or `explicit:<file.json>`.
        #[arg(long, default_value = "file-order")]
        tie_break: String,
        #[arg(long, default_value_t = 10)]
        max_iter: usize,
        /// Largest profile space searched exhaustively.
        #[arg(long)]
        max_profiles: Option<u128>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Analyze a single game stored as JSON.
    Analyze {
        game: PathBuf,
        #[arg(long)]
        rule: String,
        /// Overrides the mode stored in the game file.
        #[arg(long)]
        mode: Option<Mode>,
        /// Expected-results file to check against.
        #[arg(long)]
        expected: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        max_iter: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write worked example games and their expected results.
    Fixtures {
        name: Option<String>,
        #[arg(long)]
        all: bool,
        /// Also write each election as a .pb file.
        #[arg(long)]
        pb: bool,
        #[arg(long = "out")]
        output: PathBuf,
    },
}

/// Writes to stdout; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            rules,
            mode,
            proposers,
            max_projects,
            seed,
            tie_break,
            max_iter,
            max_profiles,
            input,
            output,
        } => {
            let specs = rules
                .iter()
                .map(|r| r.parse::<RuleSpec>().with_context(|| format!("rule `{r}`")))
                .collect::<Result<Vec<_>>>()?;
            let mut m = experiment::RunManifest::new(input, &specs, mode);
            m.seed = seed;
            m.proposers = proposers;
            m.max_projects = max_projects;
            m.tie_break = experiment::TieBreakConfig::parse(&tie_break)?;
            m.caps.max_iter = max_iter;
            if let Some(cap) = max_profiles {
                m.caps.max_profiles = cap;
            }
            let out = experiment::run_experiments(&m)?;
            experiment::write_outputs(&out, &output)?;
            emit(&experiment::summary_text(&out))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            game,
            rule,
            mode,
            expected,
            seed,
            max_iter,
            json,
        } => {
            let mut g: psg_core::Game = analyze::read_json(&game)?;
            if let Some(mode) = mode {
                g = g.with_mode(mode);
            }
            let spec: RuleSpec = rule.parse().with_context(|| format!("rule `{rule}`"))?;
            let sidecar = expected.map(|p| analyze::read_json(&p)).transpose()?;
            let cfg = ClassifyConfig {
                max_iter,
                seed,
                ..ClassifyConfig::default()
            };
            let report = analyze::analyze(&g, &spec, &cfg, sidecar.as_ref());
            if json {
                emit(&(serde_json::to_string_pretty(&report)? + "\n"))?;
            } else {
                emit(&analyze::report_text(&report))?;
            }
            Ok(if report.expected_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Fixtures { name, all, pb, output } => {
            for f in export::select(name.as_deref(), all)? {
                for path in export::write_fixture(&f, &output, pb)? {
                    emit(&format!("{}\n", path.display()))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
