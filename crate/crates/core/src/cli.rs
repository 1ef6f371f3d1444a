//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
//! Failures print a single `error: <stage>: <message>` line on stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::catalog::SfcrDocument;
use crate::experiment::{
    render_histograms, render_report, run_experiment, solve, write_files, Experiment, ExperimentError,
    ExperimentReport, ReportFormat, RunOptions, Stage,
};

pub const OUTPUT_ENV: &str = "RASE_SIM_OUTPUT";

#[derive(Debug, Parser)]
#[command(name = "rase-sim", version, about = "Service function chain embedding simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve, simulate and write reports.
    Run(RunArgs),
    /// Run only the solver and print per-request outcomes.
    Solve(SolveArgs),
    /// Expand request templates into a request file.
    Generate(GenerateArgs),
    /// Re-aggregate an existing report.json into CSV and histogram files.
    Report(ReportArgs),
    /// Check a config and exit.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Both,
}

impl FormatArg {
    fn formats(self) -> Vec<ReportFormat> {
        match self {
            FormatArg::Csv => vec![ReportFormat::Csv],
            FormatArg::Json => vec![ReportFormat::Json],
            FormatArg::Both => vec![ReportFormat::Json, ReportFormat::Csv],
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment config file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write into exactly this directory instead of a timestamped one.
    #[arg(long, value_name = "PATH", env = OUTPUT_ENV)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write latency histograms with this bin width (ms).
    #[arg(long, value_name = "MS")]
    pub bin_width: Option<f64>,
    /// Maximum concurrent GA evaluations.
    #[arg(long, value_name = "N")]
    pub parallel: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_name = "N")]
    pub parallel: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_name = "PATH", env = OUTPUT_ENV)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Existing report.json.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Defaults to the directory holding the input report.
    #[arg(long, value_name = "PATH")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_name = "MS")]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn load(args: &ConfigArgs) -> Result<Experiment, ExperimentError> {
    let exp = Experiment::load(&args.config)?;
    Ok(match args.seed {
        Some(s) => exp.with_seed(s),
        None => exp,
    })
}

fn timestamped(base: &Path) -> PathBuf {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    base.join(format!("run-{secs}"))
}

fn output_dir(pinned: Option<&PathBuf>, exp: &Experiment) -> PathBuf {
    match pinned {
        Some(p) => p.clone(),
        None => timestamped(Path::new(exp.config.output.directory.as_deref().unwrap_or("results"))),
    }
}

fn check_bin_width(w: f64) -> Result<f64, ExperimentError> {
    if w > 0.0 && w.is_finite() {
        Ok(w)
    } else {
        Err(ExperimentError::config("--bin-width must be positive"))
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), ExperimentError> {
    let exp = load(&args.config)?;
    let bin_width = args.bin_width.map(check_bin_width).transpose()?;
    let formats = args.output.format.map(FormatArg::formats).unwrap_or_else(|| exp.config.output.formats.clone());
    let dir = output_dir(args.output.output_dir.as_ref(), &exp);
    let report = run_experiment(&exp, &RunOptions { parallelism: args.parallel })?;
    let mut files = render_report(&report, &formats)?;
    if let Some(w) = bin_width {
        files.push(("latency_hist.csv".into(), render_histograms(&report, w)?));
    }
    let written = write_files(&dir, &files)?;
    if !args.config.quiet {
        let _ = writeln!(out, "acceptance_ratio={}", report.acceptance_ratio);
        if let Some(l) = report.mean_latency_ms {
            let _ = writeln!(out, "mean_latency_ms={l}");
        }
        let _ = writeln!(out, "solve_time_ms={:.3}", report.solve_time.as_secs_f64() * 1e3);
        for p in written {
            let _ = writeln!(out, "wrote {}", p.display());
        }
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), ExperimentError> {
    let exp = load(&args.config)?;
    let solved = solve(&exp, &RunOptions { parallelism: args.parallel })?;
    let ratio = solved.scheme.acceptance_ratio().map_err(|e| ExperimentError::new(Stage::Aggregate, e))?;
    if !args.config.quiet {
        for o in crate::experiment::outcome_records(&exp, &solved.scheme) {
            let _ = match (&o.reason, o.accepted) {
                (_, true) => writeln!(out, "{} accepted {}", o.sfcr_id, o.placement.join(",")),
                (Some(r), false) => writeln!(out, "{} rejected {r}", o.sfcr_id),
                (None, false) => writeln!(out, "{} rejected", o.sfcr_id),
            };
        }
    }
    let _ = writeln!(out, "acceptance_ratio={ratio}");
    Ok(())
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<(), ExperimentError> {
    let exp = load(&args.config)?;
    let dir = output_dir(args.output_dir.as_ref(), &exp);
    let doc = SfcrDocument { sfcrs: exp.sfcrs.clone() };
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| ExperimentError::new(Stage::Io, e))?;
    bytes.push(b'\n');
    let written = write_files(&dir, &[("sfcrs.json".into(), bytes)])?;
    if !args.config.quiet {
        let _ = writeln!(out, "generated {} sfcrs", exp.sfcrs.len());
        for p in written {
            let _ = writeln!(out, "wrote {}", p.display());
        }
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> Result<(), ExperimentError> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| ExperimentError::config(format!("{}: {e}", args.input.display())))?;
    let report = ExperimentReport::from_json(&text)?;
    let bin_width = check_bin_width(args.bin_width.unwrap_or(crate::telemetry::DEFAULT_BIN_WIDTH_MS))?;
    let formats = args.format.map(FormatArg::formats).unwrap_or_else(|| vec![ReportFormat::Csv]);
    let dir = args.output_dir.clone().unwrap_or_else(|| args.input.parent().map(Path::to_path_buf).unwrap_or_default());
    let mut files = render_report(&report, &formats)?;
    files.push(("latency_hist.csv".into(), render_histograms(&report, bin_width)?));
    let written = write_files(&dir, &files)?;
    if !args.quiet {
        for p in written {
            let _ = writeln!(out, "wrote {}", p.display());
        }
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), ExperimentError> {
    let exp = load(&args.config)?;
    if !args.config.quiet {
        let _ = writeln!(
            out,
            "ok: {} sfcrs, {} hosts, solver {}",
            exp.sfcrs.len(),
            exp.network.hosts().len(),
            exp.config.solver.kind
        );
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("invalid arguments");
                    let first = first.trim_start_matches("error: ");
                    let _ = writeln!(err, "error: usage: {first}");
                    1
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Report(a) => cmd_report(a, out),
        Command::Validate(a) => cmd_validate(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let message = e.message.replace('\n', " ");
            let _ = writeln!(err, "error: {}: {message}", e.stage);
            if e.is_config() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("rase-sim").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_lists_flags() {
        for cmd in ["run", "solve", "generate", "validate"] {
            let (code, out, _) = run(&[cmd, "--help"]);
            assert_eq!(code, 0);
            for flag in ["--config", "--seed", "--quiet"] {
                assert!(out.contains(flag), "{cmd} help lacks {flag}");
            }
        }
        let (_, out, _) = run(&["run", "--help"]);
        for flag in ["--output-dir", "--format", "--bin-width", "--parallel"] {
            assert!(out.contains(flag), "run help lacks {flag}");
        }
        let (_, out, _) = run(&["report", "--help"]);
        for flag in ["--input", "--output-dir", "--format", "--bin-width"] {
            assert!(out.contains(flag), "report help lacks {flag}");
        }
    }

    #[test]
    fn unknown_flag_exits_one() {
        let (code, _, err) = run(&["validate", "--config", "x.json", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error: usage:"));
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn missing_config_exits_one() {
        let (code, _, err) = run(&["validate", "--config", "/nonexistent/cfg.json"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error: config:"));
    }
}
