//! `robustdeg` command-line front end: experiment configs in, degradation
//! curves out.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use robustdeg::engine::{
    figure_reuse_curves, lower_bound_curve, run_conventional, run_sample_reuse, theoretical_reuse_factor,
    FigureConfig, RadiusGrid,
};
use robustdeg::uncertainty::radial_cdf;

use crate::config::{parse_config, ExperimentConfig};
use crate::output::{curve_csv, curve_json, curve_svg, figures_csv, format_float};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 1.
    Config(String),
    /// Failure while running or writing results; exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn runtime<E: fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "robustdeg", version, about = "Robustness degradation curves by sample reuse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path; CSV goes to stdout when no output is configured.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample-reuse estimate of the degradation curve.
    Run(RunArgs),
    /// Conventional estimate with N fresh samples at every radius.
    Baseline(RunArgs),
    /// Theoretical reuse factor on the (a, b, l) linspace grid.
    Factor {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        d: u32,
    },
    /// Reuse factor against dimension for the four standard grids.
    Figures {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        d_max: u32,
    },
    /// Radial CDF of the configured sampler against the exact law.
    SamplerTest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn run_experiment(args: RunArgs, reuse: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut config: ExperimentConfig = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        if workers == 0 {
            return Err(CliError::Config("--workers must be >= 1".into()));
        }
        config.workers = workers;
    }
    if args.out.is_some() {
        config.outputs.csv = args.out;
    }
    if args.json.is_some() {
        config.outputs.json = args.json;
    }
    if args.svg.is_some() {
        config.outputs.svg = args.svg;
    }

    let experiment = config.resolve()?;
    let engine = config.engine_config(&experiment);
    let (curve, report) = if reuse {
        let (curve, report) = run_sample_reuse(&engine, &experiment.requirement).map_err(runtime)?;
        (curve, Some(report))
    } else {
        (run_conventional(&engine, &experiment.requirement).map_err(runtime)?, None)
    };
    let lower = lower_bound_curve(&curve);

    let csv = curve_csv(&curve, &lower);
    let outputs = &config.outputs;
    match &outputs.csv {
        Some(path) => write_file(path, &csv)?,
        None if outputs.json.is_none() && outputs.svg.is_none() => out.write_all(csv.as_bytes()).map_err(runtime)?,
        None => {}
    }
    if let Some(path) = &outputs.json {
        write_file(path, &curve_json(&config, &curve, &lower, report.as_ref()))?;
    }
    if let Some(path) = &outputs.svg {
        let title = if reuse { "Sample-reuse estimate" } else { "Conventional estimate" };
        write_file(path, &curve_svg(&curve, &lower, title))?;
    }

    let _ = writeln!(
        err,
        "{} radii, N = {}, {} predicate evaluations",
        curve.points.len(),
        curve.samples_per_radius,
        curve.total_fresh()
    );
    if let Some(report) = report {
        let _ = writeln!(
            err,
            "reuse factor {} (theoretical {}, d = {})",
            format_float(report.empirical_factor),
            format_float(report.theoretical_factor),
            report.dimension
        );
    }
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run(args) => run_experiment(args, true, out, err),
        Command::Baseline(args) => run_experiment(args, false, out, err),
        Command::Factor { l, a, b, d } => {
            let grid = RadiusGrid::linspace(a, b, l).map_err(|e| CliError::Config(e.to_string()))?;
            writeln!(out, "{}", theoretical_reuse_factor(&grid, d)).map_err(runtime)
        }
        Command::Figures { out: path, d_max } => {
            let table = figure_reuse_curves(&FigureConfig::standard(), d_max).map_err(runtime)?;
            let csv = figures_csv(&table);
            match path {
                Some(p) => write_file(&p, &csv),
                None => out.write_all(csv.as_bytes()).map_err(runtime),
            }
        }
        Command::SamplerTest {
            config,
            samples,
            seed,
            radius,
        } => {
            let config = parse_config(&config)?;
            let set = config.set()?;
            let ts = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0];
            let points = radial_cdf(&set, radius, samples, seed.unwrap_or(config.seed), &ts)
                .map_err(|e| match e {
                    robustdeg::Error::InvalidArgument(m) => CliError::Config(m),
                    other => runtime(other),
                })?;
            let _ = writeln!(err, "dimension d = {}, {samples} samples at r = {radius}", set.dimension());
            let mut text = String::from("t,empirical,expected,sigma,z\n");
            for p in points {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_float(p.t),
                    format_float(p.empirical),
                    format_float(p.expected),
                    format_float(p.sigma),
                    format_float(p.z_score())
                ));
            }
            out.write_all(text.as_bytes()).map_err(runtime)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_command<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
