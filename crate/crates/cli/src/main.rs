//! `fppvar`: command-line front end to the numerical checks and the FPP
//! experiments.
//!
//! Exit status: 0 on success, 1 when a verification fails, 2 when the
//! command cannot run (usage, domain or I/O error).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgGroup, CommandFactory, FromArgMatches, Parser, Subcommand};
use fppvar::averaging::{self, AveragingFunction};
use fppvar::edgedist::{self, Family, Verdict};
use fppvar::poincare::{self, Method};
use fppvar::{experiments, fpp, phi};

#[derive(Debug, Parser)]
#[command(
    name = "fppvar",
    version,
    about = "Modified Poincaré inequality checks and FPP variance experiments"
)]
struct Cli {
    /// Flat `key=value` file supplying defaults for any long option.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write the output here instead of standard out.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// φ(u) = 2∫₀¹ u^{2t}/(1+t)² dt for u in [0, 1].
    Phi {
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
    },
    /// ψ(y) = g∘G⁻¹(H(y))/h(y) for an edge law.
    Psi {
        #[arg(long)]
        dist: Family,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
    },
    /// Nearly-gamma classification as JSON; exits 1 on a `fail` verdict.
    CheckNeargamma {
        #[arg(long)]
        dist: Family,
        /// Quantile grid size for the direct check.
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
    /// Modified Poincaré inequality for a registered test function, as JSON.
    VerifyPoincare {
        #[arg(long)]
        function: String,
        #[arg(long, value_enum, default_value = "quad")]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The averaging function g_m on {0,1}^{m²}.
    #[command(group(ArgGroup::new("action").required(true).args(["verify", "eval"])))]
    Averaging {
        #[arg(long)]
        m: u32,
        /// Exhaustive check of the averaging properties (m ≤ 4), as JSON.
        #[arg(long)]
        verify: bool,
        /// Evaluate g_m on a string of m² bits.
        #[arg(long, value_name = "BITS")]
        eval: Option<String>,
    },
    /// First passage percolation on a finite box.
    #[command(subcommand)]
    Fpp(FppCommand),
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Mode {
    Quad,
    Mc,
}

#[derive(Debug, clap::Args)]
struct FieldArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Target v = n·e₁.
    #[arg(long)]
    n: i64,
    #[arg(long, default_value = "exp:rate=1")]
    dist: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Box padding; defaults to max(⌈n/2⌉, 16).
    #[arg(long)]
    pad: Option<i64>,
}

#[derive(Debug, Subcommand)]
enum FppCommand {
    /// Passage time d_x(0, n·e₁) and its geodesic, as JSON.
    Run {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Passage time as one edge weight varies, as CSV `y,distance`.
    Response {
        #[command(flatten)]
        field: FieldArgs,
        /// Edge index in the box.
        #[arg(long)]
        edge: usize,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Largest y; defaults to twice the breakpoint (at least 1).
        #[arg(long)]
        y_max: Option<f64>,
    },
    /// Variance of f_{n·e₁} for several n, as CSV.
    Sweep {
        #[arg(long, default_value = "exp:rate=1")]
        dist: Family,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        ns: Vec<u32>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; defaults to all cores. Output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
}

enum Failure {
    /// Exit 2.
    Run(String),
    /// Exit 1, after the report has been written.
    Verification,
}

impl From<fppvar::Error> for Failure {
    fn from(e: fppvar::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(args) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => e.exit(),
        Err(ParseFailure::Config(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum ParseFailure {
    Clap(clap::Error),
    Config(String),
}

/// Parses `args`, filling options absent from the command line from the
/// `--config` file. Keys that the chosen subcommand does not accept are
/// ignored, so one file can serve several subcommands.
fn parse(mut args: Vec<OsString>) -> Result<Cli, ParseFailure> {
    let mut cmd = Cli::command();
    cmd.build();
    // Missing required options may come from the config file, so the first
    // pass only locates the subcommand and what the command line already set.
    let matches = lenient(cmd.clone())
        .try_get_matches_from(&args)
        .map_err(ParseFailure::Clap)?;
    if let Some(path) = matches.get_one::<PathBuf>("config") {
        let pairs = read_config(path).map_err(ParseFailure::Config)?;
        let mut sub = &cmd;
        let mut m = &matches;
        while let Some((name, next)) = m.subcommand() {
            sub = sub.find_subcommand(name).expect("matched subcommand exists");
            m = next;
        }
        for (key, value) in pairs {
            let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
                continue;
            };
            if key == "config" || m.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
                continue;
            }
            if arg.get_action().takes_values() {
                args.push(format!("--{key}").into());
                args.push(value.into());
            } else if value
                .parse::<bool>()
                .map_err(|_| ParseFailure::Config(format!("{key} expects true or false, got {value:?}")))?
            {
                args.push(format!("--{key}").into());
            }
        }
    }
    let matches = cmd.try_get_matches_from(&args).map_err(ParseFailure::Clap)?;
    Cli::from_arg_matches(&matches).map_err(ParseFailure::Clap)
}

fn lenient(cmd: clap::Command) -> clap::Command {
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    names
        .iter()
        .fold(cmd.ignore_errors(true), |cmd, name| cmd.mut_subcommand(name, lenient))
}

fn read_config(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                no + 1
            ));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn verdict(ok: bool) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Phi { u } => emit(out, &format!("{:?}", phi::phi(u)?))?,
        Command::Psi { dist, y } => emit(out, &format!("{:?}", edgedist::psi(&dist, y)?))?,
        Command::CheckNeargamma { dist, grid } => {
            let report = edgedist::classify_near_gamma(&dist, grid)?;
            emit(out, &json(&report))?;
            verdict(report.verdict != Verdict::Fail)?;
        }
        Command::VerifyPoincare {
            function,
            mode,
            samples,
            seed,
        } => {
            let f = poincare::lookup(&function)?;
            let method = match mode {
                Mode::Quad => Method::Quadrature(poincare::default_rule(f.dim())?),
                Mode::Mc => Method::MonteCarlo { samples, seed },
            };
            let report = poincare::verify_modified_poincare(&f, &method)?;
            emit(out, &json(&report))?;
            verdict(report.holds)?;
        }
        Command::Averaging { m, verify, eval } => {
            if verify {
                let report = averaging::verify_averaging_properties(m)?;
                emit(out, &json(&report))?;
                verdict(report.holds)?;
            } else if let Some(bits) = eval {
                let g = AveragingFunction::new(m)?;
                emit(out, &g.eval(&averaging::parse_bits(&bits)?)?.to_string())?;
            }
        }
        Command::Fpp(cmd) => run_fpp(cmd, out)?,
    }
    Ok(())
}

fn run_fpp(cmd: FppCommand, out: Option<&Path>) -> Result<(), Failure> {
    match cmd {
        FppCommand::Run { field } => {
            let (weights, v) = fpp::target_field(field.d, field.n, field.pad, &field.dist, field.seed)?;
            let origin = vec![0; field.d];
            emit(out, &json(&fpp::passage_time(&weights, &origin, &v)?))?;
        }
        FppCommand::Response {
            field,
            edge,
            points,
            y_max,
        } => {
            let (weights, v) = fpp::target_field(field.d, field.n, field.pad, &field.dist, field.seed)?;
            let ys = match y_max {
                Some(y_max) if y_max > 0.0 && points >= 2 => {
                    (0..points).map(|i| y_max * i as f64 / (points - 1) as f64).collect()
                }
                Some(y_max) => {
                    return Err(Failure::Run(format!(
                        "--y-max must be positive and --points at least 2, got {y_max} and {points}"
                    )))
                }
                None => fpp::default_y_grid(&weights, &v, edge, points)?,
            };
            let curve = fpp::single_edge_response(&weights, &v, edge, &ys)?;
            emit(out, &curve.to_csv())?;
            eprintln!(
                "g(0) = {}, C = {}, breakpoint = {}, max deviation from min(g(0)+y, C) = {:e}",
                curve.g0, curve.cap, curve.y_inf, curve.max_deviation
            );
        }
        FppCommand::Sweep {
            dist,
            d,
            ns,
            samples,
            seed,
            workers,
        } => {
            let result = experiments::sweep(&dist, d, &ns, samples, seed, workers)?;
            emit(out, &result.to_csv())?;
            if result.rows.len() >= 3 {
                let fit = experiments::fit_scaling(&result.rows)?;
                eprintln!(
                    "slope of ln var on ln n = {:.4} ± {:.4}, ratio bound = {:.4}",
                    fit.slope_loglog, fit.slope_stderr, fit.ratio_bound
                );
            }
        }
    }
    Ok(())
}
