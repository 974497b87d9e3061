//! `scanstat`: tail approximations, Monte Carlo oracles and constants for
//! scan statistics of marked Poisson fields.

mod commands;
mod config;
mod error;
mod shorthand;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::Outcome;
use crate::error::{CliError, Result};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("SCANSTAT_GIT_DESCRIBE"), ")");
const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "scanstat", version = VERSION, about = "Scan statistics of marked Poisson fields")]
struct Cli {
    /// JSON config whose keys are long flag names; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it [default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format [default: csv for table1, json otherwise].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tail approximation for P{max scan >= lambda c}.
    Approx(ApproxArgs),
    /// Direct Monte Carlo estimate of the tail probability.
    Oracle(OracleArgs),
    /// The constant K by one or more routes.
    KConst(KConstArgs),
    /// The overshoot constant nu_c.
    Nu(NuArgs),
    /// E[1/vol(Omega)] for a kernel, and the bound it gives on K.
    Omega(OmegaArgs),
    /// The constant K~ for locally stationary Gaussian fields.
    Gauss(GaussArgs),
    /// Normalised constants of the unit disc against c_hat, as CSV.
    Table1(Table1Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Approx(_) => "approx",
            Command::Oracle(_) => "oracle",
            Command::KConst(_) => "k-const",
            Command::Nu(_) => "nu",
            Command::Omega(_) => "omega",
            Command::Gauss(_) => "gauss",
            Command::Table1(_) => "table1",
        }
    }
}

/// Declares a subcommand's flags. Every flag is an optional string so that
/// config-file values of any JSON type can fill it; parsing happens later.
macro_rules! flag_struct {
    ($name:ident { $($(#[doc = $doc:literal])* $field:ident),* $(,)? }) => {
        #[derive(Args, Debug, Default, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case", deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[doc = $doc])*
                #[arg(long)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<String>,
            )*
        }
    };
}

flag_struct!(ApproxArgs {
    /// Kernel: disc, ball:R,D, box:B1,..,Bd, cylinder:R,H, polygon:X Y;X Y;.. or JSON.
    kernel,
    /// Mark law: unit, degenerate:ETA, gaussian:MEAN,SD, lattice:ETA;V=P;.. or JSON.
    law,
    /// Threshold per unit rate.
    c,
    /// Threshold given as M(theta) instead of c.
    c_hat,
    lambda,
    domain_volume,
    /// Domain box sides B1,..,Bd, used for its volume.
    domain,
    /// Route for K: local, occupation, rectangle, ball or omega [default: rectangle for boxes, else occupation].
    k_route,
    /// Use this K instead of estimating it.
    k,
    /// saturating (default) or linear.
    variant,
    /// Replicates for K [default: 20000].
    reps,
});

flag_struct!(OracleArgs {
    kernel,
    law,
    c,
    c_hat,
    lambda,
    /// Domain [0, S]^d.
    domain_side,
    /// Domain box sides B1,..,Bd.
    domain,
    /// exact (box kernels, d <= 2) or grid [default: exact when possible].
    method,
    /// Grid spacing [default: smallest kernel side / 20].
    step,
    /// Field replicates [default: 10000].
    reps,
    /// Write replicate scan maxima to this CSV file.
    dump,
    /// Also evaluate the approximation, with K by this route.
    k_route,
    /// Also evaluate the approximation with this K.
    k,
    /// Replicates for K [default: 20000].
    k_reps,
});

flag_struct!(KConstArgs {
    kernel,
    law,
    c,
    c_hat,
    /// Comma separated routes, or all [default: occupation].
    route,
    /// Replicates per route [default: 20000].
    reps,
});

flag_struct!(NuArgs {
    law,
    c,
    c_hat,
    /// Kernel whose volume sets the threshold density.
    kernel,
    /// Kernel volume when no kernel is given [default: 1].
    volume,
    /// Increasing levels [default: 10, 20, 40, 80 times max(eta, 1/theta)].
    levels,
    /// Walks per level [default: 20000].
    reps,
});

flag_struct!(OmegaArgs {
    kernel,
    /// Replicates [default: 100000].
    reps,
    /// With --law and --c or --c-hat, also report the bound on K.
    law,
    c,
    c_hat,
});

flag_struct!(GaussArgs {
    /// Local covariance exponent in (0, 2].
    alpha,
    /// Dimension 1, 2 or 3.
    d,
    /// Comma separated routes among pickands, clump, thm3, bound, or all [default: all].
    route,
    /// Replicates per route [default: 4000].
    reps,
    /// Slab width for the thm3 route [default: 0.1].
    xi,
    /// Quadrature nodes for the thm3 route [default: 8].
    nodes,
    /// Box sizes for the pickands route.
    m_list,
    /// Lattice step for the pickands route.
    step,
    /// Half-width of the region for the clump and thm3 routes.
    region,
    region_step,
    /// Local covariance scale, for the tail probability.
    a,
    /// Threshold, for the tail probability.
    c,
    /// Domain volume, for the tail probability.
    domain_volume,
});

flag_struct!(Table1Args {
    /// Comma separated rows among I, lower, II [default: I,lower,II].
    rows,
    /// Comma separated c_hat values, inf for the limit [default: 2,3,4,5,10,inf].
    chat,
    /// Replicates per entry, e.g. 1e5 [default: 100000].
    reps,
    /// Ray directions for volumes without an exact cell [default: 256].
    rays,
    /// Cell sampling for the occupation route: typical (a cell at a typical
    /// vertex, planar symmetric kernels) or origin [default: typical].
    sampler,
});

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            action: "write",
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { action: "write", path: "stdout".into(), source })
        }
    }
}

fn render(command: &str, seed: u64, outcome: &Outcome, format: Format) -> Result<String> {
    let config = Value::Object(outcome.config.clone());
    match format {
        Format::Json => {
            let envelope = json!({
                "command": command,
                "version": VERSION,
                "seed": seed,
                "config": config,
                "result": outcome.result,
            });
            let mut s = serde_json::to_string_pretty(&envelope).map_err(|e| CliError::usage(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => Ok(format!(
            "# command={command} version={VERSION} seed={seed}\n# config={config}\n{}",
            outcome.csv
        )),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut file = match &cli.config {
        Some(path) => config::read_file(path)?,
        None => Default::default(),
    };
    let mut global = |key| config::take_global(&mut file, key).filter(|v| !v.is_null());
    let file_seed = global("seed");
    let file_workers = global("workers");
    let file_format = global("format");
    let file_out = global("out");
    global("config");

    let parse_u64 = |v: Value, key: &str| -> Result<u64> {
        match &v {
            Value::Number(n) => n.as_u64(),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
        .ok_or_else(|| CliError::usage(format!("config {key}: expected a nonnegative integer, got {v}")))
    };
    let seed = match (cli.seed, file_seed) {
        (Some(s), _) => s,
        (None, Some(v)) => parse_u64(v, "seed")?,
        (None, None) => DEFAULT_SEED,
    };
    let workers = match (cli.workers, file_workers) {
        (Some(w), _) => Some(w),
        (None, Some(v)) => Some(parse_u64(v, "workers")? as usize),
        (None, None) => None,
    };
    let format = match (cli.format, file_format) {
        (Some(f), _) => f,
        (None, Some(v)) => serde_json::from_value(v).map_err(|e| CliError::usage(format!("config format: {e}")))?,
        (None, None) if matches!(cli.command, Command::Table1(_)) => Format::Csv,
        (None, None) => Format::Json,
    };
    let out = match (cli.out, file_out) {
        (Some(p), _) => Some(p),
        (None, Some(Value::String(s))) => Some(PathBuf::from(s)),
        (None, Some(v)) => return Err(CliError::usage(format!("config out: expected a path, got {v}"))),
        (None, None) => None,
    };

    let name = cli.command.name();
    let dispatch = || -> Result<Outcome> {
        match &cli.command {
            Command::Approx(a) => commands::approx(config::merge(a, file.clone())?, seed),
            Command::Oracle(a) => commands::oracle(config::merge(a, file.clone())?, seed),
            Command::KConst(a) => commands::k_const(config::merge(a, file.clone())?, seed),
            Command::Nu(a) => commands::nu(config::merge(a, file.clone())?, seed),
            Command::Omega(a) => commands::omega(config::merge(a, file.clone())?, seed),
            Command::Gauss(a) => commands::gauss(config::merge(a, file.clone())?, seed),
            Command::Table1(a) => commands::table1(config::merge(a, file.clone())?, seed),
        }
    };
    let outcome = match workers {
        Some(0) => return Err(CliError::usage("--workers must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {n} workers: {e}")))?
            .install(dispatch)?,
        None => dispatch()?,
    };
    write_output(&out, &render(name, seed, &outcome, format)?)?;
    match outcome.failure {
        Some(f) => Err(CliError::Diagnostic(f)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
