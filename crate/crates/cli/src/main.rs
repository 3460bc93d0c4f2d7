use std::env;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lck_cli::{run, CliError, Mode, PartialConfig, RunOptions, Suite, SuiteConfig};

#[derive(Parser)]
#[command(name = "lck", version, about = "Numerical checks of locally conformally Kähler identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on a zoo manifold.
    Run(RunArgs),
    /// List the manifold selectors and suite names.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Zoo selector, e.g. `hopf{n=2}` or `calabi{ell=sin,b=pi}`.
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long = "suite", value_enum, num_args = 1..)]
    suites: Vec<Suite>,
    #[arg(long)]
    samples: Option<i64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    tol_id: Option<f64>,
    #[arg(long)]
    tol_chain: Option<f64>,
    #[arg(long)]
    tol_ode: Option<f64>,
    /// Evaluate at this comma-separated chart point instead of sampling.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<f64>>,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print the text summary (default when `--json` is absent).
    #[arg(long)]
    text: bool,
    /// Evaluate the samples of each suite in parallel; `LCK_THREADS` caps the pool.
    #[arg(long)]
    parallel: bool,
    /// Include wall times in the report.
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            manifold: self.manifold.clone(),
            suites: (!self.suites.is_empty()).then(|| self.suites.clone()),
            samples: self.samples,
            seed: self.seed,
            fd_step: self.fd_step,
            tol_id: self.tol_id,
            tol_chain: self.tol_chain,
            tol_ode: self.tol_ode,
            mode: self.mode,
            at: self.at.clone(),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = env::var("LCK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("LCK_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn execute(args: RunArgs) -> Result<i32, CliError> {
    let file = match &args.config {
        Some(path) => PartialConfig::load(path)?,
        None => PartialConfig::default(),
    };
    let config = SuiteConfig::from_partial(args.partial().over(file))?;
    if args.parallel {
        configure_threads()?;
    }
    let report = run(&config, RunOptions { parallel: args.parallel, timing: args.timing })?;
    match &args.json {
        Some(path) if path.as_os_str() == "-" => {
            io::stdout().write_all(report.to_json().as_bytes()).map_err(|source| CliError::Io { path: path.clone(), source })?
        }
        Some(path) => fs::write(path, report.to_json()).map_err(|source| CliError::Io { path: path.clone(), source })?,
        None => {}
    }
    if args.text || args.json.is_none() {
        print!("{}", report.to_text());
    }
    Ok(report.exit_code)
}

fn list() {
    println!("manifolds:");
    for sel in [
        "hopf{n=2,circumference=2pi}",
        "flat_inversion{n=2}",
        "warped{c=sin,base=cp1}",
        "calabi{ell=sin,b=pi,base=cp1}",
        "flat_c",
        "flat_c2",
        "cp1",
        "sphere{radius=1}",
    ] {
        println!("  {sel}");
    }
    println!("suites:");
    for s in Suite::ALL {
        println!("  {s}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            list();
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(args) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
