//! Argument parsing and output writing.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use finsler_core::classify::TheoremId;

use crate::commands::{self, Outcome};
use crate::error::CliError;
use crate::scenario::{self, Input, Overrides, Scenario};
use crate::tolerances::parse_assignment;

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "Curvature, classification and theorem checks for doubly warped Finsler products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tensors, identity residuals and closed-form block agreement at every sample.
    Compute(RunArgs),
    /// Predicate verdicts, isotropy fits and factor reports.
    Classify(RunArgs),
    /// Check a theorem over a family file, or over one scenario.
    VerifyTheorem(VerifyArgs),
    /// Compare the jet engine with Richardson-extrapolated finite differences.
    OracleCheck(OracleArgs),
    /// Print the JSON schema of scenario files.
    Schema(SchemaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    /// The JSON report plus CSV tables; needs `--out`.
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// Directory for reports; without it the JSON report goes to stdout.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides sampling.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides jets.max_order (5 or 6).
    #[arg(long)]
    pub order: Option<usize>,
    /// Overrides one tolerance; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub tol: Vec<(String, f64)>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Theorem to check in addition to those the input lists; repeatable.
    #[arg(long, value_parser = parse_theorem)]
    pub theorem: Vec<TheoremId>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also emit the error-versus-step convergence table.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Print the theorem-family schema instead.
    #[arg(long)]
    pub family: bool,
}

fn parse_theorem(text: &str) -> Result<TheoremId, String> {
    TheoremId::parse(text).map_err(|e| e.to_string())
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, order: self.order, tolerances: self.tol.clone() }
    }

    fn scenario(&self) -> Result<Scenario, CliError> {
        match scenario::load(&self.scenario, &self.overrides())? {
            Input::Scenario(s) => Ok(*s),
            Input::Family(_) => Err(CliError::Usage(format!("{} is a theorem family; use verify-theorem", self.scenario.display()))),
        }
    }
}

/// Writes `<id>.<command>.json` (and CSV tables) under `dir`; returns the JSON path.
pub fn write_outcome(outcome: &Outcome, dir: &Path, format: Format) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
    let stem = format!("{}.{}", outcome.id, outcome.command);
    let json = dir.join(format!("{stem}.json"));
    std::fs::write(&json, &outcome.json).map_err(|source| CliError::Write { path: json.clone(), source })?;
    if format == Format::Csv {
        for (name, text) in &outcome.csv {
            let p = dir.join(format!("{stem}.{name}.csv"));
            std::fs::write(&p, text).map_err(|source| CliError::Write { path: p, source })?;
        }
    }
    Ok(json)
}

fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Compute(a) => commands::compute(&a.scenario()?),
        Command::Classify(a) => commands::classify(&a.scenario()?),
        Command::VerifyTheorem(v) => commands::verify_theorem(&scenario::load(&v.run.scenario, &v.run.overrides())?, &v.theorem),
        Command::OracleCheck(o) => commands::oracle_check(&o.run.scenario()?, o.sweep),
        Command::Schema(_) => unreachable!("handled before execution"),
    }
}

/// Runs one invocation; `Ok(pass)` reports whether every assertion held.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let args = match &cli.command {
        Command::Schema(s) => {
            print!("{}", commands::schema(s.family));
            return Ok(true);
        }
        Command::Compute(a) | Command::Classify(a) => a,
        Command::VerifyTheorem(v) => &v.run,
        Command::OracleCheck(o) => &o.run,
    };
    if args.format == Format::Csv && args.out.is_none() {
        return Err(CliError::Usage("--format csv needs --out".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", args.jobs.unwrap_or(0))))?;
    let outcome = pool.install(|| execute(&cli.command))?;
    match &args.out {
        Some(dir) => {
            let path = write_outcome(&outcome, dir, args.format)?;
            println!("{} {} -> {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.id, path.display());
        }
        None => print!("{}", outcome.json),
    }
    Ok(outcome.pass)
}
