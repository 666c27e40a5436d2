use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use missmass_cli::config::{self, Kind};
use missmass_cli::error::{CliError, Result};
use missmass_cli::pipeline;
use missmass_cli::render::{self, Format};

#[derive(Parser)]
#[command(
    name = "missmass",
    version,
    about = "Missing-mass estimation laboratory",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Good-Turing multiplicative loss across sample sizes
    Risk(RunArgs),
    /// Loss curve with a log-log fit against the n^(-alpha/2) target
    Rate(RunArgs),
    /// Loss curve on a geometric law, where no estimator is consistent
    GeometricProbe(RunArgs),
    /// Singleton-count deviation frequency against the analytic bound
    Concentration(RunArgs),
    /// KS check of the Dirichlet-process posterior Beta(1, n)
    PosteriorDp(RunArgs),
    /// KS check of the stable-process posterior mixture
    PosteriorStable(RunArgs),
    /// Quantiles of K_n / n^alpha under the stable prior
    KnScaling(RunArgs),
    /// Margins for the density sup bound and the median gap bound
    Lemmas(RunArgs),
    /// Lower-bound profile for relative-error estimation
    Impossibility(RunArgs),
    /// Check a config and print the effective settings without running
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output rendering
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the rendered output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker pool size (defaults to the number of cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Path to the TOML experiment config
    #[arg(long)]
    config: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match execute(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Risk(args) => run_kind(Kind::Risk, &args),
        Command::Rate(args) => run_kind(Kind::Rate, &args),
        Command::GeometricProbe(args) => run_kind(Kind::GeometricProbe, &args),
        Command::Concentration(args) => run_kind(Kind::Concentration, &args),
        Command::PosteriorDp(args) => run_kind(Kind::PosteriorDp, &args),
        Command::PosteriorStable(args) => run_kind(Kind::PosteriorStable, &args),
        Command::KnScaling(args) => run_kind(Kind::KnScaling, &args),
        Command::Lemmas(args) => run_kind(Kind::Lemmas, &args),
        Command::Impossibility(args) => run_kind(Kind::Impossibility, &args),
        Command::Validate(args) => run_validate(&args),
    }
}

fn run_kind(kind: Kind, args: &RunArgs) -> Result<i32> {
    let raw = config::load(&args.config)?;
    if raw.kind != kind {
        return Err(CliError::Config(format!(
            "config kind {} does not match subcommand {kind}",
            raw.kind
        )));
    }
    let cfg = raw.effective(config::env_seed()?);
    let diags = config::validate(&cfg);
    if !diags.is_empty() {
        for diag in &diags {
            eprintln!("diagnostic: {diag}");
        }
        return Err(CliError::Config(format!(
            "{} validation diagnostic(s)",
            diags.len()
        )));
    }
    if let Some(seed) = cfg.master_seed {
        eprintln!("effective master_seed: {seed}");
    }
    let record = pipeline::run(&cfg, args.workers)?;
    let rendered = render::render(&record, args.format)?;
    match &args.out {
        Some(path) => std::fs::write(path, rendered.as_bytes())?,
        None => {
            print!("{rendered}");
            std::io::stdout().flush()?;
        }
    }
    if !record.invariant.passed {
        eprintln!("invariant violated: {}", record.invariant.details);
        return Ok(2);
    }
    Ok(0)
}

fn run_validate(args: &ValidateArgs) -> Result<i32> {
    let cfg = config::load(&args.config)?.effective(config::env_seed()?);
    let diags = config::validate(&cfg);
    if diags.is_empty() {
        let text = toml::to_string_pretty(&cfg)
            .map_err(|e| CliError::Config(format!("cannot render effective config: {e}")))?;
        print!("{text}");
        std::io::stdout().flush()?;
        Ok(0)
    } else {
        for diag in &diags {
            println!("diagnostic: {diag}");
        }
        Ok(1)
    }
}
