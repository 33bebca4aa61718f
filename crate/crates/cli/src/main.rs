use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boussinesq_ist::Error;
use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{Failure, Outcome};
use config::{RunConfig, Suite};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;

/// Direct scattering and RH data for the good Boussinesq equation.
#[derive(Parser)]
#[command(name = "bsq", version)]
struct Cli {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the k-grid maps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the default configuration as JSON and exit.
    #[arg(long)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// s and s^A samples on the k-grid.
    Scatter,
    /// r1, r2 samples, assumption checks and the RH export.
    Reflect,
    /// k → 0 coefficients on the x-grid.
    ExpandZero,
    /// f_j along a ray of D1 and a zero scan.
    Fredholm,
    /// Jump matrices on the rays.
    Jump,
    /// u reconstructed from the large-k limit of M.
    Recover,
    /// Pseudospectral evolution and the reflection time law.
    Evolve,
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Option<Suite>,
    },
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::SingularDiagonalizer => "singular-diagonalizer",
        Error::Origin => "origin",
        Error::Index { .. } => "index",
        Error::Singular(_) => "singular",
        Error::DomainViolation { .. } => "domain-violation",
        Error::ZeroMeanViolation(_) => "zero-mean-violation",
        Error::PossibleSoliton { .. } => "possible-soliton",
        Error::FredholmSingular { .. } => "fredholm-singular",
        Error::AssumptionViolation(_) => "assumption-violation",
        Error::InsufficientR(_) => "insufficient-r",
        Error::EvolutionDiverged(_) => "evolution-diverged",
        Error::ExtrapolationRefused(_) => "extrapolation-refused",
        Error::GridEmpty(_) => "grid-empty",
        Error::PatternFit(_) => "pattern-fit",
        Error::StepUnderflow(_) => "step-underflow",
        Error::Invalid(_) => "invalid-input",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// Bad input maps to 2, every numerical failure to 3.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid(_)
        | Error::GridEmpty(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Index { .. }
        | Error::Origin
        | Error::DomainViolation { .. }
        | Error::ZeroMeanViolation(_) => EXIT_CONFIG,
        _ => EXIT_ASSUMPTION,
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn prepare_out(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".bsq-write-check");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(probe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        println!("{}", serde_json::to_string_pretty(&RunConfig::default()).expect("defaults serialize"));
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        return fail("usage", "no command given; see --help".into(), EXIT_CONFIG);
    };
    let cfg = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(msg) => return fail("config", msg, EXIT_CONFIG),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail("config", "--threads must be at least 1".into(), EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("config", e.to_string(), EXIT_CONFIG);
        }
    }
    if let Err(e) = prepare_out(&cli.out) {
        return fail("config", format!("{}: {e}", cli.out.display()), EXIT_CONFIG);
    }
    let data = match cfg.data() {
        Ok(d) => d,
        Err(e) => return fail(error_kind(&e), e.to_string(), exit_code(&e)),
    };
    let out = cli.out.as_path();
    let result = match command {
        Command::Scatter => commands::scatter(&cfg, &data, out),
        Command::Reflect => commands::reflect(&cfg, &data, out),
        Command::ExpandZero => commands::expand_zero(&cfg, &data, out),
        Command::Fredholm => commands::fredholm(&cfg, &data, out),
        Command::Jump => commands::jump(&cfg, &data, out),
        Command::Recover => commands::recover(&cfg, &data, out),
        Command::Evolve => commands::evolve_cmd(&cfg, &data, out),
        Command::Verify { suite } => commands::verify(&cfg, &data, suite.unwrap_or(cfg.suite), out),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => fail("verification", "one or more checks failed".into(), EXIT_VERIFY),
        Ok(Outcome::AssumptionFailed) => {
            fail("assumption", "assumption checks flagged the data; outputs were written".into(), EXIT_ASSUMPTION)
        }
        Err(Failure(e)) => fail(error_kind(&e), e.to_string(), exit_code(&e)),
    }
}
