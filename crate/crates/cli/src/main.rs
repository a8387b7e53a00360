//! `pansu-lab`: numerical verification harness for the Pansu-sphere
//! foliation and the quantitative isoperimetric inequalities.

mod checks;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pansu_core::report::{format_real, Tally};
use pansu_core::{Status, VerificationReport};

use config::{ConfigError, Format, HarnessConfig, DEFAULT_CONFIG};

#[derive(Debug, Parser)]
#[command(name = "pansu-lab", version, about)]
struct Cli {
    /// JSON configuration file; the embedded default is used otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated cylinder parameters, overriding `epsilons`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    epsilon: Option<Vec<f64>>,
    /// Dimension of `H^n`, overriding `n`.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Seed for every random draw, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Root residuals, unit norm and curvature of the calibration field,
    /// leaf duality, continuity across the boundary and Gauss–Green.
    VerifyFoliation,
    /// Curvature-gap bounds on f_z and the pop inequality.
    VerifyBounds,
    /// Sweep of volume-matched competitors through the inequality chain.
    RunCompetitors,
    /// Print ω_2n, the cylinder constants and the volume and perimeter of E.
    Constants,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyFoliation => "verify-foliation",
            Command::VerifyBounds => "verify-bounds",
            Command::RunCompetitors => "run-competitors",
            Command::Constants => "constants",
        }
    }
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("pansu-lab: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn resolve_config(cli: &Cli) -> Result<HarnessConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => HarnessConfig::load(path)?,
        None => HarnessConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(eps) = &cli.epsilon {
        cfg.epsilons = eps.clone();
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("PANSU_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| format!("invalid PANSU_LAB_THREADS `{value}`: expected a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn print_rows(rows: &[VerificationReport]) {
    for r in rows {
        let eps = r.inputs.get("eps").map_or_else(String::new, |v| v.to_string());
        match &r.message {
            Some(m) if r.status == Status::Error => println!("{:<5}  {:<22} eps={eps}  {m}", r.status, r.check_id),
            _ => println!(
                "{:<5}  {:<22} eps={eps}  lhs={} rhs={} margin={}",
                r.status,
                r.check_id,
                format_real(r.lhs),
                format_real(r.rhs),
                format_real(r.margin)
            ),
        }
    }
}

fn write_outputs(command: Command, cfg: &HarnessConfig, rows: &[VerificationReport]) -> std::io::Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    if cfg.formats.contains(&Format::Csv) {
        output::write_csv(&cfg.output_dir.join("report.csv"), rows)?;
    }
    if cfg.formats.contains(&Format::Json) {
        output::write_json(&cfg.output_dir.join("summary.json"), &output::Summary::new(command.name(), cfg, rows))?;
    }
    if cfg.formats.contains(&Format::Svg) && matches!(command, Command::RunCompetitors) {
        std::fs::write(cfg.output_dir.join("scatter.svg"), output::scatter_svg(rows))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_default_config {
        print!("{DEFAULT_CONFIG}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        return usage_error("no command given; see `pansu-lab --help`");
    };
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    if let Err(e) = configure_threads() {
        return usage_error(e);
    }

    let rows = match command {
        Command::Constants => {
            return match checks::constants(&cfg) {
                Ok(c) => {
                    println!("{}", serde_json::to_string_pretty(&c).expect("constants serialize"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("pansu-lab: {e}");
                    ExitCode::from(EXIT_FAIL)
                }
            };
        }
        Command::VerifyFoliation => checks::verify_foliation(&cfg),
        Command::VerifyBounds => checks::verify_bounds(&cfg),
        Command::RunCompetitors => checks::run_competitors(&cfg),
    };

    print_rows(&rows);
    let tally = Tally::of(&rows);
    println!(
        "{}: {} rows, {} pass, {} tight, {} fail, {} error",
        command.name(),
        tally.total,
        tally.pass,
        tally.tight,
        tally.fail,
        tally.error
    );
    if let Err(e) = write_outputs(command, &cfg, &rows) {
        return usage_error(format!("cannot write to {}: {e}", cfg.output_dir.display()));
    }

    // Competitor rows that could not be built do not count against the
    // sweep; in the verification commands an evaluation error is a failure.
    let failed = match command {
        Command::RunCompetitors => tally.fail > 0,
        _ => !tally.all_ok(),
    };
    if failed {
        ExitCode::from(EXIT_FAIL)
    } else {
        ExitCode::SUCCESS
    }
}
