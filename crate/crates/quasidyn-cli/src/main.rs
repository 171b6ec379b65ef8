use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use quasidyn::manifold::FdConfig;
use quasidyn_cli::config::ScenarioKind;
use quasidyn_cli::config::{AlgebraRef, CDR_PRESETS, SECTION_PRESETS};
use quasidyn_cli::report::{emit_report, rows_csv, triple_rows_csv, write_atomic};
use quasidyn_cli::scenario::{export_bracket, export_triple};
use quasidyn_cli::{run_scenario, CliError, Format, Overrides, Result, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(
    name = "quasidyn",
    version,
    about = "Numerical checks for quasi-Poisson structures and dynamical r-matrices"
)]
struct Cli {
    /// Finite-difference step, overriding the config.
    #[arg(long, global = true)]
    fd_step: Option<f64>,
    /// Seed for sampled points and test functions.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance applied to every check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Format of the report printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario config and report every check.
    Verify { config: PathBuf },
    /// Write plot data as CSV.
    Export {
        #[arg(long, value_enum)]
        what: ExportKind,
        #[arg(long)]
        out: PathBuf,
        /// Number of bracket samples.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// List the built-in algebras, sections and scenario kinds.
    ListPresets,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportKind {
    Triple,
    Bracket,
}

fn verify(cli: &Cli, path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let overrides = Overrides {
        fd_step: cli.fd_step,
        seed: cli.seed,
        tol: cli.tol,
    };
    let cfg = ScenarioConfig::parse(&text)?.with_overrides(&overrides)?;
    let report = run_scenario(&cfg)?;
    let out = &cfg.output;
    for (target, format) in [
        (&out.json, Format::Json),
        (&out.csv, Format::Csv),
        (&out.md, Format::Md),
    ] {
        if let Some(p) = target {
            emit_report(&report, format, p)?;
        }
    }
    if let Some(p) = &out.triple_csv {
        write_atomic(p, &report.triple_csv()?)?;
    }
    print!("{}", report.render(cli.format)?);
    Ok(report.passed())
}

fn export(cli: &Cli, what: ExportKind, out: &Path, samples: usize) -> Result<bool> {
    let text = match what {
        ExportKind::Triple => {
            let grid: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.05).collect();
            triple_rows_csv(&export_triple(&grid)?)?
        }
        ExportKind::Bracket => {
            let seed = cli
                .seed
                .ok_or_else(|| CliError::config("/seed", "bracket export samples randomly and needs --seed"))?;
            let fd = FdConfig::new(cli.fd_step.unwrap_or(1e-5), false);
            let rows = export_bracket(samples, seed, fd)?;
            rows_csv(&rows, &["sample", "alpha", "bracket", "bracket_fock_rosly"])?
        }
    };
    write_atomic(out, &text)?;
    Ok(true)
}

fn list_presets() -> Result<bool> {
    println!("algebras:");
    for name in ["su2", "iso21", "abelian:<n>"] {
        let detail = match name {
            "abelian:<n>" => "abelian algebra of dimension n".to_string(),
            _ => {
                let alg = AlgebraRef::Preset(name.into()).build()?;
                format!("dimension {}", alg.dim())
            }
        };
        println!("  {name:<12} {detail}");
    }
    println!("sections:\n  {}", SECTION_PRESETS.join(", "));
    println!("cdr:\n  {}", CDR_PRESETS.join(", "));
    let kinds: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
    println!("kinds:\n  {}", kinds.join(", "));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify { config } => verify(&cli, config),
        Command::Export { what, out, samples } => export(&cli, *what, out, *samples),
        Command::ListPresets => list_presets(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
