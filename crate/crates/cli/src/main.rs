use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fracbound::frac_quad::{gamma_self_check, Interval};
use fracbound::harness::{
    cmd_audit_corollaries, cmd_check_identities, cmd_sweep, cmd_verify_bullen, cmd_verify_hadamard,
    exit_code_for, Format, Functional, RunConfig, SweepConfig, VerificationReport,
};
use fracbound::inequality_engine::CorollaryGrid;
use fracbound::Error;

/// Numerical verification of fractional Hadamard- and Bullen-type
/// inequalities for Lipschitz functions.
#[derive(Parser)]
#[command(name = "fracbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Random two-node configurations against random Lipschitz witnesses.
    VerifyHadamard(Common),
    /// Random three-node configurations against random Lipschitz witnesses.
    VerifyBullen(Common),
    /// Closed-form moment identities against reference quadrature.
    CheckIdentities(Common),
    /// Specialized bounds against the general theorem; writes an erratum ledger.
    AuditCorollaries {
        #[command(flatten)]
        common: Common,
        /// Parameter grid for the audit.
        #[arg(long, value_enum, default_value_t = GridChoice::Default)]
        grid: GridChoice,
    },
    /// Gap/bound ratios over a parameter grid, for plotting.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = FunctionalArg::Hadamard)]
        functional: FunctionalArg,
        /// Split weight values (repeatable or comma separated).
        #[arg(long = "lambda", value_delimiter = ',')]
        lambdas: Vec<f64>,
        /// Node position values in [0, 1] (repeatable or comma separated).
        #[arg(long = "delta", value_delimiter = ',')]
        deltas: Vec<f64>,
        /// Middle weights of the three-node functional.
        #[arg(long = "eta", value_delimiter = ',')]
        etas: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Fractional orders (repeatable or comma separated).
    #[arg(long = "alpha", value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Interval as `a,b`.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Option<Interval>,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Fixed witness table (`breakpoint value` per line).
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Largest slope of random witnesses.
    #[arg(long)]
    m_max: Option<f64>,
    /// Segments of random witnesses.
    #[arg(long)]
    segments: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridChoice {
    Default,
    Empty,
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionalArg {
    Hadamard,
    Bullen,
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad left end: {e}"))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|e| format!("bad right end: {e}"))?;
    Interval::new(a, b).map_err(|e| e.to_string())
}

impl Common {
    fn run_config(&self, default_format: Format) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            seed: self.seed,
            trials: self.trials,
            alpha_grid: if self.alphas.is_empty() {
                d.alpha_grid
            } else {
                self.alphas.clone()
            },
            interval: self.interval.unwrap_or(d.interval),
            m_max: self.m_max.unwrap_or(d.m_max),
            segments: self.segments.unwrap_or(d.segments),
            output_path: self.out.clone(),
            format: match self.format {
                Some(FormatArg::Json) => Format::Json,
                Some(FormatArg::Csv) => Format::Csv,
                None => default_format,
            },
            witness: self.witness.clone(),
            corollary_grid: d.corollary_grid,
        }
    }
}

fn side_path(out: &Path, name: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{name}.csv"))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_report(rep: &VerificationReport, run: &RunConfig) -> Result<(), Error> {
    let out = run.output_path.as_deref();
    match run.format {
        Format::Json => emit(&rep.to_json()?, out),
        Format::Csv => {
            let (main, extra) = rep.to_csv();
            emit(&main, out)?;
            for (name, table) in extra {
                match out {
                    Some(p) => std::fs::write(side_path(p, name), table)?,
                    None => print!("\n# {name}\n{table}"),
                }
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    gamma_self_check()?;
    let started = Instant::now();
    let (name, passed, line) = match cli.command {
        Cmd::Sweep {
            common,
            functional,
            lambdas,
            deltas,
            etas,
        } => {
            let run = common.run_config(Format::Csv);
            let functional = match functional {
                FunctionalArg::Hadamard => Functional::Hadamard,
                FunctionalArg::Bullen => Functional::Bullen,
            };
            let mut sweep = SweepConfig::new(functional);
            if !lambdas.is_empty() {
                sweep.lambdas = lambdas;
            }
            if !deltas.is_empty() {
                sweep.deltas = deltas;
            }
            if !etas.is_empty() {
                sweep.etas = etas;
            }
            let table = cmd_sweep(&run, &sweep)?;
            let text = match run.format {
                Format::Csv => table.to_csv(),
                Format::Json => table.to_json()?,
            };
            emit(&text, run.output_path.as_deref())?;
            let v = table.violations();
            (
                "sweep",
                v == 0,
                format!("{} rows, {v} violations", table.rows.len()),
            )
        }
        cmd => {
            let (name, run, report) = match cmd {
                Cmd::VerifyHadamard(c) => {
                    let run = c.run_config(Format::Json);
                    let rep = cmd_verify_hadamard(&run)?;
                    ("verify-hadamard", run, rep)
                }
                Cmd::VerifyBullen(c) => {
                    let run = c.run_config(Format::Json);
                    let rep = cmd_verify_bullen(&run)?;
                    ("verify-bullen", run, rep)
                }
                Cmd::CheckIdentities(c) => {
                    let run = c.run_config(Format::Json);
                    let rep = cmd_check_identities(&run)?;
                    ("check-identities", run, rep)
                }
                Cmd::AuditCorollaries { common, grid } => {
                    let mut run = common.run_config(Format::Json);
                    if let GridChoice::Empty = grid {
                        run.corollary_grid = CorollaryGrid::empty();
                    }
                    let rep = cmd_audit_corollaries(&run)?;
                    ("audit-corollaries", run, rep)
                }
                Cmd::Sweep { .. } => unreachable!(),
            };
            write_report(&report, &run)?;
            let s = &report.summary;
            let line = format!(
                "{} records, {} violations, {} oracle breaches, {} errata",
                s.records, s.violations, s.oracle_breaches, s.errata
            );
            (name, report.passed(), line)
        }
    };
    eprintln!(
        "{name}: {} ({line}) in {:.3} s",
        if passed { "pass" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
