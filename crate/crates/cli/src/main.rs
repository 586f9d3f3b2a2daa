//! `optbal`: balance solves, imbalance sweeps, fits and verification suites.
//!
//! Exit codes: 0 success, 1 verification or solver failure, 2 configuration
//! error, 3 I/O error, 4 data error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod failure;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use optimal_balance::diagnostics::RESOLUTION_FLOOR;
use optimal_balance::Ramp;

use commands::{FitArgs, FitMode, LemmaArgs, Theorem1Args};
use config::RunConfig;
use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "optbal", version, about = "Optimal balance experiments")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output CSV path (sweep rows or balance trajectory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one balance problem and print p*.
    Balance,
    /// Diagnosed imbalance over the configured ε grid, ramps and horizons.
    Sweep,
    /// Fit the algebraic order or the exponential rate of a sweep CSV.
    Fit {
        csv: PathBuf,
        #[arg(long, value_enum, default_value = "order")]
        mode: FitMode,
        /// ε window `LO:HI`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Imbalances at or below this value are left out of alpha fits.
        #[arg(long, default_value_t = RESOLUTION_FLOOR)]
        floor: f64,
        /// Fit only rows of this ramp.
        #[arg(long)]
        ramp: Option<Ramp>,
        /// Fit only rows with this slow horizon.
        #[arg(long)]
        a: Option<f64>,
    },
    /// Sup-error slope of the slow flow against the full system.
    VerifyTheorem1 {
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 10f64.powf(-1.5))]
        eps_hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps_lo: f64,
        #[arg(long, default_value_t = 7)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Expected slope; `n + 2` when omitted.
        #[arg(long)]
        expected: Option<f64>,
        #[arg(long, default_value_t = 0.3)]
        tolerance: f64,
    },
    /// Exhaustive exact checks of the two factorial inequalities.
    VerifyLemmas {
        #[arg(long, default_value_t = 12)]
        a1_n_max: usize,
        #[arg(long, default_value_t = 12)]
        a1_k_max: usize,
        #[arg(long, default_value_t = 8)]
        a2_n_max: usize,
        #[arg(long, default_value_t = 4)]
        a2_s_max: usize,
        #[arg(long, default_value_t = 8)]
        a2_k_max: usize,
    },
    /// Gevrey-2 derivative bound of exp(-1/x).
    VerifyGevrey {
        #[arg(long, default_value_t = 1.0 / 3.0)]
        lambda: f64,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound '{lo}'"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound '{hi}'"))?;
    Ok((lo, hi))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    match &cli.command {
        Command::Balance => {
            let plan = load_config(&cli)?.validate()?;
            let out = cli.out.clone().or_else(|| plan.output.clone());
            commands::balance(&plan, out.as_deref())
        }
        Command::Sweep => {
            let plan = load_config(&cli)?.validate()?;
            commands::run_sweep(&plan, cli.out.as_deref())
        }
        Command::Fit {
            csv,
            mode,
            window,
            d,
            floor,
            ramp,
            a,
        } => commands::fit(&FitArgs {
            csv,
            mode: *mode,
            window: *window,
            d: *d,
            floor: *floor,
            ramp: *ramp,
            a: *a,
        }),
        Command::VerifyTheorem1 {
            n,
            eps_hi,
            eps_lo,
            count,
            a,
            expected,
            tolerance,
        } => {
            let plan = load_config(&cli)?.validate()?;
            let q0 = plan.single.template.target.clone();
            commands::verify_theorem1_cmd(
                plan.potential,
                &q0,
                &Theorem1Args {
                    order: *n,
                    eps_hi: *eps_hi,
                    eps_lo: *eps_lo,
                    count: *count,
                    a: *a,
                    expected: *expected,
                    tolerance: *tolerance,
                },
            )
        }
        Command::VerifyLemmas {
            a1_n_max,
            a1_k_max,
            a2_n_max,
            a2_s_max,
            a2_k_max,
        } => commands::verify_lemmas(&LemmaArgs {
            a1_n_max: *a1_n_max,
            a1_k_max: *a1_k_max,
            a2_n_max: *a2_n_max,
            a2_s_max: *a2_s_max,
            a2_k_max: *a2_k_max,
        }),
        Command::VerifyGevrey { lambda, n_max } => commands::verify_gevrey(*lambda, *n_max),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
