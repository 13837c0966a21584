//! `possio` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration, 3 characteristic value, 4 convergence.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex;

use commands::{exit_code, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_OK};
use possio::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "possio",
    version,
    about = "Laplace-domain solver for the generalized Possio equation",
    after_help = "Any config key can be overridden with a dotted flag, e.g. `--grid.n 256` or `--flow.mach=0.3`.\n\
                  Environment: POSSIO_OUT_DIR overrides outputs.dir; POSSIO_THREADS sets the worker count.\n\
                  Exit codes: 0 ok, 2 config, 3 characteristic value, 4 convergence."
)]
struct Cli {
    /// TOML run configuration; built-in defaults are the harmonic benchmark.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the pressure-doublet density; writes p CSVs, loads, and a manifest.
    Solve {
        /// Explicit Laplace parameter `re,im`; repeatable. Without it the configured downwash family is solved.
        #[arg(long = "s", value_parser = parse_complex, allow_hyphen_values = true)]
        s: Vec<Complex<f64>>,
    },
    /// Tabulate the modified Fredholm determinant over a strip grid.
    Scan,
    /// Run property suites (specfun, hilbert, kernel, fredholm, laplace, field, all).
    Verify {
        suites: Vec<String>,
    },
    /// Tabulate the kernel and its regular part.
    DumpKernel,
    /// Evaluate the potential and acceleration potential at probe points.
    Field,
    /// Lift and moment time histories.
    Loads,
}

fn parse_complex(raw: &str) -> std::result::Result<Complex<f64>, String> {
    let (re, im) = raw.split_once(',').ok_or_else(|| format!("expected `re,im`, got '{raw}'"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number"));
    Ok(Complex::new(p(re)?, p(im)?))
}

fn run(cli: Cli, overrides: &[(String, String)]) -> Result<i32> {
    let cfg = config::load(cli.config.as_deref(), overrides)?;
    if let Some(n) = config::threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let report = |files: &[PathBuf]| {
        for f in files {
            eprintln!("wrote {}", f.display());
        }
    };
    match cli.command {
        Command::Solve { s } => {
            let out = commands::solve(&cfg, &s)?;
            report(&out.files);
            for g in &out.failed {
                eprintln!("gate failed: {g}");
            }
            Ok(out.code)
        }
        Command::Loads => {
            let out = commands::loads(&cfg)?;
            report(&out.files);
            for g in &out.failed {
                eprintln!("gate failed: {g}");
            }
            Ok(out.code)
        }
        Command::Scan => {
            report(&commands::scan(&cfg)?);
            Ok(EXIT_OK)
        }
        Command::Verify { suites } => {
            let (csv, passed) = commands::verify(&cfg, &suites)?;
            print!("{}", csv.as_str());
            report(&[csv.write(&cfg.outputs.dir, "verify.csv")?]);
            Ok(if passed { EXIT_OK } else { EXIT_CONVERGENCE })
        }
        Command::DumpKernel => {
            report(&[commands::dump_kernel(&cfg)?]);
            Ok(EXIT_OK)
        }
        Command::Field => {
            report(&[commands::field(&cfg)?]);
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let (rest, overrides) = match config::extract_overrides(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category().as_str());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli, &overrides) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category().as_str());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
