// SPDX-License-Identifier: Apache-2.0

//! `fermidark` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 census/numerics (or dark-check) mismatch,
//! 4 integrator failure, 1 anything else.

mod commands;
mod manifest;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fermidark::angular::HalfInt;
use fermidark::dynamics::Method;

use commands::Mismatch;
use manifest::OUTPUT_ROOT_ENV;

#[derive(Parser)]
#[command(name = "fermidark", version, about = "Dark states and collective decay of multilevel fermions")]
struct Cli {
    /// Output root; each command writes into its own subdirectory.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Krylov,
    Lawson,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenmodes and decay rates of H_eff on one site.
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        fg: Option<HalfInt>,
        #[arg(long, allow_hyphen_values = true)]
        fe: Option<HalfInt>,
        #[arg(long)]
        n: Option<usize>,
        /// Onsite coherent coefficient U.
        #[arg(long = "U", visible_alias = "u", default_value_t = 0.0, allow_hyphen_values = true)]
        onsite_u: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Analytic dark-state census with a numerical null-space cross-check.
    Darks {
        #[arg(long, allow_hyphen_values = true)]
        fg: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        fe: HalfInt,
        #[arg(long)]
        n: usize,
    },
    /// Raman or Zeeman preparation run.
    Prepare {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Rerun at a tighter tolerance (or half step) and report the largest change.
        #[arg(long)]
        check_convergence: bool,
    },
    /// Onsite coefficient sweep over the trap aspect ratio.
    Onsite {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        min_ratio: Option<f64>,
        #[arg(long)]
        max_ratio: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Product dark states on two sites at random geometries.
    Multisite {
        #[arg(long, default_value = "1/2", allow_hyphen_values = true)]
        fg: HalfInt,
        #[arg(long, default_value = "1/2", allow_hyphen_values = true)]
        fe: HalfInt,
        /// Fermions per site.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        geometries: usize,
        #[arg(long, default_value_t = 2019)]
        seed: u64,
    },
    /// List the built-in presets.
    Presets,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Mismatch>().is_some() {
        return 3;
    }
    if let Some(e) = err.downcast_ref::<fermidark::Error>() {
        return match e {
            fermidark::Error::Integrator(_) => 4,
            fermidark::Error::Domain(_)
            | fermidark::Error::EmptySector(_)
            | fermidark::Error::LevelStructure(_)
            | fermidark::Error::Config(_)
            | fermidark::Error::Guardrail(_) => 2,
            _ => 1,
        };
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()?;
    }
    let out = cli.out.unwrap_or_else(commands::default_root);
    match cli.command {
        Command::Spectrum { fg, fe, n, onsite_u, gamma, preset, config } => {
            commands::spectrum(
                &out,
                commands::SpectrumRequest {
                    fg,
                    fe,
                    n,
                    onsite_u,
                    gamma,
                    preset: preset.as_deref(),
                    config: config.as_deref(),
                },
            )?;
        }
        Command::Darks { fg, fe, n } => {
            commands::darks(&out, fg, fe, n)?;
        }
        Command::Prepare { preset, config, t_max, samples, method, check_convergence } => {
            commands::prepare(
                &out,
                commands::PrepareRequest {
                    preset: preset.as_deref(),
                    config: config.as_deref(),
                    t_max,
                    samples,
                    method: method.map(|m| match m {
                        MethodArg::Krylov => Method::Krylov,
                        MethodArg::Lawson => Method::Lawson,
                    }),
                    check_convergence,
                },
            )?;
        }
        Command::Onsite { preset, config, min_ratio, max_ratio, points } => {
            commands::onsite(
                &out,
                commands::OnsiteRequest {
                    preset: preset.as_deref(),
                    config: config.as_deref(),
                    min_ratio,
                    max_ratio,
                    points,
                },
            )?;
        }
        Command::Multisite { fg, fe, n, geometries, seed } => {
            commands::multisite(&out, fg, fe, n, geometries, seed)?;
        }
        Command::Presets => {
            for (group, table) in [("prepare", presets::PREPARE), ("spectrum", presets::SPECTRA), ("onsite", presets::ONSITE)] {
                println!("{group}: {}", presets::names(table).join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
