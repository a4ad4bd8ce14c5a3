use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use homodyne_cli::config::{parse_config, ConfigFile};
use homodyne_cli::run::{self, SweepRange};

/// Linear-optics homodyne readout analyses, driven by a line-oriented
/// network/state configuration file. Results are CSV on stdout (or a file).
#[derive(Parser)]
#[command(name = "homodyne", version, about)]
struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network description for wiring and unitarity violations.
    Validate { config: PathBuf },
    /// Balanced-homodyne difference signal ⟨s⟩.
    Analyze { config: PathBuf },
    /// Eight-port recovery of the signal amplitude: ⟨t+⟩ and ⟨t-⟩.
    EightPort { config: PathBuf },
    /// Noise spectral density of the eight-port recovery observable.
    Noise { config: PathBuf },
    /// Two-photon noise density versus homodyne angle.
    SweepTheta {
        config: PathBuf,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        steps: usize,
        /// Local-oscillator magnitude |γ| (default: from the config's l_i).
        #[arg(long)]
        gamma_mag: Option<f64>,
    },
    /// Two-photon noise density versus sideband frequency.
    SweepOmega {
        config: PathBuf,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long)]
        gamma_mag: Option<f64>,
    },
    /// Signal-referred noise through a tabulated detector response.
    Refer {
        config: PathBuf,
        /// CSV of (omega, Re R, Im R, S_hn) rows.
        #[arg(long)]
        response: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long)]
        gamma_mag: Option<f64>,
    },
    /// Balanced-homodyne accessibility of the quadrature combination.
    Nogo {
        /// Complex literal, e.g. 1+0i.
        #[arg(long)]
        gamma_plus: String,
        #[arg(long)]
        gamma_minus: String,
    },
    /// Monte-Carlo photocount statistics for coherent drives.
    Mc {
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Truncated-Fock cross-check of the detector means.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        cutoff: usize,
    },
}

fn load_config(path: &PathBuf) -> Result<ConfigFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text).map_err(|errors| {
        let mut msg = format!("config {} has errors:", path.display());
        for e in errors {
            msg.push_str(&format!("\n  {e}"));
        }
        anyhow::anyhow!(msg)
    })
}

fn emit(output: &Option<PathBuf>, csv: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, csv)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let csv = match &cli.command {
        Command::Validate { config } => {
            let cfg = load_config(config)?;
            let (csv, ok) = run::cmd_validate(&cfg);
            emit(&cli.output, &csv)?;
            return Ok(ok);
        }
        Command::Analyze { config } => run::cmd_analyze(&load_config(config)?)?,
        Command::EightPort { config } => run::cmd_eight_port(&load_config(config)?)?,
        Command::Noise { config } => run::cmd_noise(&load_config(config)?)?,
        Command::SweepTheta {
            config,
            min,
            max,
            steps,
            gamma_mag,
        } => run::cmd_sweep_theta(
            &load_config(config)?,
            &SweepRange {
                min: *min,
                max: *max,
                steps: *steps,
            },
            *gamma_mag,
        )?,
        Command::SweepOmega {
            config,
            min,
            max,
            steps,
            theta,
            gamma_mag,
        } => run::cmd_sweep_omega(
            &load_config(config)?,
            &SweepRange {
                min: *min,
                max: *max,
                steps: *steps,
            },
            *theta,
            *gamma_mag,
        )?,
        Command::Refer {
            config,
            response,
            theta,
            gamma_mag,
        } => {
            let table = fs::read_to_string(response)
                .with_context(|| format!("cannot read response file {}", response.display()))?;
            run::cmd_refer(&load_config(config)?, &table, *theta, *gamma_mag)?
        }
        Command::Nogo {
            gamma_plus,
            gamma_minus,
        } => run::cmd_nogo(gamma_plus, gamma_minus)?,
        Command::Mc {
            config,
            shots,
            seed,
        } => run::cmd_mc(&load_config(config)?, *shots, *seed)?,
        Command::Oracle { config, cutoff } => run::cmd_oracle(&load_config(config)?, *cutoff)?,
    };
    emit(&cli.output, &csv)?;
    Ok(true)
}
