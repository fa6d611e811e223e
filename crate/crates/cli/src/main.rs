//! Scenario runner for pulsed-electron diffraction-in-time and HBT
//! coincidence simulations. Writes deterministic CSV (and optional SVG)
//! into the output directory.
//!
//! Exit codes: 0 success, 2 invalid parameters, 3 quadrature
//! non-convergence, 4 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pulsed_hbt::coincidence::ReductionMode;
use pulsed_hbt::scenarios::{parse_config, run_scenario, ScenarioConfig};
use pulsed_hbt::Error;

#[derive(Parser)]
#[command(name = "pulsed-hbt", version, about)]
struct Cli {
    /// JSON configuration file; defaults apply for every omitted key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for the emitted files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Also render an SVG plot next to each plottable CSV.
    #[arg(long, global = true)]
    svg: bool,

    /// Delay-spectrum reduction mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Enumerate all interval pairs instead of the representative ones.
    #[arg(long, global = true)]
    exact_pairs: bool,

    /// Particle mass as a multiple of the electron mass (2 for the
    /// two-electron boson comparison).
    #[arg(long, global = true)]
    mass_multiplier: Option<f64>,

    /// Print the resolved configuration and exit without computing.
    #[arg(long, global = true)]
    dry_run: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Marginal,
    Slice,
}

#[derive(Args)]
struct DitArgs {
    /// Slit (shutter-open) duration in fs; defaults to T_c/2.
    #[arg(long)]
    slit_fs: Option<f64>,
    /// Number of slits (1 = single-slit broadening, 2 = double slit).
    #[arg(long)]
    slits: Option<u32>,
    /// Gap between slits in fs; defaults to the slit duration.
    #[arg(long)]
    separation_fs: Option<f64>,
}

#[derive(Args)]
struct HbtArgs {
    /// Pulse durations in fs (repeatable); defaults to the standard sweep.
    #[arg(long = "pulse-fs")]
    pulse_fs: Vec<f64>,
    /// Polarization of the source.
    #[arg(long, value_enum)]
    polarization: Option<PolArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolArg {
    Polarized,
    Unpolarized,
}

#[derive(Args)]
struct DecohereArgs {
    /// Number of emission intervals (>= 3).
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Single/double temporal-slit diffraction-in-time spectra.
    Dit(DitArgs),
    /// Two-electron delay spectra and their mixture components.
    Hbt(HbtArgs),
    /// Analytic contrast table over the pulse-duration sweep.
    Contrast,
    /// Closed-form count-rate and degeneracy analytics.
    Rates,
    /// Entangled-state density matrices and coherence classification.
    Decohere(DecohereArgs),
    /// Max-value error of representative vs offset interval pairs.
    ErrorTable,
    /// Antisymmetric delay spectra swept over the kinetic energy.
    EnergySweep,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config(&text)?
        }
        None => ScenarioConfig::default(),
    };
    cfg.svg |= cli.svg;
    cfg.exact_pairs |= cli.exact_pairs;
    if let Some(mode) = cli.mode {
        cfg.mode = match mode {
            ModeArg::Marginal => ReductionMode::Marginal,
            ModeArg::Slice => ReductionMode::Slice,
        };
    }
    if let Some(m) = cli.mass_multiplier {
        cfg.mass_multiplier = m;
    }
    match &cli.command {
        Command::Dit(args) => {
            cfg.scenario = Some("dit".to_string());
            if let Some(a) = args.slit_fs {
                cfg.slit_fs = Some(a);
            }
            if let Some(n) = args.slits {
                cfg.slit_count = n;
            }
            if let Some(s) = args.separation_fs {
                cfg.separation_fs = Some(s);
            }
        }
        Command::Hbt(args) => {
            cfg.scenario = Some("hbt".to_string());
            if !args.pulse_fs.is_empty() {
                cfg.pulse_durations_fs = args.pulse_fs.clone();
            }
            if let Some(pol) = args.polarization {
                cfg.polarization = match pol {
                    PolArg::Polarized => pulsed_hbt::coincidence::Polarization::Polarized,
                    PolArg::Unpolarized => pulsed_hbt::coincidence::Polarization::Unpolarized,
                };
            }
        }
        Command::Contrast => cfg.scenario = Some("contrast".to_string()),
        Command::Rates => cfg.scenario = Some("rates".to_string()),
        Command::Decohere(args) => {
            cfg.scenario = Some("decohere".to_string());
            if let Some(n) = args.n {
                cfg.decohere_n = n;
            }
        }
        Command::ErrorTable => cfg.scenario = Some("error-table".to_string()),
        Command::EnergySweep => cfg.scenario = Some("energy-sweep".to_string()),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    eprintln!("resolved: {}", cfg.summary()?);
    if cli.dry_run {
        println!("{}", serde_json_pretty(&cfg));
        return Ok(());
    }
    let files = run_scenario(&cfg, &cli.out)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn serde_json_pretty(cfg: &ScenarioConfig) -> String {
    // ScenarioConfig serializes infallibly (plain numbers and strings).
    serde_json::to_string_pretty(cfg).expect("config serialization cannot fail")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
