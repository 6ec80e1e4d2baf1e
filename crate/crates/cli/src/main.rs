//! `biphoton` command-line front end.
//!
//! Settings resolve in three layers: built-in defaults, then the `--config`
//! JSON document, then command-line flags. A flag always wins.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biphoton::counts::{defaults as counts_defaults, CountsScenario};
use biphoton::workbench::figures::{self, FigureId, LENGTH_STUDY_UM};
use biphoton::workbench::pipeline::{run_pipeline, Stage};
use biphoton::workbench::presets::Preset;
use biphoton::workbench::{DeviceConfig, Overrides};
use biphoton::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "biphoton", version, about = "Biphoton spectral engineering workbench")]
struct Cli {
    /// Device configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Moving-average window for measured transmission files, nm.
    #[arg(long, global = true)]
    smooth_nm: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Source, coupler, filter, HOM and metrology stages.
    Pipeline {
        /// Comma-separated stage list.
        #[arg(long, value_delimiter = ',', default_value = "source,couple,filter,hom,metrology")]
        stages: Vec<String>,
        #[arg(long)]
        preset: Option<Preset>,
        /// Rectangular band-pass full width, nm.
        #[arg(long)]
        filter_nm: Option<f64>,
        /// Add the α = 1/2 synthetic curve to the HOM report.
        #[arg(long)]
        anyon: bool,
    },
    /// Visibility and crossed transmission versus taper length.
    SweepTaper {
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, value_delimiter = ',')]
        lengths_um: Option<Vec<f64>>,
    },
    /// PGR and CAR versus pump power.
    CountsSweep {
        /// mW.
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
        /// Counting scenario (JSON); missing fields take the defaults.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Fisher-information ratio versus visibility.
    Scaling {
        #[arg(long)]
        preset: Option<Preset>,
        /// Visibility grid; defaults to 0.05 steps up to the state's own visibility.
        #[arg(long, value_delimiter = ',')]
        visibilities: Option<Vec<f64>>,
    },
    /// Regenerate the data behind one figure.
    Fig {
        /// fig1c, fig3, fig4a, fig4c, fig4d, fig4e or fig4f.
        id: FigureId,
    },
}

fn load_config(cli: &Cli, preset: Option<Preset>) -> Result<DeviceConfig> {
    let mut cfg = match &cli.config {
        Some(p) => DeviceConfig::load(p)?,
        None => DeviceConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        grid_points: cli.grid_points,
        smooth_nm: cli.smooth_nm,
        preset,
    })?;
    Ok(cfg)
}

fn load_scenario(path: &Path) -> Result<CountsScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Pipeline {
            stages,
            preset,
            filter_nm,
            anyon,
        } => {
            let mut cfg = load_config(cli, *preset)?;
            if filter_nm.is_some() {
                cfg.filter_nm = *filter_nm;
            }
            cfg.anyon_comparison |= *anyon;
            cfg.validate()?;
            let stages = stages
                .iter()
                .map(|s| Stage::parse(s.trim()))
                .collect::<Result<Vec<_>>>()?;
            let a = run_pipeline(&cfg, &stages, Some(&cli.out))?;
            if let Some(r) = &a.report {
                println!("{}", serde_json::to_string_pretty(r)?);
            }
            print_files(&a.files);
        }
        Command::SweepTaper { preset, lengths_um } => {
            let cfg = load_config(cli, *preset)?;
            let um = lengths_um.clone().unwrap_or_else(|| LENGTH_STUDY_UM.to_vec());
            let lengths: Vec<f64> = um.iter().map(|l| l * 1e-6).collect();
            print_files(&figures::taper_sweep(&cfg, &lengths, &cli.out)?);
        }
        Command::CountsSweep { powers, scenario } => {
            let cfg = load_config(cli, None)?;
            let mut scn = match scenario {
                Some(p) => load_scenario(p)?,
                None => CountsScenario {
                    rng_seed: cfg.seed,
                    ..CountsScenario::default()
                },
            };
            if let Some(s) = cli.seed {
                scn.rng_seed = s;
            }
            let powers = powers.clone().unwrap_or_else(|| counts_defaults::SWEEP_POWERS.to_vec());
            print_files(&figures::counts_sweep(&cfg, &scn, &powers, &cli.out)?);
        }
        Command::Scaling { preset, visibilities } => {
            let cfg = load_config(cli, *preset)?;
            print_files(&figures::scaling(&cfg, visibilities.as_deref(), &cli.out)?);
        }
        Command::Fig { id } => {
            let cfg = load_config(cli, None)?;
            print_files(&figures::run_figure(*id, &cfg, &cli.out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
