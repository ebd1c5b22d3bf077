//! Command-line front end: runs scenario configs or bundled presets, sweeps
//! damping values, and emits trajectory CSVs plus optional oracle
//! comparisons and plot scripts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cpdyn::scenario::{self, BathConfig, RunArtifacts, ScenarioConfig};
use cpdyn::Error;

/// Classical simulation of N-level quantum systems on complex projective
/// space, with memoryless damping or an explicit oscillator environment.
#[derive(Debug, Parser)]
#[command(name = "cpdyn", version, about, arg_required_else_help = true)]
struct Cli {
    /// Scenario config file (flat key-value text with sections).
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    config: Option<PathBuf>,

    /// Bundled scenario name: two_qubit_c4c5_0, two_qubit_c4c5_1,
    /// fmo_isolated or fmo_damped.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,

    /// Damping values to sweep, comma-separated (e.g. `0,0.01,0.1,1`).
    /// Overrides the preset's default sweep; a single value runs once.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    gamma: Option<Vec<f64>>,

    /// Override the run length.
    #[arg(long, value_name = "X")]
    t_final: Option<f64>,

    /// Override the sample spacing.
    #[arg(long, value_name = "X")]
    sample_dt: Option<f64>,

    /// Also write a Schrödinger-oracle comparison CSV for isolated runs.
    #[arg(long)]
    oracle: bool,

    /// Replace the bath with an explicit oscillator environment of this
    /// many oscillators per coordinate (paired to the same damping value).
    #[arg(long, value_name = "N_OSC")]
    explicit_bath: Option<usize>,

    /// Output directory for CSVs and scripts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Emit a gnuplot script (`plot.gp`) covering the produced CSVs.
    #[arg(long)]
    plot_script: bool,
}

/// Exit code classes: 2 for configuration problems, 3 for solver failures.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ConfigParse { .. }
        | Error::InvalidSpec { .. }
        | Error::FileIo(_)
        | Error::EmptySweep
        | Error::DimensionMismatch { .. } => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (mut cfg, default_sweep) = if let Some(path) = &cli.config {
        (ScenarioConfig::from_file(path)?, Vec::new())
    } else if let Some(name) = &cli.scenario {
        let preset = scenario::preset(name)?;
        (preset.config, preset.sweep)
    } else {
        return Err(Error::InvalidSpec {
            message: "either --config PATH or --scenario NAME is required".into(),
        });
    };

    if let Some(t) = cli.t_final {
        cfg.t_final = t;
    }
    if let Some(dt) = cli.sample_dt {
        cfg.sample_dt = dt;
    }
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(n) = cli.explicit_bath {
        let gamma = match &cfg.bath {
            BathConfig::Markovian(gammas) => gammas.first().copied().unwrap_or(0.0),
            BathConfig::Explicit { gamma, .. } => *gamma,
            BathConfig::None => 0.0,
        };
        cfg.bath = BathConfig::Explicit {
            gamma,
            oscillators: n,
            cutoff: None,
        };
    }

    let sweep_values = cli.gamma.unwrap_or(default_sweep);
    let artifacts: Vec<RunArtifacts> = if sweep_values.is_empty() {
        vec![scenario::run_scenario(&cfg, cli.oracle)?]
    } else {
        scenario::sweep(&cfg, &sweep_values, cli.oracle)?
    };

    for artifact in &artifacts {
        println!("wrote {}", artifact.trajectory_csv.display());
        if let Some(oracle_csv) = &artifact.oracle_csv {
            println!("wrote {}", oracle_csv.display());
        }
    }

    if cli.plot_script {
        let script = scenario::emit_plot_script(&cfg.output_dir, &artifacts)?;
        println!("wrote {}", script.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
