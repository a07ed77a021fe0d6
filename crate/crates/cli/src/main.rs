use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod config;
mod output;

use output::{OutDir, Provenance};

#[derive(Parser)]
#[command(name = "gl3d", version, about = "Quantized vortex lines in 3-D Ginzburg-Landau fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Recovery field of a filament system.
    Synthesize,
    /// Quantized vorticity of a complex field.
    Extract,
    /// Ginzburg-Landau energy of a complex field.
    Energy,
    /// Line system of a piecewise-linear vorticity.
    Discretize,
    /// Minimal connection of signed points.
    Mincon,
    /// Hodge decomposition of a 1-form.
    Hodge,
    /// Biot-Savart field and linking numbers of filaments.
    BiotSavart,
    /// Energy sweep over eps for a vortex ring bundle.
    GammaSweep,
    /// Curvature residual of a filament.
    Curvature,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Synthesize => "synthesize",
            Command::Extract => "extract",
            Command::Energy => "energy",
            Command::Discretize => "discretize",
            Command::Mincon => "mincon",
            Command::Hodge => "hodge",
            Command::BiotSavart => "biot-savart",
            Command::GammaSweep => "gamma-sweep",
            Command::Curvature => "curvature",
        }
    }

    fn stage(self) -> &'static str {
        match self {
            Command::Synthesize => "recovery-field",
            Command::Extract => "jacobian-extraction",
            Command::Energy => "energy",
            Command::Discretize => "line-discretization",
            Command::Mincon => "minimal-connection",
            Command::Hodge => "hodge-decomposition",
            Command::BiotSavart => "biot-savart",
            Command::GammaSweep => "gamma-limit-sweep",
            Command::Curvature => "curvature-residual",
        }
    }
}

fn run_with<T: serde::de::DeserializeOwned>(
    cli: &Cli,
    path: &std::path::Path,
    f: fn(&config::Loaded<T>, &OutDir) -> Result<()>,
) -> Result<()> {
    let cmd = cli.command;
    let loaded = config::load::<T>(cmd.name(), path)?;
    let prov = Provenance {
        tool: output::TOOL,
        version: output::VERSION,
        config_hash: loaded.hash.clone(),
        stage: cmd.stage(),
        seed: cli.seed,
    };
    log::info!("{} config {}", cmd.name(), loaded.hash);
    f(&loaded, &OutDir::new(&cli.out, prov)?)
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let Some(path) = cli.config.as_deref() else {
        anyhow::bail!("--config is required");
    };
    match cli.command {
        Command::Synthesize => run_with(cli, path, commands::synthesize),
        Command::Extract => run_with(cli, path, commands::extract),
        Command::Energy => run_with(cli, path, commands::energy_cmd),
        Command::Discretize => run_with(cli, path, commands::discretize_cmd),
        Command::Mincon => run_with(cli, path, commands::mincon),
        Command::Hodge => run_with(cli, path, commands::hodge),
        Command::BiotSavart => run_with(cli, path, commands::biot_savart),
        Command::GammaSweep => run_with(cli, path, commands::gamma_sweep_cmd),
        Command::Curvature => run_with(cli, path, commands::curvature),
    }
}

/// 3 for broken numerical guarantees, 2 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = e.chain().any(|c| c.downcast_ref::<gl3d::Error>().is_some_and(gl3d::Error::is_numerical));
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GL3D_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_exit_with_3() {
        let e = anyhow::Error::new(gl3d::Error::CirculationDefect { axis: 0, vertex: 3, defect: 1.0 }).context("stage recovery");
        assert_eq!(exit_code(&e), 3);
        let e = anyhow::Error::new(gl3d::Error::InvalidInput("x".into())).context("stage extraction");
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("missing field")), 2);
    }
}
