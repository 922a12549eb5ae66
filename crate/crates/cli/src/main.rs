use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use foldplate_core::experiment::{self, preset, ExperimentConfig, PRESETS};
use foldplate_core::{set_thread_limit, Error};

const THREADS_VAR: &str = "FOLDPLATE_THREADS";

/// Interior-penalty dG solver for folded Kirchhoff plates.
#[derive(Parser)]
#[command(name = "foldplate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV, VTK and manifest files.
    Run {
        #[command(flatten)]
        source: Source,
        /// Directory that receives `<name>/`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the builtin experiments.
    Presets,
    /// Write the classified mesh of one refinement level as VTK.
    ExportMesh {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        level: usize,
        /// Output file; defaults to `mesh_level<N>.vtk`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Plain-text `key = value` config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Builtin experiment name (see `foldplate presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Override one config entry, e.g. `--set levels=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::parse_str(&text)?
            }
            (None, Some(name)) => preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        for pair in &self.overrides {
            cfg.set_pair(pair)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<(), Error> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_VAR}='{v}' is not a thread count")))?;
            set_thread_limit(n)
        }
        Err(_) => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Presets => {
            for name in PRESETS {
                let cfg = preset(name)?;
                println!(
                    "{name:<16} interface={:<9} fit_order={} bc={:<22} load={:<5} levels={}",
                    cfg.interface.kind.to_string(),
                    cfg.interface.fit_order,
                    cfg.bc.to_string(),
                    cfg.load.to_string(),
                    cfg.levels
                );
            }
        }
        Command::Run { source, out } => {
            let cfg = source.load()?;
            let summary = experiment::run(&cfg, Some(&out))?;
            print!("{}", summary.table());
            for w in &summary.warnings {
                println!("warning: {w}");
            }
            if let Some(dir) = &summary.output_dir {
                println!("wrote {}", dir.display());
            }
        }
        Command::ExportMesh { source, level, out } => {
            let cfg = source.load()?;
            let path = out.unwrap_or_else(|| PathBuf::from(format!("mesh_level{level}.vtk")));
            let mesh = experiment::export_mesh(&cfg, level, &path)?;
            println!(
                "wrote {} ({} elements, h_max {:.4e})",
                path.display(),
                mesh.n_elements(),
                mesh.h_max()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors are configuration errors; clap would exit with 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
