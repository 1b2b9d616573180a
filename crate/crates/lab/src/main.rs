use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use saclab::config::{output_dir, LoadedConfig};
use saclab::error::{LabError, LabResult};
use saclab::experiment::{build_instance, calibrate, constants_report, run_experiment, sweep};
use saclab::format::{parse_theta, read_json, write_json, OracleDocument};
use saclab::verify::{verify, Level};
use saclab_core::{OracleBundle, PolicyParams};

/// Single-timescale actor-critic experiments on finite MDPs.
#[derive(Debug, Parser)]
#[command(name = "saclab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every horizon of a configuration and write the artifact directory.
    Run(ConfigArgs),
    /// Run the horizon × step-ratio grid and write sweep.json.
    Sweep(ConfigArgs),
    /// Run the acceptance suite.
    Verify {
        /// Reduced scale (default).
        #[arg(long, conflicts_with = "full")]
        fast: bool,
        /// Full scale.
        #[arg(long)]
        full: bool,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the instance constants and the stepsize verdict as JSON.
    Constants(ConfigArgs),
    /// Print the exact oracle quantities at a policy parameter as JSON.
    Oracle {
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON file with a bare array or an object with a "theta" array.
        #[arg(long)]
        theta: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Replace the configuration's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory the configuration's output_dir is resolved against;
    /// defaults to $SACLAB_OUTPUT_ROOT, then the working directory.
    #[arg(long)]
    output_root: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> LabResult<LoadedConfig> {
        let loaded = LoadedConfig::from_path(&self.config)?;
        match self.seed {
            Some(seed) => {
                let mut config = loaded.config;
                config.master_seed = seed;
                LoadedConfig::new(config, loaded.base_dir)
            }
            None => Ok(loaded),
        }
    }

    fn out_dir(&self, loaded: &LoadedConfig) -> PathBuf {
        output_dir(&loaded.config, self.output_root.as_deref())
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> LabResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| LabError::Json {
        path: PathBuf::from("<stdout>"),
        source: e,
    })?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> LabResult<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let loaded = args.load()?;
            let out = args.out_dir(&loaded);
            let report = run_experiment(&loaded, &out)?;
            for cell in &report.cells {
                match cell.means {
                    Some(m) => println!(
                        "T = {:>8}  Y_T = {:.4e}  Z_T = {:.4e}  G_T = {:.4e}",
                        cell.spec.t_total, m.y_mean, m.z_mean, m.g_mean
                    ),
                    None => println!("T = {:>8}  no usable runs", cell.spec.t_total),
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Sweep(args) => {
            let loaded = args.load()?;
            let out = args.out_dir(&loaded);
            let report = sweep(&loaded, &out)?;
            let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
            println!("{} cells ({failed} failed); wrote {}", report.cells.len(), out.join("sweep.json").display());
        }
        Command::Verify { full, json, .. } => {
            let level = if full { Level::Full } else { Level::Fast };
            let report = verify(level);
            for c in &report.criteria {
                println!("{c}");
            }
            if let Some(path) = json {
                write_json(&path, &report)?;
            }
            return Ok(if report.all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Constants(args) => {
            let loaded = args.load()?;
            let instance = build_instance(&loaded)?;
            let calibration = calibrate(&instance, &loaded)?;
            print_json(&constants_report(&loaded, &calibration, loaded.config.c))?;
        }
        Command::Oracle { config, theta } => {
            let loaded = config.load()?;
            let instance = build_instance(&loaded)?;
            let theta = PolicyParams::new(parse_theta(&read_json(Path::new(&theta))?)?)?;
            let bundle = OracleBundle::compute(&instance.mdp, &instance.map, &theta)?;
            print_json(&OracleDocument::from_bundle(&bundle))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("saclab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
