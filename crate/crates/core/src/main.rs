use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opm_thermo::cli::config::{read_config_file, ConfigFile};
use opm_thermo::cli::{exit_code, figures, run, sweep, CliError};

#[derive(Parser)]
#[command(
    name = "opm-thermo",
    version,
    about = "Thermodynamics and metrology of optically pumped alkali spins"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `key = value` configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the `output` key).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print and store the collisional and wall relaxation rates.
    Rates(Common),
    /// Integrate one trajectory and write its CSV files.
    Run(Common),
    /// Run a parameter sweep given by the `sweep_variable`/`sweep_values` keys.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Regenerate the data of every figure panel.
    ReproduceFigures {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn load(common: &Common) -> Result<ConfigFile, CliError> {
    match &common.config {
        Some(path) => Ok(read_config_file(path)?),
        None => Ok(opm_thermo::cli::config::parse_config_str("")?),
    }
}

fn out_dir(common: &Common, file: &ConfigFile, default: &str) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| file.run.output.clone())
        .unwrap_or_else(|| Path::new(default).to_path_buf())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Rates(common) => {
            let file = load(&common)?;
            let rates = file.run.model.rates(&file.run.cell)?;
            let dir = out_dir(&common, &file, "out");
            run::write_rates(&rates, &dir)?;
            for (name, value) in opm_thermo::cell_rates::RateSet::CSV_HEADER
                .iter()
                .zip(rates.csv_values())
            {
                println!("{name} = {value:.6e}");
            }
        }
        Command::Run(common) => {
            let file = load(&common)?;
            let dir = out_dir(&common, &file, "out");
            let output = run::simulate(&file.run)?;
            run::write_run(&output, &dir)?;
            let s = &output.summary;
            println!(
                "reached_ness = {} at t/T_SE = {:.3}; efficiency = {:.4}; entropy = {:.5}",
                s.reached_ness, s.t_final_over_t_se, s.efficiency, s.entropy
            );
            println!("wrote {}", dir.display());
        }
        Command::Sweep { common, jobs } => {
            let file = load(&common)?;
            let spec = file.sweep_spec()?;
            let dir = out_dir(&common, &file, "out");
            let report = sweep::sweep(&spec, &dir, jobs)?;
            for p in &report.points {
                match &p.result {
                    Ok(r) => println!(
                        "{} = {}: efficiency {:.4}",
                        spec.variable.name(),
                        p.value,
                        r.summary.efficiency
                    ),
                    Err(e) => eprintln!("{} = {}: failed: {e}", spec.variable.name(), p.value),
                }
            }
            let failed = report.failures();
            if failed > 0 {
                return Err(CliError::PartialSweep {
                    failed,
                    total: report.points.len(),
                });
            }
        }
        Command::ReproduceFigures { common, jobs } => {
            let file = load(&common)?;
            let dir = out_dir(&common, &file, "figures");
            let report = figures::reproduce_figures(&file.run, &dir, jobs)?;
            println!(
                "wrote {} panels from {} runs to {}",
                report.panels.len(),
                report.runs.len(),
                dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::from(exit_code::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
