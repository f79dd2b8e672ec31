use clap::{Parser, Subcommand, ValueEnum};
use rabi_chain::experiment::{run_experiment, validate_gate, write_report, ExperimentConfig, GateTarget};
use rabi_chain::pulse::{attach_tones, CompileOptions};
use rabi_chain::spectrum::solve;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rabi-chain", version, about = "Spin-1 chain simulation on coupled Rabi systems")]
struct Cli {
    /// TOML experiment file; the built-in reference run when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpeciesArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Xy,
    Xx,
    Rot,
}

#[derive(Subcommand)]
enum Command {
    /// Dressed spectrum of one species as CSV.
    Spectrum {
        #[arg(long, value_enum, default_value = "a")]
        species: SpeciesArg,
        /// Number of levels to list.
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the protocol schedule and its flux/drive tones.
    Compile {
        #[arg(long)]
        emit_schedule: Option<PathBuf>,
        /// Report margins without enforcing the RWA and separation guards.
        #[arg(long)]
        unchecked: bool,
    },
    /// Full flux-driven propagation of one gate against its effective form.
    ValidateGate {
        #[arg(long, value_enum, default_value = "xy")]
        gate: GateArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fidelity benchmark over random initial states.
    Run {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        n_states: Option<usize>,
    },
    /// The benchmark repeated over several chain lengths.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        sites: Vec<usize>,
        /// Output prefix; files are written as <prefix>_N<n>.csv.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn load(cli: &Cli) -> rabi_chain::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(seed) = cli.seed {
        cfg.sampling.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_path(explicit: &Option<PathBuf>, cfg: &ExperimentConfig) -> Option<PathBuf> {
    explicit.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from))
}

fn print_report(report: &rabi_chain::experiment::FidelityReport) {
    println!("time_s,fid_mean,fid_min,fid_max,fid_stderr,leakage_mean");
    for k in 0..report.time_s.len() {
        println!(
            "{},{},{},{},{},{}",
            report.time_s[k], report.fid_mean[k], report.fid_min[k], report.fid_max[k], report.fid_stderr[k], report.leakage_mean[k]
        );
    }
}

fn run(cli: Cli) -> rabi_chain::Result<()> {
    let cfg = load(&cli)?;
    match &cli.command {
        Command::Spectrum { species, levels, output } => {
            let (a, b) = cfg.species_params();
            let params = match species {
                SpeciesArg::A => a,
                SpeciesArg::B => b,
            };
            let spec = solve(&params, (*levels).min(2 * params.n_fock))?;
            let mut text = String::from("index,energy_rad_per_s,parity\n");
            for k in 0..spec.n_kept {
                text.push_str(&format!("{k},{},{}\n", spec.energies[k], spec.parity(k)));
            }
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Compile { emit_schedule, unchecked } => {
            let mut schedule = cfg.schedule()?;
            let chain = cfg.chain_config(cfg.chain.n_sites)?;
            let opts = if *unchecked { CompileOptions::unchecked() } else { cfg.gate.guards.unwrap_or_default() };
            attach_tones(&mut schedule, &chain, &opts)?;
            let json = schedule.to_json()?;
            match emit_schedule {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => println!("{json}"),
            }
            eprintln!("{} segments, total duration {:e} s", schedule.segments.len(), schedule.total_duration_s);
        }
        Command::ValidateGate { gate, output } => {
            let kind = match gate {
                GateArg::Xy => GateTarget::Xy,
                GateArg::Xx => GateTarget::Xx,
                GateArg::Rot => GateTarget::Rot,
            };
            let report = validate_gate(&cfg, kind)?;
            let json = serde_json::to_string_pretty(&report)?;
            match output {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => println!("{json}"),
            }
        }
        Command::Run { output, force, n_states } => {
            let mut cfg = cfg;
            if let Some(n) = n_states {
                cfg.sampling.n_states = *n;
            }
            let report = run_experiment(&cfg)?;
            match output_path(output, &cfg) {
                Some(path) => write_report(&report, &path, *force)?,
                None => print_report(&report),
            }
        }
        Command::Sweep { sites, output, force } => {
            let prefix = output_path(output, &cfg);
            for &n in sites {
                let mut cfg = cfg.clone();
                cfg.chain.n_sites = n;
                let report = run_experiment(&cfg)?;
                println!("N={n} final mean fidelity {:.6}", report.final_mean().unwrap_or(f64::NAN));
                if let Some(prefix) = &prefix {
                    write_report(&report, &suffixed(prefix, n), *force)?;
                }
            }
        }
    }
    Ok(())
}

fn suffixed(prefix: &Path, n: usize) -> PathBuf {
    let stem = prefix.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    prefix.with_file_name(format!("{stem}_N{n}.csv"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
