//! Fidelity benchmarks over seeded random initial states.

use super::config::{ExperimentConfig, ProtocolKind};
use crate::dynamics::dissipation::build_dissipators;
use crate::dynamics::effective::{effective_generator, segment_hamiltonian, step_unitaries};
use crate::dynamics::integrate::propagate_lindblad;
use crate::dynamics::state::ChainState;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::spin1::{embed_state, exact_propagator, haar_random_state, model_hamiltonian, pure_fidelity};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Wall-clock protocol time of each sample (s).
    pub time_s: Vec<f64>,
    /// Simulated model time of each sample (s).
    pub model_time_s: Vec<f64>,
    pub fid_mean: Vec<f64>,
    pub fid_min: Vec<f64>,
    pub fid_max: Vec<f64>,
    pub fid_stderr: Vec<f64>,
    pub leakage_mean: Vec<f64>,
    pub total_duration_s: f64,
    pub n_sites: usize,
    pub n_states: usize,
    pub dissipative: bool,
    /// Largest trace drift over every dissipative trajectory.
    pub max_trace_drift: f64,
    /// Smallest density-matrix eigenvalue seen in any dissipative trajectory.
    pub min_eigenvalue: Option<f64>,
    pub config_hash: String,
    pub seed: u64,
}

impl FidelityReport {
    pub fn final_mean(&self) -> Option<f64> {
        self.fid_mean.last().copied()
    }
}

/// Seed of the `index`-th initial state.
pub fn state_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct StateRun {
    fidelity: Vec<f64>,
    leakage: Vec<f64>,
    trace_drift: f64,
    min_eig: Option<f64>,
}

/// Sample times (wall, model) and the simulator propagators of a closed run.
fn sample_plan(config: &ExperimentConfig, n: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<CMatrix>)> {
    let schedule = config.schedule()?;
    match config.protocol.kind {
        ProtocolKind::Digital => {
            let wall = schedule.step_boundaries();
            let tau = config.protocol.t_s / schedule.n_trotter as f64;
            let model = (0..wall.len()).map(|k| k as f64 * tau).collect();
            Ok((wall, model, step_unitaries(&schedule, n)?))
        }
        ProtocolKind::Analog => {
            let k = config.sampling.n_samples;
            let times: Vec<f64> = (0..=k).map(|i| config.protocol.t_s * i as f64 / k as f64).collect();
            let h = segment_hamiltonian(&schedule.segments[0], n);
            let units = times.iter().map(|&t| exact_propagator(&h, t)).collect::<Result<_>>()?;
            Ok((times.clone(), times, units))
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<FidelityReport> {
    config.validate()?;
    let n = config.chain.n_sites;
    let schedule = config.schedule()?;
    let h_model = model_hamiltonian(&config.model_spec())?;
    let (wall, model, sim_units) = sample_plan(config, n)?;
    let targets: Vec<CMatrix> = model.iter().map(|&t| exact_propagator(&h_model, t)).collect::<Result<_>>()?;
    let bath = config.bath();
    let dissipative = !bath.is_zero();
    let dim3 = 3usize.pow(n as u32);

    let lindblad = if dissipative {
        let chain = config.chain_config(n)?;
        let dissipators = build_dissipators(&chain.sites, &bath)?;
        let generator = effective_generator(&schedule, &chain.dims(), 0.0)?;
        Some((chain.dims(), dissipators, generator))
    } else {
        None
    };

    let run_one = |s: usize| -> Result<StateRun> {
        let psi = haar_random_state(dim3, state_seed(config.sampling.seed, s))?;
        let target: Vec<CVector> = targets.iter().map(|u| u * &psi).collect();
        match &lindblad {
            None => {
                let fidelity = sim_units.iter().zip(&target).map(|(u, want)| want.dotc(&(u * &psi)).norm().min(1.0)).collect();
                Ok(StateRun { fidelity, leakage: vec![0.0; wall.len()], trace_drift: 0.0, min_eig: None })
            }
            Some((dims, dissipators, generator)) => {
                let rho0 = ChainState::pure(embed_state(&psi, dims), dims.clone())?;
                let mut opts = config.propagation.clone();
                opts.sample_times = wall.clone();
                let traj = propagate_lindblad(generator, Some(dissipators), &rho0, &opts)?;
                let fidelity = traj
                    .samples
                    .iter()
                    .zip(&target)
                    .map(|(sample, want)| pure_fidelity(&embed_state(want, dims), &sample.state.to_density()))
                    .collect();
                let leakage = traj.samples.iter().map(|s| s.leakage).collect();
                Ok(StateRun { fidelity, leakage, trace_drift: traj.max_trace_drift, min_eig: traj.min_eig })
            }
        }
    };
    // indexed collect keeps the reduction order fixed
    let runs: Vec<StateRun> = (0..config.sampling.n_states).into_par_iter().map(run_one).collect::<Result<_>>()?;

    let samples = wall.len();
    let mut report = FidelityReport {
        time_s: wall,
        model_time_s: model,
        fid_mean: Vec::with_capacity(samples),
        fid_min: Vec::with_capacity(samples),
        fid_max: Vec::with_capacity(samples),
        fid_stderr: Vec::with_capacity(samples),
        leakage_mean: Vec::with_capacity(samples),
        total_duration_s: schedule.total_duration_s,
        n_sites: n,
        n_states: runs.len(),
        dissipative,
        max_trace_drift: runs.iter().map(|r| r.trace_drift).fold(0.0, f64::max),
        min_eigenvalue: runs.iter().filter_map(|r| r.min_eig).reduce(f64::min),
        config_hash: config.hash(),
        seed: config.sampling.seed,
    };
    for k in 0..samples {
        let column: Vec<f64> = runs.iter().map(|r| r.fidelity[k]).collect();
        let stats = Summary::of(&column);
        report.fid_mean.push(stats.mean);
        report.fid_min.push(stats.min);
        report.fid_max.push(stats.max);
        report.fid_stderr.push(stats.stderr);
        report.leakage_mean.push(runs.iter().map(|r| r.leakage[k]).sum::<f64>() / runs.len() as f64);
    }
    Ok(report)
}

struct Summary {
    mean: f64,
    min: f64,
    max: f64,
    stderr: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, min, max, stderr }
    }
}

pub const CSV_HEADER: [&str; 6] = ["time_s", "fid_mean", "fid_min", "fid_max", "fid_stderr", "leakage_mean"];

/// One header row, then one row per sample.
pub fn emit_csv(report: &FidelityReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for k in 0..report.time_s.len() {
        w.write_record([
            report.time_s[k],
            report.fid_mean[k],
            report.fid_min[k],
            report.fid_max[k],
            report.fid_stderr[k],
            report.leakage_mean[k],
        ]
        .iter()
        .map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a CSV written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<[f64; 6]>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut row = [0.0; 6];
        for (slot, field) in row.iter_mut().zip(rec.iter()) {
            *slot = field.parse().map_err(|_| Error::Config(format!("bad number {field:?}")))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
    pub n_sites: usize,
    pub n_states: usize,
    pub dissipative: bool,
    pub total_duration_s: f64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: Option<f64>,
}

/// Write the CSV and its `.meta.json` sidecar; an existing sidecar with a
/// different config hash blocks the write unless `force` is set.
pub fn write_report(report: &FidelityReport, path: &Path, force: bool) -> Result<()> {
    let meta_file = meta_path(path);
    if !force && meta_file.exists() {
        let existing: RunMeta = serde_json::from_str(&std::fs::read_to_string(&meta_file)?)?;
        if existing.config_hash != report.config_hash {
            return Err(Error::HashMismatch {
                path: path.display().to_string(),
                existing: existing.config_hash,
                current: report.config_hash.clone(),
            });
        }
    }
    emit_csv(report, path)?;
    let meta = RunMeta {
        config_hash: report.config_hash.clone(),
        seed: report.seed,
        n_sites: report.n_sites,
        n_states: report.n_states,
        dissipative: report.dissipative,
        total_duration_s: report.total_duration_s,
        max_trace_drift: report.max_trace_drift,
        min_eigenvalue: report.min_eigenvalue,
    };
    std::fs::write(meta_file, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}
