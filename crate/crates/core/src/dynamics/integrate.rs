//! Adaptive RK4 (step doubling) and fixed-step second-order Magnus.

use super::dissipation::{CompiledDissipators, DissipatorSet};
use super::generator::Generator;
use super::state::{ChainState, StateData, TRACE_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::linalg::{expm_hermitian, min_eigenvalue, symmetrize, trace, CMatrix, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Most negative eigenvalue tolerated during a dissipative run.
pub const POSITIVITY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Adaptive fourth-order Runge–Kutta with step doubling.
    Rk4,
    /// exp(−iH(t+h/2)h) at a fixed step of `max_step`.
    Magnus2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationOptions {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper step bound (s); defaults to a twentieth of the fastest period.
    pub max_step: Option<f64>,
    /// Absolute sample times (s), ascending.
    pub sample_times: Vec<f64>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { method: Method::Rk4, abs_tol: 1e-10, rel_tol: 1e-10, max_step: None, sample_times: Vec::new() }
    }
}

impl PropagationOptions {
    pub fn with_samples(mut self, samples: Vec<f64>) -> Self {
        self.sample_times = samples;
        self
    }

    pub fn validate(&self, start: f64) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(invalid("tolerance", "abs_tol and rel_tol must be positive"));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(invalid("max_step", format!("must be positive, got {h}")));
            }
        }
        if self.sample_times.iter().any(|&t| !t.is_finite() || t < start) {
            return Err(invalid("sample_times", "must be finite and not before the initial time"));
        }
        if self.sample_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("sample_times", "must be ascending"));
        }
        Ok(())
    }

    /// Step cap for a generator; an explicit `max_step` must still resolve
    /// the fastest tone.
    pub fn resolved_max_step(&self, generator: &dyn Generator) -> Result<f64> {
        let nu = generator.max_frequency();
        let limit = if nu > 0.0 { TAU / nu / 20.0 } else { f64::INFINITY };
        match self.max_step {
            Some(h) if h > limit * (1.0 + 1e-12) => Err(invalid(
                "max_step",
                format!("{h:.3e} s does not resolve the fastest tone (need ≤ {limit:.3e} s)"),
            )),
            Some(h) => Ok(h),
            None => Ok(limit),
        }
    }
}

/// Integration statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: ChainState,
    pub trace: f64,
    /// Smallest eigenvalue of ρ; `None` for pure states.
    pub min_eig: Option<f64>,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: StepStats,
    /// Largest |tr ρ − 1| or |‖ψ‖ − 1| seen after any step.
    pub max_trace_drift: f64,
    /// Smallest eigenvalue seen at samples and breakpoints (density runs).
    pub min_eig: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.time).collect()
    }

    pub fn last(&self) -> Option<&ChainState> {
        self.samples.last().map(|s| &s.state)
    }
}

type Rhs<'a> = dyn Fn(f64, usize, &CMatrix, &mut CMatrix) + 'a;

fn rk4(rhs: &Rhs, t: f64, seg: usize, h: f64, x: &CMatrix) -> CMatrix {
    let (r, c) = x.shape();
    let mut k1 = CMatrix::zeros(r, c);
    let mut k2 = CMatrix::zeros(r, c);
    let mut k3 = CMatrix::zeros(r, c);
    let mut k4 = CMatrix::zeros(r, c);
    let half = C64::new(0.5 * h, 0.0);
    rhs(t, seg, x, &mut k1);
    rhs(t + 0.5 * h, seg, &(x + &k1 * half), &mut k2);
    rhs(t + 0.5 * h, seg, &(x + &k2 * half), &mut k3);
    rhs(t + h, seg, &(x + &k3 * C64::new(h, 0.0)), &mut k4);
    x + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, PartialEq)]
enum Stop {
    Sample,
    Breakpoint,
    Both,
}

fn stop_list(start: f64, samples: &[f64], breakpoints: &[f64]) -> Vec<(f64, Stop)> {
    let end = samples.last().copied().unwrap_or(start);
    let mut stops: Vec<(f64, Stop)> = samples.iter().map(|&t| (t, Stop::Sample)).collect();
    for &b in breakpoints {
        if b > start && b < end {
            match stops.iter_mut().find(|(t, _)| *t == b) {
                Some(entry) => entry.1 = Stop::Both,
                None => stops.push((b, Stop::Breakpoint)),
            }
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    stops
}

/// Hooks called by the driver: after every accepted step and at every stop.
trait Observer {
    fn after_step(&mut self, t: f64, x: &mut CMatrix) -> Result<()>;
    fn at_stop(&mut self, t: f64, x: &CMatrix, sample: bool, breakpoint: bool) -> Result<()>;
}

#[allow(clippy::too_many_arguments)]
fn drive(
    rhs: &Rhs,
    dense: Option<&dyn Fn(f64, usize) -> CMatrix>,
    mut x: CMatrix,
    start: f64,
    breakpoints: &[f64],
    opts: &PropagationOptions,
    max_step: f64,
    norm_bound: f64,
    per_unit_time: bool,
    observer: &mut dyn Observer,
) -> Result<StepStats> {
    let stops = stop_list(start, &opts.sample_times, breakpoints);
    let mut stats = StepStats::default();
    let mut t = start;
    let mut seg = breakpoints.iter().filter(|&&b| b <= start).count();
    let span = stops.last().map(|s| s.0 - start).unwrap_or(0.0);
    let mut h_try = max_step.min(if norm_bound > 0.0 { 0.1 / norm_bound } else { span }).min(span.max(f64::MIN_POSITIVE));
    for &(stop, kind) in &stops {
        while t < stop {
            let remaining = stop - t;
            let clipped = h_try >= remaining * (1.0 - 1e-12);
            let h = if clipped { remaining } else { h_try };
            match opts.method {
                Method::Magnus2 => {
                    let dense = dense.expect("dense generator");
                    let hm = dense(t + 0.5 * h, seg);
                    x = expm_hermitian(&hm, h) * &x;
                    t = if clipped { stop } else { t + h };
                    stats.accepted += 1;
                    observer.after_step(t, &mut x)?;
                    h_try = max_step;
                }
                Method::Rk4 => {
                    let full = rk4(rhs, t, seg, h, &x);
                    let mid = rk4(rhs, t, seg, 0.5 * h, &x);
                    let fine = rk4(rhs, t + 0.5 * h, seg, 0.5 * h, &mid);
                    let diff = &fine - &full;
                    let err = max_abs(&diff) / 15.0;
                    let mut scale = opts.abs_tol + opts.rel_tol * max_abs(&fine);
                    if per_unit_time {
                        // local errors then sum to at most the tolerance;
                        // never below what rounding can resolve
                        scale = (scale * (h / span).min(1.0)).max(64.0 * f64::EPSILON * max_abs(&fine));
                    }
                    let factor = if err == 0.0 { 4.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 4.0) };
                    if err <= scale {
                        x = fine + diff * C64::new(1.0 / 15.0, 0.0);
                        t = if clipped { stop } else { t + h };
                        stats.accepted += 1;
                        observer.after_step(t, &mut x)?;
                        h_try = if clipped { h_try.max(h * factor) } else { h * factor };
                    } else {
                        stats.rejected += 1;
                        h_try = h * factor;
                    }
                    h_try = h_try.min(max_step);
                    if h_try < 1e-14 * t.abs().max(span) {
                        return Err(Error::StepUnderflow { time: t, step: h_try });
                    }
                }
            }
        }
        let sample = matches!(kind, Stop::Sample | Stop::Both);
        let breakpoint = matches!(kind, Stop::Breakpoint | Stop::Both);
        observer.at_stop(t, &x, sample, breakpoint)?;
        if breakpoint {
            seg += 1;
        }
    }
    Ok(stats)
}

fn schrodinger_rhs(generator: &dyn Generator) -> impl Fn(f64, usize, &CMatrix, &mut CMatrix) + '_ {
    move |t, seg, x, out| {
        generator.apply(t, seg, x, out);
        *out *= C64::new(0.0, -1.0);
    }
}

struct ColumnObserver {
    samples: Vec<CMatrix>,
}

impl Observer for ColumnObserver {
    fn after_step(&mut self, _t: f64, _x: &mut CMatrix) -> Result<()> {
        Ok(())
    }

    fn at_stop(&mut self, _t: f64, x: &CMatrix, sample: bool, _breakpoint: bool) -> Result<()> {
        if sample {
            self.samples.push(x.clone());
        }
        Ok(())
    }
}

/// Propagate a block of columns from `start` to each sample time.
pub fn propagate_columns(generator: &dyn Generator, x0: CMatrix, start: f64, opts: &PropagationOptions) -> Result<(Vec<CMatrix>, StepStats)> {
    opts.validate(start)?;
    if x0.nrows() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), got: x0.nrows() });
    }
    let max_step = opts.resolved_max_step(generator)?;
    let rhs = schrodinger_rhs(generator);
    let dense = |t: f64, seg: usize| generator.dense(t, seg);
    let mut obs = ColumnObserver { samples: Vec::new() };
    let stats = drive(&rhs, Some(&dense), x0, start, &generator.breakpoints(), opts, max_step, generator.norm_bound(), false, &mut obs)?;
    Ok((obs.samples, stats))
}

struct PureObserver {
    dims: Vec<usize>,
    budget: f64,
    max_drift: f64,
    samples: Vec<Sample>,
}

impl Observer for PureObserver {
    fn after_step(&mut self, t: f64, x: &mut CMatrix) -> Result<()> {
        let drift = (x.norm() - 1.0).abs();
        self.max_drift = self.max_drift.max(drift);
        if drift > self.budget {
            return Err(Error::NormDrift { drift, budget: self.budget, time: t });
        }
        Ok(())
    }

    fn at_stop(&mut self, t: f64, x: &CMatrix, sample: bool, _breakpoint: bool) -> Result<()> {
        if sample {
            let state = ChainState { data: StateData::Pure(x.column(0).into_owned()), time: t, dims: self.dims.clone() };
            self.samples.push(Sample { trace: x.norm_squared(), min_eig: None, leakage: state.leakage(), state });
        }
        Ok(())
    }
}

/// Schrödinger evolution of a pure state; norm drift beyond 10·abs_tol aborts.
/// Steps are controlled per unit time so the budget holds over long runs.
pub fn propagate_unitary(generator: &dyn Generator, psi0: &ChainState, opts: &PropagationOptions) -> Result<Trajectory> {
    let StateData::Pure(psi) = &psi0.data else {
        return Err(invalid("state", "unitary propagation needs a pure state"));
    };
    opts.validate(psi0.time)?;
    if psi.len() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), got: psi.len() });
    }
    let max_step = opts.resolved_max_step(generator)?;
    let rhs = schrodinger_rhs(generator);
    let dense = |t: f64, seg: usize| generator.dense(t, seg);
    let mut obs = PureObserver { dims: psi0.dims.clone(), budget: 10.0 * opts.abs_tol, max_drift: 0.0, samples: Vec::new() };
    let x0 = CMatrix::from_column_slice(psi.len(), 1, psi.as_slice());
    let stats = drive(&rhs, Some(&dense), x0, psi0.time, &generator.breakpoints(), opts, max_step, generator.norm_bound(), true, &mut obs)?;
    Ok(Trajectory { samples: obs.samples, stats, max_trace_drift: obs.max_drift, min_eig: None })
}

struct DensityObserver {
    dims: Vec<usize>,
    max_drift: f64,
    min_eig: f64,
    samples: Vec<Sample>,
}

impl Observer for DensityObserver {
    fn after_step(&mut self, t: f64, x: &mut CMatrix) -> Result<()> {
        symmetrize(x);
        let drift = (trace(x).re - 1.0).abs();
        self.max_drift = self.max_drift.max(drift);
        if drift > TRACE_TOLERANCE {
            return Err(Error::NormDrift { drift, budget: TRACE_TOLERANCE, time: t });
        }
        Ok(())
    }

    fn at_stop(&mut self, t: f64, x: &CMatrix, sample: bool, _breakpoint: bool) -> Result<()> {
        let min = min_eigenvalue(x);
        self.min_eig = self.min_eig.min(min);
        if min < -POSITIVITY_LIMIT {
            return Err(Error::PositivityLost { min_eig: min, time: t });
        }
        if sample {
            let state = ChainState { data: StateData::Density(x.clone()), time: t, dims: self.dims.clone() };
            self.samples.push(Sample { trace: trace(x).re, min_eig: Some(min), leakage: state.leakage(), state });
        }
        Ok(())
    }
}

/// Lindblad evolution ρ̇ = −i[H, ρ] + Σ rate·D[O]ρ.
pub fn propagate_lindblad(
    generator: &dyn Generator,
    dissipators: Option<&DissipatorSet>,
    rho0: &ChainState,
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    if opts.method != Method::Rk4 {
        return Err(Error::Unsupported("the Magnus integrator handles unitary evolution only".into()));
    }
    opts.validate(rho0.time)?;
    let rho = rho0.to_density();
    if rho.nrows() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), got: rho.nrows() });
    }
    let compiled: Option<CompiledDissipators> = dissipators.filter(|d| !d.is_empty()).map(|d| d.compile(&rho0.dims));
    let max_step = opts.resolved_max_step(generator)?;
    let rhs = |t: f64, seg: usize, x: &CMatrix, out: &mut CMatrix| {
        generator.apply(t, seg, x, out);
        // −i(Hρ − ρH) with ρH = (Hρ)† for Hermitian ρ
        let hr = out.clone();
        *out = (hr.adjoint() - hr) * C64::new(0.0, 1.0);
        if let Some(c) = &compiled {
            c.accumulate(x, out);
        }
    };
    let mut obs = DensityObserver { dims: rho0.dims.clone(), max_drift: 0.0, min_eig: f64::INFINITY, samples: Vec::new() };
    let stats = drive(&rhs, None, rho, rho0.time, &generator.breakpoints(), opts, max_step, generator.norm_bound(), false, &mut obs)?;
    Ok(Trajectory { samples: obs.samples, stats, max_trace_drift: obs.max_drift, min_eig: Some(obs.min_eig) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::generator::ConstantGenerator;
    use crate::linalg::{expm_hermitian, CVector};

    fn two_level(h: &[[f64; 2]; 2]) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| C64::new(h[i][j], 0.0))
    }

    #[test]
    fn zero_hamiltonian_is_static() {
        let g = ConstantGenerator::new(&CMatrix::zeros(2, 2));
        let psi = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let s0 = ChainState::pure(psi.clone(), vec![2]).unwrap();
        let traj = propagate_unitary(&g, &s0, &PropagationOptions::default().with_samples(vec![0.0, 1.0, 5.0])).unwrap();
        for s in &traj.samples {
            assert_eq!(s.state.data, StateData::Pure(psi.clone()));
        }
    }

    #[test]
    fn constant_matches_exponential() {
        let h = two_level(&[[0.3, 1.1], [1.1, -0.7]]);
        let g = ConstantGenerator::new(&h);
        let psi = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let s0 = ChainState::pure(psi.clone(), vec![2]).unwrap();
        let traj = propagate_unitary(&g, &s0, &PropagationOptions::default().with_samples(vec![2.5])).unwrap();
        let want = expm_hermitian(&h, 2.5) * &psi;
        let StateData::Pure(got) = &traj.samples[0].state.data else { panic!() };
        assert!((got - want).norm() < 1e-8);
    }

    #[test]
    fn magnus_on_constant() {
        let h = two_level(&[[0.0, 1.0], [1.0, 0.0]]);
        let g = ConstantGenerator::new(&h);
        let x0 = CMatrix::identity(2, 2);
        let opts = PropagationOptions { method: Method::Magnus2, max_step: Some(0.1), ..Default::default() }.with_samples(vec![1.0]);
        let (out, _) = propagate_columns(&g, x0, 0.0, &opts).unwrap();
        assert!((&out[0] - expm_hermitian(&h, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn lindblad_rejects_magnus() {
        let g = ConstantGenerator::new(&CMatrix::zeros(2, 2));
        let s0 = ChainState::density(CMatrix::identity(2, 2) * C64::new(0.5, 0.0), vec![2]).unwrap();
        let opts = PropagationOptions { method: Method::Magnus2, max_step: Some(0.1), ..Default::default() };
        assert!(matches!(propagate_lindblad(&g, None, &s0, &opts), Err(Error::Unsupported(_))));
    }

    #[test]
    fn unresolved_max_step_is_refused() {
        let mut g = crate::dynamics::generator::InteractionGenerator::new(vec![0.0, 100.0]);
        g.add_channel(&two_level(&[[0.0, 1.0], [1.0, 0.0]]), crate::dynamics::generator::Waveform::Constant(1.0)).unwrap();
        let opts = PropagationOptions { max_step: Some(1.0), ..Default::default() }.with_samples(vec![1.0]);
        assert!(propagate_columns(&g, CMatrix::identity(2, 2), 0.0, &opts).is_err());
    }
}
