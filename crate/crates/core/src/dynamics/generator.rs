//! Time-dependent Hamiltonians applied to blocks of column vectors.

use crate::circuit::{ChainConfig, FluxSignal, Tone};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use nalgebra_sparse::ops::serial::spmm_csr_dense;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

/// Entries below this magnitude are dropped when sparsifying.
const SPARSE_FLOOR: f64 = 1e-300;

pub fn to_csr(m: &CMatrix) -> CsrMatrix<C64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.norm() > SPARSE_FLOOR {
                coo.push(i, j, v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

fn csr_norm_bound(m: &CsrMatrix<C64>) -> f64 {
    // max absolute row sum bounds the spectral radius
    (0..m.nrows())
        .map(|i| m.row(i).values().iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// H(t) applied as `out = H(t) x` on an n × k block.
///
/// `segment` is the index of the breakpoint interval the integrator is
/// currently inside, so piecewise generators never need to guess at a
/// boundary.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, segment: usize, x: &CMatrix, out: &mut CMatrix);
    fn dense(&self, t: f64, segment: usize) -> CMatrix;
    /// Interior times where H jumps.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Fastest explicit time dependence (rad/s); 0 when constant.
    fn max_frequency(&self) -> f64;
    /// Upper bound on ‖H(t)‖.
    fn norm_bound(&self) -> f64;
}

pub struct ConstantGenerator {
    h: CsrMatrix<C64>,
    norm: f64,
}

impl ConstantGenerator {
    pub fn new(h: &CMatrix) -> Self {
        let h = to_csr(h);
        let norm = csr_norm_bound(&h);
        Self { h, norm }
    }
}

impl Generator for ConstantGenerator {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn apply(&self, _t: f64, _segment: usize, x: &CMatrix, out: &mut CMatrix) {
        spmm_csr_dense(C64::new(0.0, 0.0), out, C64::new(1.0, 0.0), Op::NoOp(&self.h), Op::NoOp(x));
    }

    fn dense(&self, _t: f64, _segment: usize) -> CMatrix {
        nalgebra_sparse::convert::serial::convert_csr_dense(&self.h)
    }

    fn max_frequency(&self) -> f64 {
        0.0
    }

    fn norm_bound(&self) -> f64 {
        self.norm
    }
}

/// Constant pieces in time order.
pub struct PiecewiseGenerator {
    pieces: Vec<CsrMatrix<C64>>,
    /// Cumulative end time of each piece.
    ends: Vec<f64>,
    norm: f64,
}

impl PiecewiseGenerator {
    pub fn new(pieces: Vec<(CMatrix, f64)>, start: f64) -> Result<Self> {
        let mut t = start;
        let mut mats = Vec::with_capacity(pieces.len());
        let mut ends = Vec::with_capacity(pieces.len());
        let dim = pieces.first().map(|(h, _)| h.nrows()).unwrap_or(0);
        for (h, duration) in pieces {
            if h.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: h.nrows() });
            }
            t += duration;
            mats.push(to_csr(&h));
            ends.push(t);
        }
        let norm = mats.iter().map(csr_norm_bound).fold(0.0, f64::max);
        Ok(Self { pieces: mats, ends, norm })
    }

    pub fn end_time(&self) -> f64 {
        self.ends.last().copied().unwrap_or(0.0)
    }

    fn piece(&self, segment: usize) -> &CsrMatrix<C64> {
        &self.pieces[segment.min(self.pieces.len() - 1)]
    }
}

impl Generator for PiecewiseGenerator {
    fn dim(&self) -> usize {
        self.pieces.first().map(|p| p.nrows()).unwrap_or(0)
    }

    fn apply(&self, _t: f64, segment: usize, x: &CMatrix, out: &mut CMatrix) {
        spmm_csr_dense(C64::new(0.0, 0.0), out, C64::new(1.0, 0.0), Op::NoOp(self.piece(segment)), Op::NoOp(x));
    }

    fn dense(&self, _t: f64, segment: usize) -> CMatrix {
        nalgebra_sparse::convert::serial::convert_csr_dense(self.piece(segment))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let n = self.ends.len();
        self.ends[..n.saturating_sub(1)].to_vec()
    }

    fn max_frequency(&self) -> f64 {
        0.0
    }

    fn norm_bound(&self) -> f64 {
        self.norm
    }
}

/// Time dependence multiplying one channel operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    Constant(f64),
    Tones(Vec<Tone>),
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Waveform::Constant(c) => *c,
            Waveform::Tones(tones) => tones.iter().map(|tone| tone.value(t)).sum(),
        }
    }

    fn max_frequency(&self) -> f64 {
        match self {
            Waveform::Constant(_) => 0.0,
            Waveform::Tones(t) => t.iter().map(|x| x.frequency.abs()).fold(0.0, f64::max),
        }
    }

    fn max_amplitude(&self) -> f64 {
        match self {
            Waveform::Constant(c) => c.abs(),
            Waveform::Tones(t) => t.iter().map(|x| x.amplitude.abs()).sum(),
        }
    }
}

struct Channel {
    op: CsrMatrix<C64>,
    waveform: Waveform,
    /// Largest |E_a − E_b| over the nonzero entries of `op`.
    spread: f64,
}

/// H_I(t) = Σ_c w_c(t) e^{iH_o t} O_c e^{−iH_o t} for a diagonal H_o.
pub struct InteractionGenerator {
    energies: Vec<f64>,
    channels: Vec<Channel>,
}

impl InteractionGenerator {
    pub fn new(energies: Vec<f64>) -> Self {
        Self { energies, channels: Vec::new() }
    }

    pub fn add_channel(&mut self, op: &CMatrix, waveform: Waveform) -> Result<()> {
        if op.nrows() != self.energies.len() || op.ncols() != self.energies.len() {
            return Err(Error::DimensionMismatch { expected: self.energies.len(), got: op.nrows() });
        }
        let op = to_csr(op);
        let spread = op
            .triplet_iter()
            .map(|(i, j, _)| (self.energies[i] - self.energies[j]).abs())
            .fold(0.0, f64::max);
        self.channels.push(Channel { op, waveform, spread });
        Ok(())
    }

    /// Flux-driven chain in the frame of H_o = Σ ε_j |j⟩⟨j|.
    ///
    /// `fluxes` has one signal per SQUID, `drives` one tone list per site
    /// applied to that site's (a+a†). With `include_static` the residual
    /// static couplings (off-diagonal P terms and the static cross term) are
    /// added as a constant channel.
    pub fn flux_driven(chain: &ChainConfig, fluxes: &[FluxSignal], drives: &[Vec<Tone>], include_static: bool) -> Result<Self> {
        if fluxes.len() != chain.couplings.len() {
            return Err(Error::DimensionMismatch { expected: chain.couplings.len(), got: fluxes.len() });
        }
        if !drives.is_empty() && drives.len() != chain.n_sites() {
            return Err(Error::DimensionMismatch { expected: chain.n_sites(), got: drives.len() });
        }
        let energies = chain.unperturbed_energies();
        let mut gen = Self::new(energies.clone());
        if include_static {
            // the diagonal of the static coupling is already inside ε
            let mut residual = chain.static_coupling();
            residual.fill_diagonal(C64::new(0.0, 0.0));
            gen.add_channel(&residual, Waveform::Constant(1.0))?;
        }
        for (s, signal) in fluxes.iter().enumerate() {
            if signal.tones.iter().all(|t| t.amplitude == 0.0) && signal.dc == 0.0 {
                continue;
            }
            let mut tones = signal.tones.clone();
            if signal.dc != 0.0 {
                tones.push(Tone { amplitude: signal.dc, frequency: 0.0, phase: 0.0 });
            }
            gen.add_channel(&chain.modulation_operator(s), Waveform::Tones(tones))?;
        }
        for (l, tones) in drives.iter().enumerate() {
            if tones.is_empty() {
                continue;
            }
            gen.add_channel(&chain.field(l), Waveform::Tones(tones.clone()))?;
        }
        Ok(gen)
    }
}

impl Generator for InteractionGenerator {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn apply(&self, t: f64, _segment: usize, x: &CMatrix, out: &mut CMatrix) {
        let phases: Vec<C64> = self.energies.iter().map(|e| C64::from_polar(1.0, e * t)).collect();
        let mut rotated = x.clone();
        for (i, p) in phases.iter().enumerate() {
            let conj = p.conj();
            for v in rotated.row_mut(i).iter_mut() {
                *v *= conj;
            }
        }
        out.fill(C64::new(0.0, 0.0));
        for c in &self.channels {
            let w = c.waveform.value(t);
            if w == 0.0 {
                continue;
            }
            spmm_csr_dense(C64::new(1.0, 0.0), &mut *out, C64::new(w, 0.0), Op::NoOp(&c.op), Op::NoOp(&rotated));
        }
        for (i, p) in phases.iter().enumerate() {
            for v in out.row_mut(i).iter_mut() {
                *v *= p;
            }
        }
    }

    fn dense(&self, t: f64, _segment: usize) -> CMatrix {
        let n = self.dim();
        let mut h = CMatrix::zeros(n, n);
        for c in &self.channels {
            let w = c.waveform.value(t);
            for (i, j, v) in c.op.triplet_iter() {
                h[(i, j)] += v * w * C64::from_polar(1.0, (self.energies[i] - self.energies[j]) * t);
            }
        }
        h
    }

    fn max_frequency(&self) -> f64 {
        self.channels
            .iter()
            .filter(|c| c.waveform.max_amplitude() > 0.0)
            .map(|c| c.spread + c.waveform.max_frequency())
            .fold(0.0, f64::max)
    }

    fn norm_bound(&self) -> f64 {
        self.channels.iter().map(|c| csr_norm_bound(&c.op) * c.waveform.max_amplitude()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_frame_phases() {
        let mut op = CMatrix::zeros(2, 2);
        op[(0, 1)] = C64::new(1.0, 0.0);
        op[(1, 0)] = C64::new(1.0, 0.0);
        let mut g = InteractionGenerator::new(vec![0.0, 2.0]);
        g.add_channel(&op, Waveform::Constant(0.5)).unwrap();
        let h = g.dense(0.3, 0);
        assert!((h[(1, 0)] - C64::from_polar(0.5, 0.6)).norm() < 1e-15);
        let x = CMatrix::identity(2, 2);
        let mut out = CMatrix::zeros(2, 2);
        g.apply(0.3, 0, &x, &mut out);
        assert!((out - h).norm() < 1e-15);
        assert_eq!(g.max_frequency(), 2.0);
    }

    #[test]
    fn piecewise_breakpoints() {
        let a = CMatrix::identity(2, 2);
        let g = PiecewiseGenerator::new(vec![(a.clone(), 1.0), (a.clone() * C64::new(2.0, 0.0), 0.5), (a, 2.0)], 0.0).unwrap();
        assert_eq!(g.breakpoints(), vec![1.0, 1.5]);
        assert_eq!(g.end_time(), 3.5);
        assert_eq!(g.dense(0.0, 1)[(0, 0)].re, 2.0);
    }
}
