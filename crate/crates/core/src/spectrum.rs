//! Single-site quantum Rabi spectrum.
//!
//! The bare basis is {|g⟩, |e⟩} ⊗ {|0⟩ … |n_fock−1⟩} with the qubit index most
//! significant, so the basis vector |q, n⟩ sits at `q * n_fock + n`. The qubit
//! ground state |g⟩ carries σ_z = −1.

use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Parity expectation must be this close to ±1 for a retained level.
pub const PARITY_TOLERANCE: f64 = 1e-6;
/// Same-parity χ elements above this are a hard failure.
pub const SELECTION_RULE_LIMIT: f64 = 1e-8;
/// Direct and summed (a+a†)² elements must agree to this relative tolerance.
pub const Z_CONSISTENCY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    A,
    B,
}

impl Species {
    pub fn other(self) -> Self {
        match self {
            Species::A => Species::B,
            Species::B => Species::A,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::A => write!(f, "A"),
            Species::B => write!(f, "B"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrsParams {
    /// Qubit angular frequency (rad/s).
    pub omega_q: f64,
    /// Resonator angular frequency (rad/s).
    pub omega_r: f64,
    /// Qubit-resonator coupling (rad/s).
    pub g: f64,
    pub n_fock: usize,
    pub species: Species,
}

impl QrsParams {
    pub fn new(omega_q: f64, omega_r: f64, g: f64, n_fock: usize, species: Species) -> Self {
        Self { omega_q, omega_r, g, n_fock, species }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_q > 0.0 && self.omega_q.is_finite()) {
            return Err(invalid("omega_q", format!("must be positive, got {}", self.omega_q)));
        }
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return Err(invalid("omega_r", format!("must be positive, got {}", self.omega_r)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(invalid("g", format!("must be non-negative, got {}", self.g)));
        }
        if self.n_fock < 2 {
            return Err(invalid("n_fock", format!("need at least 2 Fock states, got {}", self.n_fock)));
        }
        Ok(())
    }
}

/// (a + a†) on the bare qubit ⊗ Fock space.
pub fn field_quadrature(n_fock: usize) -> DMatrix<f64> {
    let dim = 2 * n_fock;
    let mut x = DMatrix::zeros(dim, dim);
    for q in 0..2 {
        for n in 0..n_fock - 1 {
            let amp = ((n + 1) as f64).sqrt();
            let (i, j) = (q * n_fock + n, q * n_fock + n + 1);
            x[(i, j)] = amp;
            x[(j, i)] = amp;
        }
    }
    x
}

/// (a + a†)² with exact oscillator matrix elements inside the truncated space
/// (not the square of the truncated quadrature).
pub fn field_quadrature_squared(n_fock: usize) -> DMatrix<f64> {
    let dim = 2 * n_fock;
    let mut x2 = DMatrix::zeros(dim, dim);
    for q in 0..2 {
        for n in 0..n_fock {
            let i = q * n_fock + n;
            x2[(i, i)] = (2 * n + 1) as f64;
            if n + 2 < n_fock {
                let amp = (((n + 1) * (n + 2)) as f64).sqrt();
                x2[(i, i + 2)] = amp;
                x2[(i + 2, i)] = amp;
            }
        }
    }
    x2
}

pub fn sigma_x(n_fock: usize) -> DMatrix<f64> {
    let dim = 2 * n_fock;
    let mut s = DMatrix::zeros(dim, dim);
    for n in 0..n_fock {
        s[(n, n_fock + n)] = 1.0;
        s[(n_fock + n, n)] = 1.0;
    }
    s
}

pub fn sigma_z(n_fock: usize) -> DMatrix<f64> {
    let dim = 2 * n_fock;
    DMatrix::from_fn(dim, dim, |i, j| match (i == j, i < n_fock) {
        (true, true) => -1.0,
        (true, false) => 1.0,
        _ => 0.0,
    })
}

/// Diagonal of Π = exp(iπ(a†a + σ⁺σ⁻)).
pub fn parity_diagonal(n_fock: usize) -> DVector<f64> {
    DVector::from_fn(2 * n_fock, |i, _| {
        let (q, n) = (i / n_fock, i % n_fock);
        if (q + n) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

/// H = (ω_q/2)σ_z + ω_r a†a + g σ_x(a + a†).
pub fn build_rabi_hamiltonian(params: &QrsParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let n = params.n_fock;
    let mut h = sigma_z(n) * (0.5 * params.omega_q);
    for q in 0..2 {
        for m in 0..n {
            h[(q * n + m, q * n + m)] += params.omega_r * m as f64;
        }
    }
    h += (sigma_x(n) * field_quadrature(n)) * params.g;
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityLabel {
    pub sign: i8,
    /// ⟨ψ|Π|ψ⟩, kept as a sharpness diagnostic.
    pub expectation: f64,
}

impl ParityLabel {
    pub fn is_sharp(&self) -> bool {
        self.expectation.abs() >= 1.0 - PARITY_TOLERANCE
    }
}

/// Parity of a normalized state on the bare qubit ⊗ Fock space.
pub fn parity_label(state: &DVector<f64>) -> Result<ParityLabel> {
    if !state.len().is_multiple_of(2) || state.is_empty() {
        return Err(invalid("state", format!("length {} is not 2·n_fock", state.len())));
    }
    let parity = parity_diagonal(state.len() / 2);
    let expectation: f64 = state.iter().zip(parity.iter()).map(|(c, p)| c * c * p).sum();
    let sign = if expectation >= 0.0 { 1 } else { -1 };
    Ok(ParityLabel { sign, expectation })
}

/// Dressed eigenpairs of one Rabi system, all levels below the cutoff.
#[derive(Debug, Clone)]
pub struct QrsSpectrum {
    /// Ascending eigenvalues (rad/s).
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, bare basis.
    pub states: DMatrix<f64>,
    pub parities: Vec<ParityLabel>,
    pub n_kept: usize,
    pub n_fock: usize,
}

impl QrsSpectrum {
    pub fn kept_energies(&self) -> &[f64] {
        &self.energies[..self.n_kept]
    }

    pub fn parity(&self, level: usize) -> i8 {
        self.parities[level].sign
    }

    /// ⟨k|op|j⟩ for all levels below the cutoff.
    pub fn full_elements(&self, op: &DMatrix<f64>) -> DMatrix<f64> {
        self.states.transpose() * op * &self.states
    }

    /// ⟨k|op|j⟩ restricted to the retained levels.
    pub fn kept_elements(&self, op: &DMatrix<f64>) -> DMatrix<f64> {
        let kept = self.states.columns(0, self.n_kept);
        kept.transpose() * op * kept
    }
}

fn fix_phase(v: &mut DVector<f64>) {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = k;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Ascending eigenpairs of a real-symmetric Hamiltonian on the qubit ⊗ Fock
/// basis, with parity labels.
///
/// Degenerate eigenvalues are resolved by diagonalizing Π inside the
/// degenerate block so every retained level carries a sharp parity.
pub fn diagonalize(h: &DMatrix<f64>, n_kept: usize) -> Result<QrsSpectrum> {
    let dim = h.nrows();
    if dim != h.ncols() {
        return Err(Error::DimensionMismatch { expected: dim, got: h.ncols() });
    }
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(invalid("h", format!("dimension {dim} is not 2·n_fock")));
    }
    if n_kept == 0 || n_kept > dim {
        return Err(invalid("n_kept", format!("{n_kept} not in 1..={dim}")));
    }
    let n_fock = dim / 2;
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut states =
        DMatrix::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>());

    let scale = h.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let degeneracy_tol = 1e-9 * scale;
    let parity = DMatrix::from_diagonal(&parity_diagonal(n_fock));
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && energies[end] - energies[end - 1] <= degeneracy_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = states.columns(start, end - start).into_owned();
            let pi_block = block.transpose() * &parity * &block;
            let rot = SymmetricEigen::new(pi_block);
            let mut idx: Vec<usize> = (0..end - start).collect();
            // positive parity first inside a degenerate block
            idx.sort_by(|&a, &b| rot.eigenvalues[b].total_cmp(&rot.eigenvalues[a]));
            let rotated = &block * &rot.eigenvectors;
            for (slot, &k) in idx.iter().enumerate() {
                states.set_column(start + slot, &rotated.column(k));
            }
        }
        start = end;
    }

    let mut parities = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut v = states.column(k).into_owned();
        v /= v.norm();
        fix_phase(&mut v);
        parities.push(parity_label(&v)?);
        states.set_column(k, &v);
    }
    for (level, p) in parities.iter().enumerate().take(n_kept) {
        if !p.is_sharp() {
            return Err(Error::ParityNotSharp { level, expectation: p.expectation });
        }
    }
    Ok(QrsSpectrum { energies, states, parities, n_kept, n_fock })
}

/// Build and diagonalize the Rabi Hamiltonian in one step.
pub fn solve(params: &QrsParams, n_kept: usize) -> Result<QrsSpectrum> {
    diagonalize(&build_rabi_hamiltonian(params)?, n_kept)
}

/// χ over the retained levels with the parity selection rule enforced.
pub fn chi_elements(spectrum: &QrsSpectrum) -> Result<DMatrix<f64>> {
    let mut chi = spectrum.kept_elements(&field_quadrature(spectrum.n_fock));
    for k in 0..spectrum.n_kept {
        for j in 0..spectrum.n_kept {
            if spectrum.parity(k) == spectrum.parity(j) {
                let raw = chi[(k, j)];
                if raw.abs() > SELECTION_RULE_LIMIT {
                    return Err(Error::SelectionRuleViolated { k, j, value: raw });
                }
                chi[(k, j)] = 0.0;
            }
        }
    }
    Ok(chi)
}

/// χ over every level below the cutoff, no enforcement.
pub fn chi_full(spectrum: &QrsSpectrum) -> DMatrix<f64> {
    spectrum.full_elements(&field_quadrature(spectrum.n_fock))
}

/// Relative disagreement between direct ⟨k|(a+a†)²|j⟩ and Σ_l χ_kl χ_lj over
/// the retained block.
pub fn z_consistency(spectrum: &QrsSpectrum) -> f64 {
    let direct = spectrum.kept_elements(&field_quadrature_squared(spectrum.n_fock));
    let chi = chi_full(spectrum);
    let summed = (&chi * &chi).view((0, 0), (spectrum.n_kept, spectrum.n_kept)).into_owned();
    let scale = direct.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    (direct - summed).iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale
}

/// z_kj = ⟨k|(a+a†)²|j⟩ over the retained levels, opposite-parity entries
/// forced to zero.
pub fn z_elements(spectrum: &QrsSpectrum) -> Result<DMatrix<f64>> {
    let relative = z_consistency(spectrum);
    if relative > Z_CONSISTENCY_LIMIT {
        return Err(Error::SquaredFieldMismatch { relative });
    }
    let mut z = spectrum.kept_elements(&field_quadrature_squared(spectrum.n_fock));
    for k in 0..spectrum.n_kept {
        for j in 0..spectrum.n_kept {
            if spectrum.parity(k) != spectrum.parity(j) {
                z[(k, j)] = 0.0;
            }
        }
    }
    Ok(z)
}

#[derive(Debug, Clone)]
pub struct MatrixElements {
    pub chi: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

impl MatrixElements {
    pub fn from_spectrum(spectrum: &QrsSpectrum) -> Result<Self> {
        Ok(Self { chi: chi_elements(spectrum)?, z: z_elements(spectrum)? })
    }
}

/// ε_j = λ_j + (P_left + P_right)·z_jj over the retained levels.
pub fn dressed_energies(lambda: &[f64], z: &DMatrix<f64>, p_left: f64, p_right: f64) -> Result<Vec<f64>> {
    if p_left < 0.0 || p_right < 0.0 {
        return Err(invalid("P", format!("static couplings must be non-negative, got ({p_left}, {p_right})")));
    }
    if z.nrows() > lambda.len() {
        return Err(Error::DimensionMismatch { expected: z.nrows(), got: lambda.len() });
    }
    let p = p_left + p_right;
    Ok((0..z.nrows()).map(|j| lambda[j] + p * z[(j, j)]).collect())
}

/// Everything about one species that does not depend on its chain position.
#[derive(Debug, Clone)]
pub struct DressedSpecies {
    pub params: QrsParams,
    pub spectrum: QrsSpectrum,
    pub elements: MatrixElements,
    /// ⟨k|σ_x|j⟩ over the retained levels.
    pub sigma_x: DMatrix<f64>,
    /// ⟨k|σ_z|j⟩ over the retained levels.
    pub sigma_z: DMatrix<f64>,
    /// Σ |χ_kj|² with j retained and k discarded.
    pub discarded_field_weight: f64,
}

impl DressedSpecies {
    pub fn new(params: QrsParams, n_kept: usize) -> Result<Self> {
        let spectrum = solve(&params, n_kept)?;
        let elements = MatrixElements::from_spectrum(&spectrum)?;
        let sigma_x = spectrum.kept_elements(&sigma_x(params.n_fock));
        let sigma_z = spectrum.kept_elements(&sigma_z(params.n_fock));
        let full = chi_full(&spectrum);
        let mut discarded_field_weight = 0.0;
        for j in 0..n_kept {
            for k in n_kept..full.nrows() {
                discarded_field_weight += full[(k, j)].powi(2);
            }
        }
        Ok(Self { params, spectrum, elements, sigma_x, sigma_z, discarded_field_weight })
    }

    pub fn n_kept(&self) -> usize {
        self.spectrum.n_kept
    }
}

/// A species placed in the chain, with its on-site energy shifts.
#[derive(Debug, Clone)]
pub struct DressedSite {
    pub species: std::sync::Arc<DressedSpecies>,
    /// Sum of the static couplings of the adjacent SQUIDs (rad/s).
    pub p_sum: f64,
    /// ε_j (rad/s) over the retained levels.
    pub epsilon: Vec<f64>,
}

impl DressedSite {
    pub fn new(species: std::sync::Arc<DressedSpecies>, p_left: f64, p_right: f64) -> Result<Self> {
        let epsilon = dressed_energies(&species.spectrum.energies, &species.elements.z, p_left, p_right)?;
        Ok(Self { species, p_sum: p_left + p_right, epsilon })
    }

    pub fn n_kept(&self) -> usize {
        self.epsilon.len()
    }

    pub fn chi(&self) -> &DMatrix<f64> {
        &self.species.elements.chi
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.species.elements.z
    }

    /// ε_k − ε_j.
    pub fn gap(&self, k: usize, j: usize) -> f64 {
        self.epsilon[k] - self.epsilon[j]
    }

    pub fn parities(&self) -> Vec<i8> {
        (0..self.n_kept()).map(|k| self.species.spectrum.parity(k)).collect()
    }
}
