//! Exact spin-1 reference: operators, target Hamiltonians, propagators and
//! the fidelity metric.
//!
//! The local basis is {|0⟩, |1⟩, |2⟩} = the three lowest dressed levels, with
//! |0⟩ the m = −1 state.

use crate::error::{invalid, Error, Result};
use crate::linalg::{embed, embed_pair, expm_hermitian, hermitian_function, CMatrix, CVector, C64, I};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

/// Largest dimension handled by the dense exponential path (four spin-1 sites).
pub const MAX_DENSE_DIM: usize = 81;

#[derive(Debug, Clone)]
pub struct Spin1Ops {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

impl Spin1Ops {
    pub fn get(&self, axis: Axis) -> &CMatrix {
        match axis {
            Axis::X => &self.sx,
            Axis::Y => &self.sy,
            Axis::Z => &self.sz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// S_X, S_Y from the ladder |1⟩⟨0| + |2⟩⟨1|; S_Z = −i[S_X, S_Y].
pub fn spin1_ops() -> Spin1Ops {
    let mut raise = CMatrix::zeros(3, 3);
    raise[(1, 0)] = C64::new(1.0, 0.0);
    raise[(2, 1)] = C64::new(1.0, 0.0);
    let lower = raise.adjoint();
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let sx = (&raise + &lower) * s;
    let sy = (&raise * (-I) + &lower * I) * s;
    let sz = (&sx * &sy - &sy * &sx) * (-I);
    Spin1Ops { sx, sy, sz }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    /// Σ λ_x S_X S_X + λ_y S_Y S_Y + λ_z S_Z S_Z.
    Heisenberg { lambda_x: f64, lambda_y: f64, lambda_z: f64 },
    /// Heisenberg with λ_x = λ_y.
    Xxz { lambda_xy: f64, lambda_z: f64 },
    /// Σ J S_X S_X + Σ B S_X.
    Ising { j: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_sites: usize,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(invalid("n_sites", format!("need at least 2 sites, got {}", self.n_sites)));
        }
        Ok(())
    }

    /// (λ_x, λ_y, λ_z) for the Heisenberg-type models.
    pub fn lambdas(&self) -> Option<[f64; 3]> {
        match self.kind {
            ModelKind::Heisenberg { lambda_x, lambda_y, lambda_z } => Some([lambda_x, lambda_y, lambda_z]),
            ModelKind::Xxz { lambda_xy, lambda_z } => Some([lambda_xy, lambda_xy, lambda_z]),
            ModelKind::Ising { .. } => None,
        }
    }
}

/// Σ_ℓ c·S_a^ℓ S_a^ℓ+1 on an open chain of `n` spin-1 sites.
pub fn bond_sum(axis: Axis, c: f64, n: usize) -> CMatrix {
    bond_sum_on(axis, c, &vec![3; n])
}

/// Same as [`bond_sum`], with spin-1 operators padded into `dims[ℓ] ≥ 3`
/// local levels.
pub fn bond_sum_on(axis: Axis, c: f64, dims: &[usize]) -> CMatrix {
    let ops = spin1_ops();
    let dim: usize = dims.iter().product();
    let mut h = CMatrix::zeros(dim, dim);
    if c == 0.0 {
        return h;
    }
    for l in 0..dims.len() - 1 {
        let a = pad(ops.get(axis), dims[l]);
        let b = pad(ops.get(axis), dims[l + 1]);
        h += embed_pair(&a, l, &b, l + 1, dims) * C64::new(c, 0.0);
    }
    h
}

/// Σ_ℓ c·S_a^ℓ on every site.
pub fn field_sum_on(axis: Axis, c: f64, dims: &[usize]) -> CMatrix {
    let ops = spin1_ops();
    let dim: usize = dims.iter().product();
    let mut h = CMatrix::zeros(dim, dim);
    if c == 0.0 {
        return h;
    }
    for (l, &d) in dims.iter().enumerate() {
        h += embed(&pad(ops.get(axis), d), l, dims) * C64::new(c, 0.0);
    }
    h
}

/// H̄_αβ(C) = C Σ_ℓ (S_α S_α + S_β S_β).
pub fn pair_hamiltonian(a: Axis, b: Axis, c: f64, dims: &[usize]) -> CMatrix {
    bond_sum_on(a, c, dims) + bond_sum_on(b, c, dims)
}

pub fn model_hamiltonian(spec: &ModelSpec) -> Result<CMatrix> {
    spec.validate()?;
    let dims = vec![3; spec.n_sites];
    Ok(match spec.kind {
        ModelKind::Ising { j, b } => bond_sum_on(Axis::X, j, &dims) + field_sum_on(Axis::X, b, &dims),
        _ => {
            let [lx, ly, lz] = spec.lambdas().expect("heisenberg-type model");
            bond_sum_on(Axis::X, lx, &dims) + bond_sum_on(Axis::Y, ly, &dims) + bond_sum_on(Axis::Z, lz, &dims)
        }
    })
}

/// exp(−iHt) by dense eigendecomposition.
pub fn exact_propagator(h: &CMatrix, t: f64) -> Result<CMatrix> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), got: h.ncols() });
    }
    if h.nrows() > MAX_DENSE_DIM {
        return Err(Error::TooLarge { dim: h.nrows(), limit: MAX_DENSE_DIM });
    }
    Ok(expm_hermitian(h, t))
}

/// Eigenvalues below this reject the input as a density matrix.
const EIG_REJECT: f64 = 1e-6;

/// Square root of a PSD matrix. Eigenvalues within rounding of zero are
/// dropped; taking their square root would lift noise from 1e-16 to 1e-8.
fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, _) = crate::linalg::eigh(m);
    if let Some(&min) = values.first() {
        if min < -EIG_REJECT {
            return Err(invalid("density matrix", format!("eigenvalue {min:.3e} below −1e-6")));
        }
    }
    let top = values.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let floor = 64.0 * f64::EPSILON * top * m.nrows() as f64;
    Ok(hermitian_function(m, |x| C64::new(if x > floor { x.sqrt() } else { 0.0 }, 0.0)))
}

/// Uhlmann fidelity F = Tr √(√ρ σ √ρ), evaluated as the sum of singular
/// values of √ρ√σ.
pub fn uhlmann_fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() || rho.nrows() != rho.ncols() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: sigma.nrows() });
    }
    let product = psd_sqrt(rho)? * psd_sqrt(sigma)?;
    let f: f64 = product.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Fidelity of a density matrix against a pure reference, √⟨ψ|σ|ψ⟩.
pub fn pure_fidelity(psi: &CVector, sigma: &CMatrix) -> f64 {
    let overlap = (psi.adjoint() * sigma * psi)[(0, 0)].re;
    overlap.max(0.0).sqrt().min(1.0)
}

/// Normalized vector with i.i.d. complex Gaussian components, deterministic
/// per seed.
pub fn haar_random_state(dim: usize, seed: u64) -> Result<CVector> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = CVector::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let norm = v.norm();
    Ok(v / C64::new(norm, 0.0))
}

/// Single-site R_X = exp(−iS_Xπ/2) and R_Y = exp(−iS_Yπ/2).
pub fn rotations() -> (CMatrix, CMatrix) {
    let ops = spin1_ops();
    (expm_hermitian(&ops.sx, FRAC_PI_2), expm_hermitian(&ops.sy, FRAC_PI_2))
}

/// Pad a 3×3 spin operator with zero rows/columns up to `levels`.
pub fn pad(op: &CMatrix, levels: usize) -> CMatrix {
    assert!(levels >= op.nrows());
    let mut out = CMatrix::zeros(levels, levels);
    out.view_mut((0, 0), (op.nrows(), op.ncols())).copy_from(op);
    out
}

/// Embed a 3^N vector into the product space with `dims[ℓ]` levels per site.
pub fn embed_state(psi: &CVector, dims: &[usize]) -> CVector {
    let n = dims.len();
    let dim: usize = dims.iter().product();
    let mut out = CVector::zeros(dim);
    for (idx, amp) in psi.iter().enumerate() {
        let local = crate::circuit::digits(idx, &vec![3; n]);
        let mut target = 0;
        for (l, &d) in dims.iter().enumerate() {
            target = target * d + local[l];
        }
        out[target] = *amp;
    }
    out
}
