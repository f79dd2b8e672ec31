use crate::circuit::digits;
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermiticity_defect, min_eigenvalue, projector, trace, CMatrix, CVector};

pub const NORM_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const MIN_EIG_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Pure(CVector),
    Density(CMatrix),
}

/// A pure state or density matrix on the dressed product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub data: StateData,
    pub time: f64,
    /// Retained levels per site, site 0 most significant.
    pub dims: Vec<usize>,
}

fn check_dims(dims: &[usize], dim: usize) -> Result<()> {
    let want: usize = dims.iter().product();
    if want != dim {
        return Err(Error::DimensionMismatch { expected: want, got: dim });
    }
    Ok(())
}

impl ChainState {
    pub fn pure(psi: CVector, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, psi.len())?;
        let drift = (psi.norm() - 1.0).abs();
        if drift > NORM_TOLERANCE {
            return Err(invalid("state", format!("norm off by {drift:.3e}")));
        }
        Ok(Self { data: StateData::Pure(psi), time: 0.0, dims })
    }

    pub fn density(rho: CMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, rho.nrows())?;
        if rho.nrows() != rho.ncols() {
            return Err(Error::DimensionMismatch { expected: rho.nrows(), got: rho.ncols() });
        }
        let herm = hermiticity_defect(&rho);
        if herm > HERMITICITY_TOLERANCE {
            return Err(invalid("density matrix", format!("hermiticity defect {herm:.3e}")));
        }
        let tr = trace(&rho).re;
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(invalid("density matrix", format!("trace {tr}")));
        }
        let min = min_eigenvalue(&rho);
        if min < -MIN_EIG_TOLERANCE {
            return Err(invalid("density matrix", format!("eigenvalue {min:.3e}")));
        }
        Ok(Self { data: StateData::Density(rho), time: 0.0, dims })
    }

    pub fn at(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn to_density(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(psi) => projector(psi),
            StateData::Density(rho) => rho.clone(),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        match &self.data {
            StateData::Pure(psi) => psi.iter().map(|a| a.norm_sqr()).collect(),
            StateData::Density(rho) => rho.diagonal().iter().map(|a| a.re).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// Population outside the per-site {|0⟩, |1⟩, |2⟩} subspace.
    pub fn leakage(&self) -> f64 {
        leakage_of(&self.populations(), &self.dims)
    }

    /// ⟨Π⟩ for a diagonal parity operator.
    pub fn parity_expectation(&self, parity: &[f64]) -> f64 {
        self.populations().iter().zip(parity).map(|(p, s)| p * s).sum()
    }
}

pub fn leakage_of(populations: &[f64], dims: &[usize]) -> f64 {
    populations
        .iter()
        .enumerate()
        .filter(|(idx, _)| digits(*idx, dims).iter().any(|&d| d >= 3))
        .map(|(_, p)| p)
        .sum::<f64>()
        .max(0.0)
}

/// Product-basis indices of the 3^N spin-1 subspace, in 3^N order.
pub fn spin1_indices(dims: &[usize]) -> Vec<usize> {
    let n = dims.len();
    let local = vec![3; n];
    (0..3usize.pow(n as u32))
        .map(|k| digits(k, &local).iter().zip(dims).fold(0, |acc, (&d, &size)| acc * size + d))
        .collect()
}

/// Lift a 3^N operator to the product space, acting as `fill` outside.
pub fn lift_operator(op: &CMatrix, dims: &[usize], fill_identity: bool) -> CMatrix {
    let dim: usize = dims.iter().product();
    let mut out = if fill_identity { CMatrix::identity(dim, dim) } else { CMatrix::zeros(dim, dim) };
    let idx = spin1_indices(dims);
    for (a, &ia) in idx.iter().enumerate() {
        if fill_identity {
            out[(ia, ia)] = num_complex::Complex64::new(0.0, 0.0);
        }
        for (b, &ib) in idx.iter().enumerate() {
            out[(ia, ib)] = op[(a, b)];
        }
    }
    out
}

/// Block of a product-space operator on the spin-1 subspace.
pub fn restrict_operator(op: &CMatrix, dims: &[usize]) -> CMatrix {
    let idx = spin1_indices(dims);
    CMatrix::from_fn(idx.len(), idx.len(), |a, b| op[(idx[a], idx[b])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn spin1_subspace_has_no_leakage() {
        let dims = vec![4, 4];
        let mut psi = CVector::zeros(16);
        psi[spin1_indices(&dims)[5]] = C64::new(1.0, 0.0);
        let s = ChainState::pure(psi, dims).unwrap();
        assert_eq!(s.leakage(), 0.0);
    }

    #[test]
    fn level_three_counts_as_leakage() {
        let dims = vec![4, 4];
        let p: f64 = 0.3;
        let mut psi = CVector::zeros(16);
        psi[0] = C64::new((1.0 - p).sqrt(), 0.0);
        psi[3] = C64::new(p.sqrt(), 0.0);
        let s = ChainState::pure(psi, dims).unwrap();
        assert!(s.leakage() >= p - 1e-15);
    }

    #[test]
    fn indices_follow_product_order() {
        assert_eq!(spin1_indices(&[4, 4])[..4], [0, 1, 2, 4]);
        assert_eq!(spin1_indices(&[3, 3]), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_density_rejected() {
        let rho = CMatrix::identity(4, 4);
        assert!(ChainState::density(rho, vec![2, 2]).is_err());
    }
}
