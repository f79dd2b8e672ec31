//! Segment-by-segment evolution under the effective spin-1 Hamiltonians.

use super::generator::PiecewiseGenerator;
use super::state::{lift_operator, spin1_indices, ChainState, StateData};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::pulse::{GateSchedule, Segment, SegmentKind};
use crate::spin1::{bond_sum, exact_propagator, field_sum_on, Axis};
use std::collections::HashMap;

/// Leakage tolerated before the spin-1 closure is considered broken.
pub const CLOSURE_LIMIT: f64 = 1e-6;

/// Effective Hamiltonian of one segment on the 3^N spin-1 space.
pub fn segment_hamiltonian(seg: &Segment, n_sites: usize) -> CMatrix {
    let dims = vec![3; n_sites];
    let c = seg.strength_rad_s;
    match seg.kind {
        SegmentKind::Xy => bond_sum(Axis::X, c, n_sites) + bond_sum(Axis::Y, c, n_sites),
        SegmentKind::Xx => bond_sum(Axis::X, c, n_sites),
        SegmentKind::RotX => field_sum_on(Axis::X, c, &dims),
        SegmentKind::RotXDag => field_sum_on(Axis::X, -c, &dims),
        SegmentKind::RotY => field_sum_on(Axis::Y, c, &dims),
        SegmentKind::RotYDag => field_sum_on(Axis::Y, -c, &dims),
        SegmentKind::Idle => CMatrix::zeros(dims.iter().product(), dims.iter().product()),
        SegmentKind::Ising => bond_sum(Axis::X, c, n_sites) + field_sum_on(Axis::X, seg.field_rad_s, &dims),
    }
}

type Key = (SegmentKind, u64, u64, u64);

fn key(seg: &Segment) -> Key {
    (seg.kind, seg.strength_rad_s.to_bits(), seg.field_rad_s.to_bits(), seg.duration_s.to_bits())
}

/// Propagator of every segment, identical segments sharing one exponential.
pub fn segment_unitaries(schedule: &GateSchedule, n_sites: usize) -> Result<Vec<CMatrix>> {
    schedule.validate()?;
    let mut cache: HashMap<Key, CMatrix> = HashMap::new();
    schedule
        .segments
        .iter()
        .enumerate()
        .map(|(index, seg)| {
            if let Some(u) = cache.get(&key(seg)) {
                return Ok(u.clone());
            }
            let u = exact_propagator(&segment_hamiltonian(seg, n_sites), seg.duration_s)
                .map_err(|e| Error::Segment { index, kind: seg.kind.to_string(), source: Box::new(e) })?;
            cache.insert(key(seg), u.clone());
            Ok(u)
        })
        .collect()
}

/// Accumulated propagator at every Trotter-step boundary, starting with 1.
pub fn step_unitaries(schedule: &GateSchedule, n_sites: usize) -> Result<Vec<CMatrix>> {
    let units = segment_unitaries(schedule, n_sites)?;
    let dim = 3usize.pow(n_sites as u32);
    let mut acc = CMatrix::identity(dim, dim);
    let mut out = vec![acc.clone()];
    for (i, u) in units.iter().enumerate() {
        acc = u * acc;
        if (i + 1) % schedule.step_len == 0 {
            out.push(acc.clone());
        }
    }
    Ok(out)
}

/// Time-ordered product of all segment propagators.
pub fn schedule_unitary(schedule: &GateSchedule, n_sites: usize) -> Result<CMatrix> {
    let dim = 3usize.pow(n_sites as u32);
    Ok(segment_unitaries(schedule, n_sites)?.iter().fold(CMatrix::identity(dim, dim), |acc, u| u * acc))
}

/// Apply the whole schedule to a state on the dressed product basis.
pub fn evolve_effective(schedule: &GateSchedule, state: &ChainState) -> Result<ChainState> {
    let n = state.dims.len();
    let leak = state.leakage();
    if leak > CLOSURE_LIMIT {
        return Err(Error::Leakage { leakage: leak });
    }
    let u = schedule_unitary(schedule, n)?;
    let idx = spin1_indices(&state.dims);
    let data = match &state.data {
        StateData::Pure(psi) => {
            let local = CVector::from_iterator(idx.len(), idx.iter().map(|&i| psi[i]));
            let moved = &u * local;
            let mut out = psi.clone();
            for (k, &i) in idx.iter().enumerate() {
                out[i] = moved[k];
            }
            StateData::Pure(out)
        }
        StateData::Density(rho) => {
            let lifted = lift_operator(&u, &state.dims, true);
            StateData::Density(&lifted * rho * lifted.adjoint())
        }
    };
    Ok(ChainState { data, time: state.time + schedule.total_duration_s, dims: state.dims.clone() })
}

/// The schedule as a piecewise-constant generator on the product space,
/// acting as zero on levels above the spin-1 subspace.
pub fn effective_generator(schedule: &GateSchedule, dims: &[usize], start: f64) -> Result<PiecewiseGenerator> {
    schedule.validate()?;
    let n = dims.len();
    let mut cache: HashMap<Key, CMatrix> = HashMap::new();
    let pieces = schedule
        .segments
        .iter()
        .map(|seg| {
            let h = cache.entry(key(seg)).or_insert_with(|| lift_operator(&segment_hamiltonian(seg, n), dims, false)).clone();
            (h, seg.duration_s)
        })
        .collect();
    PiecewiseGenerator::new(pieces, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{schedule_heisenberg, GateSchedule};

    fn empty() -> GateSchedule {
        let mut s = schedule_heisenberg(1.0, 1, 0.0, 0.0, 0.0, 1.0).unwrap();
        s.segments.clear();
        s.total_duration_s = 0.0;
        s
    }

    #[test]
    fn empty_schedule_is_identity() {
        let u = schedule_unitary(&empty(), 2).unwrap();
        assert!((u - CMatrix::identity(9, 9)).norm() < 1e-15);
    }

    #[test]
    fn rotation_and_inverse_cancel() {
        let mut s = schedule_heisenberg(1.0, 1, 0.0, 0.0, 0.0, 3.0).unwrap();
        s.segments.retain(|x| matches!(x.kind, SegmentKind::RotY | SegmentKind::RotYDag));
        assert_eq!(s.segments.len(), 2);
        let u = schedule_unitary(&s, 2).unwrap();
        assert!((u - CMatrix::identity(9, 9)).norm() < 1e-12);
    }

    #[test]
    fn leaked_state_is_refused() {
        let dims = vec![4, 4];
        let mut psi = CVector::zeros(16);
        psi[15] = crate::linalg::C64::new(1.0, 0.0);
        let st = ChainState::pure(psi, dims).unwrap();
        assert!(matches!(evolve_effective(&empty(), &st), Err(Error::Leakage { .. })));
    }
}
