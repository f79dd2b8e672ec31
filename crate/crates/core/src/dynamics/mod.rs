//! State propagation: full flux-driven model, effective spin-1 schedules and
//! the dissipative master equation.

pub mod dissipation;
pub mod effective;
pub mod generator;
pub mod integrate;
pub mod state;

pub use dissipation::{build_dissipators, thermal_occupation, BathRates, DissipatorSet};
pub use effective::{evolve_effective, schedule_unitary};
pub use generator::{ConstantGenerator, Generator, InteractionGenerator, PiecewiseGenerator, Waveform};
pub use integrate::{propagate_columns, propagate_lindblad, propagate_unitary, Method, PropagationOptions, Trajectory};
pub use state::{ChainState, StateData};
