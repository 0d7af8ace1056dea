//! Classical Hamiltonian dynamics of matrix degrees of freedom.
//!
//! A [`TraceHamiltonian`] is a self-adjoint trace polynomial over paired
//! Hermitian variables `(q_r, p_r)`; Hamilton's equations follow from its
//! trace derivatives. [`dynamics`] integrates the flow (leapfrog for
//! separable models, RK4 otherwise), [`charge`] tracks the conserved
//! commutator charge, and [`liouville`] checks volume preservation.

mod charge;
mod dynamics;
mod liouville;
pub mod models;
mod phase;

pub use charge::{adler_millard_charge, conservation_report, ConservationReport};
pub use dynamics::{
    equations_of_motion, integrate, integrate_leapfrog, integrate_rk4, PhaseTangent,
};
pub use liouville::{phase_flow_divergence, volume_jacobian};
pub use phase::{PhasePoint, TraceHamiltonian, TrajectoryRecord};
