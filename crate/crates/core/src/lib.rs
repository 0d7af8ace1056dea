//! Numerical laboratory for matrix trace dynamics and its consequences.
//!
//! The crate is organized in four layers that mirror the physics pipeline:
//!
//! * [`matcore`] — dense complex matrices, trace polynomials, trace
//!   calculus (analytic and finite-difference trace derivatives), and the
//!   operator line element.
//! * [`tracedyn`] — classical Hamiltonian dynamics of matrix degrees of
//!   freedom: equations of motion from trace derivatives, symplectic
//!   integration, conserved-charge and Liouville-volume diagnostics.
//! * [`ensemble`] — canonical-ensemble Metropolis sampling of the matrix
//!   phase space, shift-invariance (Ward) residuals, and spectral
//!   diagnostics of the sampled conserved charge.
//! * [`collapse`] — stochastic nonlinear Schrödinger trajectories on
//!   finite-dimensional Hilbert models, a deterministic master-equation
//!   oracle, Born-rule statistics, and mass-amplified decoherence rates.
//!
//! Everything is deterministic given a master seed: parallel work is
//! reduced over a fixed binary tree (see [`exec`]) so results are
//! bit-identical for any thread count, including the sequential build
//! (`--no-default-features`).

pub mod collapse;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod matcore;
pub mod rng;
pub mod tracedyn;

pub use error::{CoreError, CoreResult};
pub use matcore::{AdjointClass, ComplexMatrix, PolynomialModel};
