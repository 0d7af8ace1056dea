//! Dense complex matrix algebra and trace calculus.
//!
//! [`ComplexMatrix`] is the universal carrier for operator coordinates,
//! momenta, and conserved charges. [`PolynomialModel`] represents trace
//! Lagrangians/Hamiltonians as coefficient-weighted ordered monomials in
//! named matrix variables; [`calculus`] provides analytic trace
//! derivatives, their finite-difference counterpart, and the operator
//! line element.

mod calculus;
mod matrix;
mod polynomial;

pub use calculus::{
    fd_trace_derivative, hermitian_basis_dim, hermitian_from_coords, hermitian_to_coords,
    lorentz_boost, spatial_rotation, trace_derivative, trace_line_element,
};
pub use matrix::{commutator, anticommutator, trace_real, AdjointClass, ComplexMatrix, MAX_DIM};
pub use polynomial::{Factor, Monomial, PolynomialModel, VarId};
