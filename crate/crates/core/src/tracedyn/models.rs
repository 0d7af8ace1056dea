//! Shipped trace-Hamiltonian models.
//!
//! All models are built over Hermitian variables named `q0, p0, q1, p1,
//! ...` (the operator-time model uses `t, E` for its second pair) and
//! validate as formally self-adjoint at construction.

use crate::matcore::{AdjointClass, Factor, PolynomialModel};

use super::phase::TraceHamiltonian;

/// `H = Tr(p²/2m)` — free matrix particle, not confining.
pub fn free_particle(mass: f64) -> TraceHamiltonian {
    let mut w = PolynomialModel::new();
    let _q = w.declare_var("q0", AdjointClass::Hermitian);
    let p = w.declare_var("p0", AdjointClass::Hermitian);
    w.add_term_re(0.5 / mass, vec![Factor::var(p), Factor::var(p)]);
    TraceHamiltonian::new(w, &["q0"], &["p0"], "free").expect("valid model")
}

/// `H = Tr(p²/2 + q²/2)` — matrix harmonic oscillator, unit mass and
/// frequency.
pub fn harmonic_oscillator() -> TraceHamiltonian {
    let mut w = PolynomialModel::new();
    let q = w.declare_var("q0", AdjointClass::Hermitian);
    let p = w.declare_var("p0", AdjointClass::Hermitian);
    w.add_term_re(0.5, vec![Factor::var(p), Factor::var(p)]);
    w.add_term_re(0.5, vec![Factor::var(q), Factor::var(q)]);
    TraceHamiltonian::new(w, &["q0"], &["p0"], "harmonic").expect("valid model")
}

/// `H = Tr(p²/2 + q⁴/4)` — single-dof quartic well.
pub fn quartic_well() -> TraceHamiltonian {
    let mut w = PolynomialModel::new();
    let q = w.declare_var("q0", AdjointClass::Hermitian);
    let p = w.declare_var("p0", AdjointClass::Hermitian);
    w.add_term_re(0.5, vec![Factor::var(p), Factor::var(p)]);
    w.add_term_re(0.25, vec![Factor::var(q); 4]);
    TraceHamiltonian::new(w, &["q0"], &["p0"], "quartic-well").expect("valid model")
}

/// Two coupled quartic wells:
/// `H = Tr(p0²/2 + p1²/2 + (q0⁴ + q1⁴)/4 + (g/2)(q0 q1 + q1 q0))`.
///
/// The bilinear coupling keeps the commutator charge genuinely
/// multi-dof while the quartic terms dominate at large amplitude, so the
/// potential stays confining for any `g`. `dim` is the matrix dimension
/// used by callers drawing initial data; the model itself is
/// dimension-agnostic.
pub fn quartic_coupled(dim: usize, coupling: f64) -> TraceHamiltonian {
    let _ = dim;
    let mut w = PolynomialModel::new();
    let q0 = w.declare_var("q0", AdjointClass::Hermitian);
    let p0 = w.declare_var("p0", AdjointClass::Hermitian);
    let q1 = w.declare_var("q1", AdjointClass::Hermitian);
    let p1 = w.declare_var("p1", AdjointClass::Hermitian);
    w.add_term_re(0.5, vec![Factor::var(p0), Factor::var(p0)]);
    w.add_term_re(0.5, vec![Factor::var(p1), Factor::var(p1)]);
    w.add_term_re(0.25, vec![Factor::var(q0); 4]);
    w.add_term_re(0.25, vec![Factor::var(q1); 4]);
    w.add_term_re(0.5 * coupling, vec![Factor::var(q0), Factor::var(q1)]);
    w.add_term_re(0.5 * coupling, vec![Factor::var(q1), Factor::var(q0)]);
    TraceHamiltonian::new(w, &["q0", "q1"], &["p0", "p1"], "quartic-coupled")
        .expect("valid model")
}

/// Harmonic model with an extra operator-time pair `(t, E)` entering the
/// Hamiltonian, and hence the conserved charge, exactly like any other
/// `(q, p)` slot.
pub fn harmonic_with_time_slot() -> TraceHamiltonian {
    let mut w = PolynomialModel::new();
    let q = w.declare_var("q0", AdjointClass::Hermitian);
    let p = w.declare_var("p0", AdjointClass::Hermitian);
    let t = w.declare_var("t", AdjointClass::Hermitian);
    let e = w.declare_var("E", AdjointClass::Hermitian);
    w.add_term_re(0.5, vec![Factor::var(p), Factor::var(p)]);
    w.add_term_re(0.5, vec![Factor::var(q), Factor::var(q)]);
    w.add_term_re(0.5, vec![Factor::var(e), Factor::var(e)]);
    w.add_term_re(0.5, vec![Factor::var(t), Factor::var(t)]);
    TraceHamiltonian::new(w, &["q0", "t"], &["p0", "E"], "harmonic-with-time-slot")
        .expect("valid model")
}

/// Non-separable test model
/// `H = Tr(p²/2 + q²/2 + (γ/2)(qp + pq))`; exercises the RK4 fallback
/// and gives the Liouville checks a field whose diagonal Jacobian terms
/// are individually nonzero.
pub fn harmonic_qp_coupled(gamma: f64) -> TraceHamiltonian {
    let mut w = PolynomialModel::new();
    let q = w.declare_var("q0", AdjointClass::Hermitian);
    let p = w.declare_var("p0", AdjointClass::Hermitian);
    w.add_term_re(0.5, vec![Factor::var(p), Factor::var(p)]);
    w.add_term_re(0.5, vec![Factor::var(q), Factor::var(q)]);
    w.add_term_re(0.5 * gamma, vec![Factor::var(q), Factor::var(p)]);
    w.add_term_re(0.5 * gamma, vec![Factor::var(p), Factor::var(q)]);
    TraceHamiltonian::new(w, &["q0"], &["p0"], "harmonic-qp-coupled").expect("valid model")
}
