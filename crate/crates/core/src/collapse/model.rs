//! Finite-dimensional Hilbert models, collapse parameters, and state
//! vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::{commutator, ComplexMatrix};

/// Eigenspace of the pointer observable: eigenvalue plus orthonormal
/// basis vectors spanning it.
#[derive(Debug, Clone)]
pub struct QEigenspace {
    pub value: f64,
    pub vectors: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelLabel {
    TwoLevel,
    LatticePosition,
    TruncatedOscillator { truncation: usize },
}

/// A pointer observable `q` and Hamiltonian `H` on a finite Hilbert
/// space.
#[derive(Debug, Clone)]
pub struct HilbertModel {
    pub dim: usize,
    pub q_op: ComplexMatrix,
    pub h_op: ComplexMatrix,
    pub label: ModelLabel,
    eigenspaces: Vec<QEigenspace>,
}

/// Tolerance for grouping pointer eigenvalues into eigenspaces.
const EIGENSPACE_TOL: f64 = 1e-9;

impl HilbertModel {
    pub fn new(q_op: ComplexMatrix, h_op: ComplexMatrix, label: ModelLabel) -> CoreResult<Self> {
        let dim = q_op.dim();
        if dim < 2 {
            return Err(CoreError::InvalidConfig(
                "Hilbert models need dimension at least 2".into(),
            ));
        }
        if h_op.dim() != dim {
            return Err(CoreError::DimMismatch {
                expected: dim,
                actual: h_op.dim(),
            });
        }
        if !q_op.is_hermitian(1e-12) || !h_op.is_hermitian(1e-12) {
            return Err(CoreError::InvalidConfig(
                "q and H must be Hermitian to 1e-12".into(),
            ));
        }
        let (vals, vecs) = q_op.hermitian_eigensystem()?;
        let mut eigenspaces: Vec<QEigenspace> = Vec::new();
        for (v, vec) in vals.into_iter().zip(vecs) {
            match eigenspaces.last_mut() {
                Some(space) if (space.value - v).abs() <= EIGENSPACE_TOL => {
                    space.vectors.push(vec);
                }
                _ => eigenspaces.push(QEigenspace {
                    value: v,
                    vectors: vec![vec],
                }),
            }
        }
        Ok(Self {
            dim,
            q_op,
            h_op,
            label,
            eigenspaces,
        })
    }

    /// Two-level pointer `q = diag(q₊, q₋)` with optional transverse
    /// Hamiltonian `H = rabi · σ_x`.
    pub fn two_level(q_values: [f64; 2], rabi: f64) -> Self {
        let q = ComplexMatrix::diagonal_real(&q_values);
        let mut h = ComplexMatrix::zeros(2);
        h[(0, 1)] = Complex64::new(rabi, 0.0);
        h[(1, 0)] = Complex64::new(rabi, 0.0);
        Self::new(q, h, ModelLabel::TwoLevel).expect("valid two-level model")
    }

    /// Lattice of site positions with nearest-neighbour hopping
    /// `H = −hop Σ (|k⟩⟨k+1| + h.c.)`.
    pub fn lattice(positions: &[f64], hopping: f64) -> CoreResult<Self> {
        let dim = positions.len();
        let q = ComplexMatrix::diagonal_real(positions);
        let mut h = ComplexMatrix::zeros(dim);
        for k in 0..dim.saturating_sub(1) {
            h[(k, k + 1)] = Complex64::new(-hopping, 0.0);
            h[(k + 1, k)] = Complex64::new(-hopping, 0.0);
        }
        Self::new(q, h, ModelLabel::LatticePosition)
    }

    /// Harmonic oscillator truncated to `dim` levels, unit mass and
    /// `ħ = 1`: `q = (a + a†)/√2`, `H = ω(n̂ + ½)`. The canonical
    /// commutator `[q, p] = i` holds exactly on the lower `dim − 1`
    /// levels; only the top level feels the truncation.
    pub fn truncated_oscillator(dim: usize, omega: f64) -> CoreResult<Self> {
        if dim < 3 {
            return Err(CoreError::InvalidConfig(
                "oscillator truncation needs dim >= 3".into(),
            ));
        }
        let a = lowering_operator(dim);
        let adag = a.adjoint();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let q = a.add(&adag).scale_re(inv_sqrt2);
        let h = ComplexMatrix::diagonal_real(
            &(0..dim)
                .map(|n| omega * (n as f64 + 0.5))
                .collect::<Vec<_>>(),
        );
        let model = Self::new(q, h, ModelLabel::TruncatedOscillator { truncation: dim })?;
        model.check_canonical_commutator(1.0)?;
        Ok(model)
    }

    /// Validate `[q, p] ≈ iħ` on the lower `dim − 2` levels.
    fn check_canonical_commutator(&self, hbar: f64) -> CoreResult<()> {
        let a = lowering_operator(self.dim);
        let adag = a.adjoint();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let p = adag
            .sub(&a)
            .scale(Complex64::new(0.0, inv_sqrt2));
        let comm = commutator(&self.q_op, &p)?;
        for i in 0..self.dim - 2 {
            for j in 0..self.dim - 2 {
                let expected = if i == j {
                    Complex64::new(0.0, hbar)
                } else {
                    Complex64::default()
                };
                if (comm[(i, j)] - expected).norm() > 1e-8 {
                    return Err(CoreError::InvalidConfig(format!(
                        "canonical commutator violated at ({i},{j}): {}",
                        comm[(i, j)]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eigenspaces(&self) -> &[QEigenspace] {
        &self.eigenspaces
    }

    pub fn has_trivial_hamiltonian(&self) -> bool {
        self.h_op.frobenius_norm() == 0.0
    }

    /// Populations of the pointer eigenspaces for a normalized state.
    pub fn populations(&self, psi: &StateVector) -> Vec<f64> {
        self.eigenspaces
            .iter()
            .map(|space| {
                space
                    .vectors
                    .iter()
                    .map(|v| dot(v, psi.amplitudes()).norm_sqr())
                    .sum()
            })
            .collect()
    }

    pub fn expectation_q(&self, psi: &StateVector) -> f64 {
        expectation(&self.q_op, psi.amplitudes())
    }

    pub fn variance_q(&self, psi: &StateVector) -> f64 {
        let amps = psi.amplitudes();
        let mean = expectation(&self.q_op, amps);
        let mut qpsi = vec![Complex64::default(); self.dim];
        self.q_op.mul_vec_into(amps, &mut qpsi);
        let q2: f64 = qpsi.iter().map(|z| z.norm_sqr()).sum();
        (q2 - mean * mean).max(0.0)
    }
}

pub(crate) fn lowering_operator(dim: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn expectation(op: &ComplexMatrix, psi: &[Complex64]) -> f64 {
    let mut tmp = vec![Complex64::default(); psi.len()];
    op.mul_vec_into(psi, &mut tmp);
    dot(psi, &tmp).re
}

/// Collapse-strength parameters; the effective rate is
/// `λ = (m/m₀)·λ₀`, proportional to the mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseParams {
    pub hbar: f64,
    pub lambda0: f64,
    pub mass: f64,
    pub mass_ref: f64,
}

impl Default for CollapseParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            lambda0: 1.0,
            mass: 1.0,
            mass_ref: 1.0,
        }
    }
}

impl CollapseParams {
    pub fn lambda(&self) -> f64 {
        self.mass / self.mass_ref * self.lambda0
    }

    pub fn validate(&self) -> CoreResult<()> {
        if !(self.hbar > 0.0) {
            return Err(CoreError::InvalidConfig("hbar must be positive".into()));
        }
        if self.lambda0 < 0.0 || self.mass < 0.0 {
            return Err(CoreError::InvalidConfig(
                "lambda0 and mass must be non-negative".into(),
            ));
        }
        if !(self.mass_ref > 0.0) {
            return Err(CoreError::InvalidConfig(
                "reference mass must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_mass(&self, mass: f64) -> Self {
        Self { mass, ..*self }
    }
}

/// Normalized complex state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes already normalized to `1 ± 1e-12`.
    pub fn new(amplitudes: Vec<Complex64>) -> CoreResult<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidInput(format!(
                "state norm {norm} is not 1 within 1e-12"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn from_amplitudes(mut amplitudes: Vec<Complex64>) -> CoreResult<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(CoreError::InvalidInput("zero state vector".into()));
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::default(); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// Real amplitudes `√w_k` from non-negative weights.
    pub fn from_weights(weights: &[f64]) -> CoreResult<Self> {
        if weights.iter().any(|&w| w < 0.0) {
            return Err(CoreError::InvalidInput(
                "weights must be non-negative".into(),
            ));
        }
        Self::from_amplitudes(
            weights
                .iter()
                .map(|&w| Complex64::new(w.sqrt(), 0.0))
                .collect(),
        )
    }

    /// Truncated coherent state `c_n ∝ αⁿ/√(n!)`, renormalized.
    pub fn coherent(dim: usize, alpha: Complex64) -> CoreResult<Self> {
        let mut amplitudes = Vec::with_capacity(dim);
        let mut c = Complex64::new(1.0, 0.0);
        amplitudes.push(c);
        for n in 1..dim {
            c *= alpha / Complex64::new((n as f64).sqrt(), 0.0);
            amplitudes.push(c);
        }
        Self::from_amplitudes(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn from_raw_normalized(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Density matrix `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, |i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_eigenspaces() {
        let m = HilbertModel::two_level([1.0, -1.0], 0.0);
        assert_eq!(m.eigenspaces().len(), 2);
        let psi = StateVector::from_weights(&[0.7, 0.3]).unwrap();
        let pops = m.populations(&psi);
        // eigenspaces are sorted ascending by eigenvalue
        assert!((pops[0] - 0.3).abs() < 1e-12);
        assert!((pops[1] - 0.7).abs() < 1e-12);
        assert!((m.expectation_q(&psi) - 0.4).abs() < 1e-12);
        assert!((m.variance_q(&psi) - (1.0 - 0.16)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_eigenvalues_grouped() {
        let q = ComplexMatrix::diagonal_real(&[1.0, 1.0, -1.0]);
        let m = HilbertModel::new(q, ComplexMatrix::zeros(3), ModelLabel::LatticePosition)
            .unwrap();
        assert_eq!(m.eigenspaces().len(), 2);
        assert_eq!(m.eigenspaces()[1].vectors.len(), 2);
    }

    #[test]
    fn oscillator_canonical_commutator_validated() {
        let m = HilbertModel::truncated_oscillator(32, 1.0).unwrap();
        assert_eq!(m.dim, 32);
        let psi = StateVector::coherent(32, Complex64::new(1.0, 0.0)).unwrap();
        // ⟨q⟩ of a real coherent state is √2·α
        assert!((m.expectation_q(&psi) - std::f64::consts::SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn non_hermitian_q_rejected() {
        let mut q = ComplexMatrix::zeros(2);
        q[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(HilbertModel::new(q, ComplexMatrix::zeros(2), ModelLabel::TwoLevel).is_err());
    }

    #[test]
    fn lambda_scales_with_mass() {
        let p = CollapseParams::default();
        assert_eq!(p.lambda(), 1.0);
        assert_eq!(p.with_mass(4.0).lambda(), 4.0);
        assert_eq!(p.with_mass(0.0).lambda(), 0.0);
        assert!(p.with_mass(-1.0).validate().is_err());
    }

    #[test]
    fn state_constructors() {
        assert!(StateVector::new(vec![Complex64::new(0.5, 0.0)]).is_err());
        let s = StateVector::from_weights(&[0.5, 0.3, 0.2]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        let rho = s.density();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
    }
}
