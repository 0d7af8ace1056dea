//! Phase-space state, trace Hamiltonians, and trajectory records.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::{
    hermitian_from_coords, hermitian_to_coords, ComplexMatrix, PolynomialModel, VarId,
};
use crate::rng::CounterRng;

/// Relative Hermiticity tolerance maintained along flows.
pub(crate) const HERMITICITY_TOL: f64 = 1e-10;

/// Full matrix phase-space state `{q_r, p_r}`, all Hermitian, common dim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    q: Vec<ComplexMatrix>,
    p: Vec<ComplexMatrix>,
}

impl PhasePoint {
    pub fn new(q: Vec<ComplexMatrix>, p: Vec<ComplexMatrix>) -> CoreResult<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(CoreError::InvalidInput(
                "phase point needs matching, non-empty q and p lists".into(),
            ));
        }
        let dim = q[0].dim();
        for m in q.iter().chain(&p) {
            if m.dim() != dim {
                return Err(CoreError::DimMismatch {
                    expected: dim,
                    actual: m.dim(),
                });
            }
            if !m.is_hermitian(HERMITICITY_TOL) {
                return Err(CoreError::InvalidInput(
                    "phase-space matrices must be Hermitian".into(),
                ));
            }
        }
        Ok(Self { q, p })
    }

    /// Gaussian-ensemble draw: every q_r, p_r an independent random
    /// Hermitian matrix of the given scale.
    pub fn random(dofs: usize, dim: usize, scale: f64, rng: &mut CounterRng) -> Self {
        let q = (0..dofs)
            .map(|_| ComplexMatrix::random_hermitian(dim, scale, rng))
            .collect();
        let p = (0..dofs)
            .map(|_| ComplexMatrix::random_hermitian(dim, scale, rng))
            .collect();
        Self { q, p }
    }

    pub fn dofs(&self) -> usize {
        self.q.len()
    }

    pub fn dim(&self) -> usize {
        self.q[0].dim()
    }

    pub fn q(&self, r: usize) -> &ComplexMatrix {
        &self.q[r]
    }

    pub fn p(&self, r: usize) -> &ComplexMatrix {
        &self.p[r]
    }

    pub fn q_mut(&mut self, r: usize) -> &mut ComplexMatrix {
        &mut self.q[r]
    }

    pub fn p_mut(&mut self, r: usize) -> &mut ComplexMatrix {
        &mut self.p[r]
    }

    /// Number of real coordinates (`2 · R · N²`).
    pub fn coord_count(&self) -> usize {
        2 * self.dofs() * self.dim() * self.dim()
    }

    /// Flatten into real coordinates: q blocks then p blocks, each in the
    /// orthonormal Hermitian basis.
    pub fn to_coords(&self, out: &mut Vec<f64>) {
        out.clear();
        let mut block = Vec::new();
        for m in self.q.iter().chain(&self.p) {
            hermitian_to_coords(m, &mut block);
            out.extend_from_slice(&block);
        }
    }

    pub fn from_coords(dofs: usize, dim: usize, coords: &[f64]) -> Self {
        let block = dim * dim;
        assert_eq!(coords.len(), 2 * dofs * block, "coordinate count mismatch");
        let mut z = Self {
            q: vec![ComplexMatrix::zeros(dim); dofs],
            p: vec![ComplexMatrix::zeros(dim); dofs],
        };
        z.set_coords(coords);
        z
    }

    pub fn set_coords(&mut self, coords: &[f64]) {
        let dim = self.dim();
        let block = dim * dim;
        let dofs = self.dofs();
        for r in 0..dofs {
            hermitian_from_coords(dim, &coords[r * block..(r + 1) * block], &mut self.q[r]);
        }
        for r in 0..dofs {
            let off = (dofs + r) * block;
            hermitian_from_coords(dim, &coords[off..off + block], &mut self.p[r]);
        }
    }

    /// Largest relative deviation from Hermiticity over all matrices.
    pub fn hermiticity_residual(&self) -> f64 {
        self.q
            .iter()
            .chain(&self.p)
            .map(|m| {
                m.sub(&m.adjoint()).frobenius_norm() / m.frobenius_norm().max(1e-300)
            })
            .fold(0.0, f64::max)
    }

    /// Frobenius norm over the whole state.
    pub fn norm(&self) -> f64 {
        self.q
            .iter()
            .chain(&self.p)
            .map(|m| m.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Which phase slot a model variable refers to.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Q(usize),
    P(usize),
}

/// A validated trace Hamiltonian over paired `(q_r, p_r)` variables.
#[derive(Debug, Clone)]
pub struct TraceHamiltonian {
    model: PolynomialModel,
    label: String,
    slots: Vec<Slot>,
    q_vars: Vec<VarId>,
    p_vars: Vec<VarId>,
    dq_models: Vec<PolynomialModel>,
    dp_models: Vec<PolynomialModel>,
    masses: Option<Vec<f64>>,
    confining: bool,
}

impl TraceHamiltonian {
    /// Build from a trace polynomial and the per-dof variable names.
    ///
    /// Validates that the model is formally self-adjoint (so `Tr H` is
    /// real on Hermitian states), resolves the variable layout, detects
    /// the separable form `Tr Σ p²/2m + Tr V(q)` for integrator
    /// eligibility, and precomputes all trace-derivative models.
    pub fn new(
        model: PolynomialModel,
        q_names: &[&str],
        p_names: &[&str],
        label: impl Into<String>,
    ) -> CoreResult<Self> {
        if q_names.is_empty() || q_names.len() != p_names.len() {
            return Err(CoreError::InvalidConfig(
                "need matching non-empty q/p variable name lists".into(),
            ));
        }
        if !model.is_self_adjoint() {
            return Err(CoreError::InvalidConfig(
                "trace Hamiltonian must be formally self-adjoint".into(),
            ));
        }
        let dofs = q_names.len();
        let mut q_vars = Vec::with_capacity(dofs);
        let mut p_vars = Vec::with_capacity(dofs);
        for (qn, pn) in q_names.iter().zip(p_names) {
            q_vars.push(
                model
                    .var_id(qn)
                    .ok_or_else(|| CoreError::UnknownVariable(qn.to_string()))?,
            );
            p_vars.push(
                model
                    .var_id(pn)
                    .ok_or_else(|| CoreError::UnknownVariable(pn.to_string()))?,
            );
        }
        let mut slots = Vec::with_capacity(model.var_count());
        for name in model.var_names() {
            let id = model.var_id(name).unwrap();
            if let Some(r) = q_vars.iter().position(|v| *v == id) {
                slots.push(Slot::Q(r));
            } else if let Some(r) = p_vars.iter().position(|v| *v == id) {
                slots.push(Slot::P(r));
            } else {
                return Err(CoreError::InvalidConfig(format!(
                    "model variable `{name}` is neither a coordinate nor a momentum"
                )));
            }
        }

        let masses = detect_kinetic_masses(&model, &q_vars, &p_vars);
        let confining = detect_confining(&model, &q_vars);

        let dq_models = q_vars.iter().map(|v| model.derivative(*v)).collect();
        let dp_models = p_vars.iter().map(|v| model.derivative(*v)).collect();

        Ok(Self {
            model,
            label: label.into(),
            slots,
            q_vars,
            p_vars,
            dq_models,
            dp_models,
            masses,
            confining,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn model(&self) -> &PolynomialModel {
        &self.model
    }

    pub fn dofs(&self) -> usize {
        self.q_vars.len()
    }

    pub fn q_name(&self, r: usize) -> &str {
        self.model.var_name(self.q_vars[r])
    }

    pub fn p_name(&self, r: usize) -> &str {
        self.model.var_name(self.p_vars[r])
    }

    /// `Some(masses)` when the model has the separable form
    /// `Tr Σ p_r²/(2 m_r) + Tr V(q)`.
    pub fn kinetic_masses(&self) -> Option<&[f64]> {
        self.masses.as_deref()
    }

    pub fn is_separable(&self) -> bool {
        self.masses.is_some()
    }

    /// Whether every coordinate is confined by an even pure power with
    /// positive weight (quartic or stronger growth included).
    pub fn is_confining(&self) -> bool {
        self.confining
    }

    pub(crate) fn assignment<'a>(&self, z: &'a PhasePoint) -> Vec<&'a ComplexMatrix> {
        self.slots
            .iter()
            .map(|slot| match slot {
                Slot::Q(r) => z.q(*r),
                Slot::P(r) => z.p(*r),
            })
            .collect()
    }

    fn check_dofs(&self, z: &PhasePoint) -> CoreResult<()> {
        if z.dofs() != self.dofs() {
            return Err(CoreError::DimMismatch {
                expected: self.dofs(),
                actual: z.dofs(),
            });
        }
        Ok(())
    }

    /// `Tr H` at a phase point; the imaginary part must vanish.
    pub fn tr_h(&self, z: &PhasePoint) -> CoreResult<f64> {
        self.check_dofs(z)?;
        let t = self.model.eval_trace(&self.assignment(z))?;
        if t.im.abs() > 1e-10 * t.re.abs().max(1.0) {
            return Err(CoreError::NonFinite {
                context: format!("Tr H has imaginary part {}", t.im),
            });
        }
        Ok(t.re)
    }

    /// `δ Tr H / δ q_r` evaluated at `z`.
    pub fn grad_q(&self, r: usize, z: &PhasePoint) -> CoreResult<ComplexMatrix> {
        self.check_dofs(z)?;
        self.dq_models[r].evaluate(&self.assignment(z))
    }

    /// `δ Tr H / δ p_r` evaluated at `z`.
    pub fn grad_p(&self, r: usize, z: &PhasePoint) -> CoreResult<ComplexMatrix> {
        self.check_dofs(z)?;
        self.dp_models[r].evaluate(&self.assignment(z))
    }
}

/// Separable-form detection: every momentum appears only through
/// `c_r · p_r²` monomials with positive real weight; everything else may
/// involve only coordinates and constants. Returns `m_r = 1/(2 c_r)`.
fn detect_kinetic_masses(
    model: &PolynomialModel,
    q_vars: &[VarId],
    p_vars: &[VarId],
) -> Option<Vec<f64>> {
    use crate::matcore::Factor;
    let mut kinetic = vec![0.0f64; p_vars.len()];
    for m in model.monomials() {
        let has_p = m.factors.iter().any(
            |f| matches!(f, Factor::Var(v) if p_vars.contains(v)),
        );
        if !has_p {
            let only_q_or_const = m.factors.iter().all(|f| match f {
                Factor::Var(v) => q_vars.contains(v),
                Factor::Const { .. } => true,
            });
            if !only_q_or_const {
                return None;
            }
            continue;
        }
        if m.factors.len() != 2 {
            return None;
        }
        let same_p = match (&m.factors[0], &m.factors[1]) {
            (Factor::Var(a), Factor::Var(b)) if a == b => p_vars.iter().position(|v| v == a),
            _ => None,
        };
        let Some(r) = same_p else { return None };
        if m.coeff.im.abs() > 1e-12 || m.coeff.re <= 0.0 {
            return None;
        }
        kinetic[r] += m.coeff.re;
    }
    if kinetic.iter().any(|&c| c <= 0.0) {
        return None;
    }
    Some(kinetic.into_iter().map(|c| 1.0 / (2.0 * c)).collect())
}

/// Confining heuristic: every coordinate has a pure even power `q_r^{2k}`
/// (k ≥ 1) with positive real coefficient.
fn detect_confining(model: &PolynomialModel, q_vars: &[VarId]) -> bool {
    use crate::matcore::Factor;
    q_vars.iter().all(|qv| {
        model.monomials().iter().any(|m| {
            let pure = m
                .factors
                .iter()
                .all(|f| matches!(f, Factor::Var(v) if v == qv));
            pure
                && !m.factors.is_empty()
                && m.factors.len() % 2 == 0
                && m.coeff.re > 0.0
                && m.coeff.im.abs() < 1e-12
        })
    })
}

/// Snapshots and per-snapshot diagnostics of one integrated trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub snapshots: Vec<PhasePoint>,
    pub tr_h: Vec<f64>,
    pub charge: Vec<ComplexMatrix>,
    pub hermiticity_residual: Vec<f64>,
    pub scheme: String,
    pub symplectic: bool,
}

impl TrajectoryRecord {
    pub(crate) fn push(&mut self, s: f64, z: &PhasePoint, tr_h: f64) -> CoreResult<()> {
        if let Some(last) = self.times.last() {
            if s <= *last {
                return Err(CoreError::InvalidInput(
                    "trajectory times must be strictly increasing".into(),
                ));
            }
        }
        self.times.push(s);
        self.tr_h.push(tr_h);
        self.charge.push(super::charge::adler_millard_charge(z)?);
        self.hermiticity_residual.push(z.hermiticity_residual());
        self.snapshots.push(z.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &PhasePoint {
        self.snapshots.last().expect("non-empty trajectory")
    }

    /// CSV export: `s,TrH,charge_drift,hermiticity_residual`.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let report = super::charge::conservation_report(self)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        writeln!(w, "s,TrH,charge_drift,hermiticity_residual")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.times[i], self.tr_h[i], report.charge_drift[i], self.hermiticity_residual[i]
            )?;
        }
        Ok(())
    }
}

