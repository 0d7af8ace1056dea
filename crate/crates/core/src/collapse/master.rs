//! Deterministic master-equation companion to the stochastic dynamics.
//!
//! For the ensemble mean `ρ̄ = E[|ψ⟩⟨ψ|]` of the normalized scheme the
//! Itô product rule gives
//!
//! ```text
//! d(|ψ⟩⟨ψ|) = dψ ψ† + ψ dψ† + dψ dψ†.
//! ```
//!
//! Writing `A = q − ⟨q⟩` and substituting the state equation, the O(dt)
//! terms are `−(i/ħ)[H, ρψ] dt`, `−(λ/2){A², ρψ} dt` and, from
//! `dψ dψ†` with `dW² = dt`, `+λ A ρψ A dt`. Expanding `A` in powers of
//! `⟨q⟩`, every `⟨q⟩`-dependent term cancels identically:
//! `λ(AρA − ½{A²,ρ}) = λ(qρq − ½{q²,ρ})`. The noise term
//! `√λ(Aρ + ρA) dW` has zero mean under the Itô convention, so
//!
//! ```text
//! dρ̄/dt = −(i/ħ)[H, ρ̄] − (λ/2)[q, [q, ρ̄]],
//! ```
//!
//! a dephasing equation in the pointer basis. For a two-level model with
//! `H = 0` and `q = diag(q₁, q₂)` the off-diagonal element decays as
//! `ρ₁₂(t) = ρ₁₂(0)·exp(−(λ/2)(q₁−q₂)² t)` while populations freeze.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::ComplexMatrix;

use super::model::{CollapseParams, HilbertModel};

/// `dρ/dt = −(i/ħ)[H, ρ] − (λ/2)[q, [q, ρ]]`.
pub fn lindblad_rhs(
    rho: &ComplexMatrix,
    model: &HilbertModel,
    params: &CollapseParams,
) -> ComplexMatrix {
    let h = &model.h_op;
    let q = &model.q_op;
    let mut out = h.mul(rho).sub(&rho.mul(h)).scale(Complex64::new(
        0.0,
        -1.0 / params.hbar,
    ));
    let lambda = params.lambda();
    if lambda > 0.0 {
        let qrho = q.mul(rho);
        let inner = qrho.sub(&rho.mul(q));
        let double = q.mul(&inner).sub(&inner.mul(q));
        out.add_assign_scaled(&double, Complex64::new(-0.5 * lambda, 0.0));
    }
    out
}

/// Density-matrix trajectory on the recording grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasterRecord {
    pub times: Vec<f64>,
    pub rhos: Vec<ComplexMatrix>,
    pub purity: Vec<f64>,
    pub offdiag_abs: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub var_q: Vec<f64>,
    pub max_trace_residual: f64,
    pub min_eigenvalue: f64,
}

pub fn purity(rho: &ComplexMatrix) -> f64 {
    rho.mul(rho).trace().re
}

/// Largest off-diagonal modulus.
pub fn offdiag_abs(rho: &ComplexMatrix) -> f64 {
    let n = rho.dim();
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max = max.max(rho[(i, j)].norm());
            }
        }
    }
    max
}

fn check_density(rho: &ComplexMatrix, tol: f64) -> CoreResult<f64> {
    if !rho.is_hermitian(1e-10) {
        return Err(CoreError::InvalidInput(
            "density matrix must be Hermitian".into(),
        ));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(CoreError::InvalidInput(format!(
            "density matrix trace {tr} is not 1"
        )));
    }
    let min_eig = rho
        .hermitian_part()
        .hermitian_eigenvalues()?
        .first()
        .copied()
        .unwrap_or(0.0);
    if min_eig < -tol {
        return Err(CoreError::StepSize(format!(
            "density matrix lost positivity: min eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(min_eig)
}

/// RK4 integration of the dephasing master equation. Trace and
/// Hermiticity are preserved to roundoff by the structure of the
/// right-hand side; positivity is monitored at recorded times.
pub fn integrate_master(
    model: &HilbertModel,
    params: &CollapseParams,
    rho0: &ComplexMatrix,
    dt: f64,
    t_final: f64,
    record_stride: usize,
) -> CoreResult<MasterRecord> {
    params.validate()?;
    if rho0.dim() != model.dim {
        return Err(CoreError::DimMismatch {
            expected: model.dim,
            actual: rho0.dim(),
        });
    }
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(CoreError::InvalidInput(
            "dt and t_final must be positive".into(),
        ));
    }
    check_density(rho0, 1e-10)?;
    let steps = (t_final / dt).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let stride = record_stride.max(1);

    let mut rho = rho0.clone();
    let mut record = MasterRecord {
        times: Vec::new(),
        rhos: Vec::new(),
        purity: Vec::new(),
        offdiag_abs: Vec::new(),
        mean_q: Vec::new(),
        var_q: Vec::new(),
        max_trace_residual: 0.0,
        min_eigenvalue: f64::INFINITY,
    };

    let push = |record: &mut MasterRecord, t: f64, rho: &ComplexMatrix| -> CoreResult<()> {
        let min_eig = check_density(rho, 1e-8)?;
        record.min_eigenvalue = record.min_eigenvalue.min(min_eig);
        record.max_trace_residual = record
            .max_trace_residual
            .max((rho.trace().re - 1.0).abs().max(rho.trace().im.abs()));
        record.times.push(t);
        record.purity.push(purity(rho));
        record.offdiag_abs.push(offdiag_abs(rho));
        let mean_q = model.q_op.mul(rho).trace().re;
        let q2 = model.q_op.mul(&model.q_op).mul(rho).trace().re;
        record.mean_q.push(mean_q);
        record.var_q.push((q2 - mean_q * mean_q).max(0.0));
        record.rhos.push(rho.clone());
        Ok(())
    };

    push(&mut record, 0.0, &rho)?;
    for step in 1..=steps {
        let k1 = lindblad_rhs(&rho, model, params);
        let mut mid = rho.clone();
        mid.add_assign_scaled(&k1, Complex64::new(0.5 * dt, 0.0));
        let k2 = lindblad_rhs(&mid, model, params);
        let mut mid = rho.clone();
        mid.add_assign_scaled(&k2, Complex64::new(0.5 * dt, 0.0));
        let k3 = lindblad_rhs(&mid, model, params);
        let mut end = rho.clone();
        end.add_assign_scaled(&k3, Complex64::new(dt, 0.0));
        let k4 = lindblad_rhs(&end, model, params);
        let w = dt / 6.0;
        rho.add_assign_scaled(&k1, Complex64::new(w, 0.0));
        rho.add_assign_scaled(&k2, Complex64::new(2.0 * w, 0.0));
        rho.add_assign_scaled(&k3, Complex64::new(2.0 * w, 0.0));
        rho.add_assign_scaled(&k4, Complex64::new(w, 0.0));
        if step % stride == 0 || step == steps {
            push(&mut record, step as f64 * dt, &rho)?;
        }
    }
    Ok(record)
}

/// Trace distance `½‖a − b‖₁` between density matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> CoreResult<f64> {
    let diff = a.sub(b).hermitian_part();
    let eigs = diff.hermitian_eigenvalues()?;
    Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
}

/// `Γ = (λ/2)(q₁ − q₂)²` for a two-level pointer.
pub fn dephasing_rate(model: &HilbertModel, params: &CollapseParams) -> CoreResult<f64> {
    if model.eigenspaces().len() != 2 || model.dim != 2 {
        return Err(CoreError::UnsupportedModel(
            "dephasing rate defined for two-level pointers".into(),
        ));
    }
    let gap = model.eigenspaces()[1].value - model.eigenspaces()[0].value;
    Ok(0.5 * params.lambda() * gap * gap)
}
