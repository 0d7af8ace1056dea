//! The conserved commutator charge and trajectory conservation reports.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::{commutator, ComplexMatrix};

use super::phase::{PhasePoint, TrajectoryRecord};

/// `Q̃ = Σ_r [q_r, p_r]` — anti-Hermitian and traceless for Hermitian
/// phase-space matrices; conserved by any trace-polynomial flow.
pub fn adler_millard_charge(z: &PhasePoint) -> CoreResult<ComplexMatrix> {
    let mut total = ComplexMatrix::zeros(z.dim());
    for r in 0..z.dofs() {
        let c = commutator(z.q(r), z.p(r))?;
        total.add_assign_scaled(&c, num_complex::Complex64::new(1.0, 0.0));
    }
    Ok(total)
}

/// Per-snapshot relative drifts of `Tr H` and the charge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub tr_h_drift: Vec<f64>,
    pub charge_drift: Vec<f64>,
    pub max_tr_h_drift: f64,
    pub max_charge_drift: f64,
    pub max_hermiticity_residual: f64,
    pub scheme: String,
    pub symplectic: bool,
}

/// Relative drift table against the first snapshot.
pub fn conservation_report(traj: &TrajectoryRecord) -> CoreResult<ConservationReport> {
    if traj.len() < 2 {
        return Err(CoreError::InvalidInput(
            "conservation report needs at least two snapshots".into(),
        ));
    }
    let h0 = traj.tr_h[0];
    let h_scale = h0.abs().max(1e-300);
    let q0 = &traj.charge[0];
    let q_scale = q0.frobenius_norm().max(1e-300);

    let tr_h_drift: Vec<f64> = traj
        .tr_h
        .iter()
        .map(|h| (h - h0).abs() / h_scale)
        .collect();
    let charge_drift: Vec<f64> = traj
        .charge
        .iter()
        .map(|q| q.sub(q0).frobenius_norm() / q_scale)
        .collect();

    Ok(ConservationReport {
        max_tr_h_drift: tr_h_drift.iter().copied().fold(0.0, f64::max),
        max_charge_drift: charge_drift.iter().copied().fold(0.0, f64::max),
        max_hermiticity_residual: traj
            .hermiticity_residual
            .iter()
            .copied()
            .fold(0.0, f64::max),
        times: traj.times.clone(),
        tr_h_drift,
        charge_drift,
        scheme: traj.scheme.clone(),
        symplectic: traj.symplectic,
    })
}
