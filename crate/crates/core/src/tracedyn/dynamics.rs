//! Hamiltonian flow: equations of motion and integrators.

use crate::error::{CoreError, CoreResult};
use crate::matcore::ComplexMatrix;
use num_complex::Complex64;

use super::phase::{PhasePoint, TraceHamiltonian, TrajectoryRecord, HERMITICITY_TOL};

/// Tangent vector on phase space: `(q̇_r, ṗ_r)`.
#[derive(Debug, Clone)]
pub struct PhaseTangent {
    pub dq: Vec<ComplexMatrix>,
    pub dp: Vec<ComplexMatrix>,
}

/// Hamilton's equations from trace derivatives:
/// `q̇_r = δTrH/δp_r`, `ṗ_r = −δTrH/δq_r`.
pub fn equations_of_motion(h: &TraceHamiltonian, z: &PhasePoint) -> CoreResult<PhaseTangent> {
    let dofs = h.dofs();
    let mut dq = Vec::with_capacity(dofs);
    let mut dp = Vec::with_capacity(dofs);
    for r in 0..dofs {
        dq.push(h.grad_p(r, z)?);
        dp.push(h.grad_q(r, z)?.scale_re(-1.0));
    }
    Ok(PhaseTangent { dq, dp })
}

fn check_hermiticity(z: &PhasePoint, step: usize) -> CoreResult<()> {
    let res = z.hermiticity_residual();
    if res > HERMITICITY_TOL {
        return Err(CoreError::StepSize(format!(
            "Hermiticity residual {res:.3e} exceeded {HERMITICITY_TOL:.0e} at step {step}"
        )));
    }
    Ok(())
}

fn new_record(scheme: &str, symplectic: bool) -> TrajectoryRecord {
    TrajectoryRecord {
        times: Vec::new(),
        snapshots: Vec::new(),
        tr_h: Vec::new(),
        charge: Vec::new(),
        hermiticity_residual: Vec::new(),
        scheme: scheme.into(),
        symplectic,
    }
}

/// Kick–drift–kick leapfrog for separable Hamiltonians. Snapshots are
/// recorded every `record_stride` steps plus the initial and final state.
pub fn integrate_leapfrog(
    h: &TraceHamiltonian,
    z0: &PhasePoint,
    dt: f64,
    steps: usize,
    record_stride: usize,
) -> CoreResult<TrajectoryRecord> {
    let Some(masses) = h.kinetic_masses().map(<[f64]>::to_vec) else {
        return Err(CoreError::UnsupportedModel(format!(
            "`{}` is not separable; leapfrog requires Tr Σ p²/2m + Tr V(q)",
            h.label()
        )));
    };
    if dt <= 0.0 {
        return Err(CoreError::InvalidInput("dt must be positive".into()));
    }
    let stride = record_stride.max(1);
    let dofs = h.dofs();
    let mut z = z0.clone();
    let mut record = new_record("leapfrog", true);
    record.push(0.0, &z, h.tr_h(&z)?)?;

    // half kick at entry; full kicks inside; half kick at exit
    let kick = |z: &mut PhasePoint, factor: f64| -> CoreResult<()> {
        for r in 0..dofs {
            let g = h.grad_q(r, z)?;
            z.p_mut(r).add_assign_scaled(&g, Complex64::new(-factor, 0.0));
        }
        Ok(())
    };

    for step in 1..=steps {
        kick(&mut z, 0.5 * dt)?;
        for r in 0..dofs {
            let scale = Complex64::new(dt / masses[r], 0.0);
            let p = z.p(r).clone();
            z.q_mut(r).add_assign_scaled(&p, scale);
        }
        kick(&mut z, 0.5 * dt)?;
        check_hermiticity(&z, step)?;
        if step % stride == 0 || step == steps {
            record.push(step as f64 * dt, &z, h.tr_h(&z)?)?;
        }
    }
    Ok(record)
}

/// Classic RK4 on the full phase vector; works for non-separable models
/// but does not preserve phase-space volume exactly.
pub fn integrate_rk4(
    h: &TraceHamiltonian,
    z0: &PhasePoint,
    dt: f64,
    steps: usize,
    record_stride: usize,
) -> CoreResult<TrajectoryRecord> {
    if dt <= 0.0 {
        return Err(CoreError::InvalidInput("dt must be positive".into()));
    }
    let stride = record_stride.max(1);
    let dofs = h.dofs();
    let mut z = z0.clone();
    let mut record = new_record("rk4", false);
    record.push(0.0, &z, h.tr_h(&z)?)?;

    let shifted = |base: &PhasePoint, t: &PhaseTangent, factor: f64| -> PhasePoint {
        let mut out = base.clone();
        let f = Complex64::new(factor, 0.0);
        for r in 0..dofs {
            out.q_mut(r).add_assign_scaled(&t.dq[r], f);
            out.p_mut(r).add_assign_scaled(&t.dp[r], f);
        }
        out
    };

    for step in 1..=steps {
        let k1 = equations_of_motion(h, &z)?;
        let k2 = equations_of_motion(h, &shifted(&z, &k1, 0.5 * dt))?;
        let k3 = equations_of_motion(h, &shifted(&z, &k2, 0.5 * dt))?;
        let k4 = equations_of_motion(h, &shifted(&z, &k3, dt))?;
        let w = dt / 6.0;
        for r in 0..dofs {
            let qr = z.q_mut(r);
            qr.add_assign_scaled(&k1.dq[r], Complex64::new(w, 0.0));
            qr.add_assign_scaled(&k2.dq[r], Complex64::new(2.0 * w, 0.0));
            qr.add_assign_scaled(&k3.dq[r], Complex64::new(2.0 * w, 0.0));
            qr.add_assign_scaled(&k4.dq[r], Complex64::new(w, 0.0));
            let pr = z.p_mut(r);
            pr.add_assign_scaled(&k1.dp[r], Complex64::new(w, 0.0));
            pr.add_assign_scaled(&k2.dp[r], Complex64::new(2.0 * w, 0.0));
            pr.add_assign_scaled(&k3.dp[r], Complex64::new(2.0 * w, 0.0));
            pr.add_assign_scaled(&k4.dp[r], Complex64::new(w, 0.0));
        }
        check_hermiticity(&z, step)?;
        if step % stride == 0 || step == steps {
            record.push(step as f64 * dt, &z, h.tr_h(&z)?)?;
        }
    }
    Ok(record)
}

/// Leapfrog when the model is separable, otherwise RK4 with the record
/// flagged non-symplectic.
pub fn integrate(
    h: &TraceHamiltonian,
    z0: &PhasePoint,
    dt: f64,
    steps: usize,
    record_stride: usize,
) -> CoreResult<TrajectoryRecord> {
    if h.is_separable() {
        integrate_leapfrog(h, z0, dt, steps, record_stride)
    } else {
        integrate_rk4(h, z0, dt, steps, record_stride)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::fd_trace_derivative;
    use crate::rng::{CounterRng, StreamDomain};
    use crate::tracedyn::models;

    fn rng(salt: u64) -> CounterRng {
        CounterRng::new(0xD1CE, StreamDomain::InitialData, salt)
    }

    #[test]
    fn free_particle_eom_and_exact_flow() {
        let h = models::free_particle(1.0);
        let mut r = rng(1);
        let z0 = PhasePoint::random(1, 2, 0.7, &mut r);
        let tangent = equations_of_motion(&h, &z0).unwrap();
        assert!(tangent.dq[0].sub(z0.p(0)).frobenius_norm() < 1e-14);
        assert!(tangent.dp[0].frobenius_norm() < 1e-14);

        // q(s) = q0 + p0 s to roundoff
        let s = 1.0;
        let steps = 100;
        let traj = integrate_leapfrog(&h, &z0, s / steps as f64, steps, steps).unwrap();
        let expected = {
            let mut m = z0.q(0).clone();
            m.add_assign_scaled(z0.p(0), Complex64::new(s, 0.0));
            m
        };
        let err = traj.final_state().q(0).sub(&expected).frobenius_norm();
        assert!(err < 1e-12, "free flow error {err}");
    }

    #[test]
    fn harmonic_closed_form_reproduced() {
        let h = models::harmonic_oscillator();
        let mut r = rng(2);
        let z0 = PhasePoint::random(1, 2, 0.8, &mut r);
        let steps = (2.0 * std::f64::consts::PI / 1e-3).round() as usize;
        let dt = 2.0 * std::f64::consts::PI / steps as f64;
        let traj = integrate_leapfrog(&h, &z0, dt, steps, steps).unwrap();
        let s = *traj.times.last().unwrap();
        let expected_q = {
            let mut m = z0.q(0).scale_re(s.cos());
            m.add_assign_scaled(z0.p(0), Complex64::new(s.sin(), 0.0));
            m
        };
        let scale = z0.norm();
        let err = traj.final_state().q(0).sub(&expected_q).frobenius_norm() / scale;
        assert!(err < 1e-6, "harmonic closed-form error {err}");
    }

    #[test]
    fn quartic_tangent_matches_fd_gradient() {
        let h = models::quartic_coupled(4, 0.5);
        let mut r = rng(3);
        let z = PhasePoint::random(2, 4, 0.6, &mut r);
        let tangent = equations_of_motion(&h, &z).unwrap();
        let at = h.assignment(&z);
        for r_dof in 0..2 {
            let fd_p =
                fd_trace_derivative(h.model(), h.p_name(r_dof), &at, 1e-5).unwrap();
            let rel = tangent.dq[r_dof].sub(&fd_p).frobenius_norm()
                / fd_p.frobenius_norm().max(1e-9);
            assert!(rel < 1e-6, "dq[{r_dof}] vs fd: {rel}");
            let fd_q =
                fd_trace_derivative(h.model(), h.q_name(r_dof), &at, 1e-5).unwrap();
            let rel = tangent.dp[r_dof].add(&fd_q).frobenius_norm()
                / fd_q.frobenius_norm().max(1e-9);
            assert!(rel < 1e-6, "dp[{r_dof}] vs fd: {rel}");
        }
    }

    #[test]
    fn leapfrog_agrees_with_fine_rk4() {
        let h = models::quartic_coupled(4, 0.5);
        let mut r = rng(4);
        let z0 = PhasePoint::random(2, 4, 0.4, &mut r);
        let s = 0.5;
        let lf = integrate_leapfrog(&h, &z0, 1e-3, 500, 500).unwrap();
        let rk = integrate_rk4(&h, &z0, 1e-4, 5000, 5000).unwrap();
        let scale = z0.norm();
        let mut err = 0.0f64;
        for r_dof in 0..2 {
            err = err.max(
                lf.final_state()
                    .q(r_dof)
                    .sub(rk.final_state().q(r_dof))
                    .frobenius_norm(),
            );
            err = err.max(
                lf.final_state()
                    .p(r_dof)
                    .sub(rk.final_state().p(r_dof))
                    .frobenius_norm(),
            );
        }
        assert!(err / scale < 1e-5, "leapfrog vs rk4 at s={s}: {err}");
    }

    #[test]
    fn non_separable_rejected_by_leapfrog_and_integrated_by_rk4() {
        let h = models::harmonic_qp_coupled(0.3);
        let mut r = rng(5);
        let z0 = PhasePoint::random(1, 2, 0.5, &mut r);
        assert!(matches!(
            integrate_leapfrog(&h, &z0, 1e-3, 10, 1),
            Err(CoreError::UnsupportedModel(_))
        ));
        let traj = integrate(&h, &z0, 1e-3, 100, 50).unwrap();
        assert_eq!(traj.scheme, "rk4");
        assert!(!traj.symplectic);
    }

    #[test]
    fn leapfrog_is_time_reversible() {
        let h = models::quartic_coupled(4, 0.5);
        let mut r = rng(6);
        let z0 = PhasePoint::random(2, 4, 0.5, &mut r);
        let fwd = integrate_leapfrog(&h, &z0, 1e-3, 2000, 2000).unwrap();
        // reverse momenta, integrate the same span, reverse again
        let end = fwd.final_state();
        let reversed = PhasePoint::new(
            (0..2).map(|r| end.q(r).clone()).collect(),
            (0..2).map(|r| end.p(r).scale_re(-1.0)).collect(),
        )
        .unwrap();
        let back = integrate_leapfrog(&h, &reversed, 1e-3, 2000, 2000).unwrap();
        let final_back = back.final_state();
        let mut err = 0.0f64;
        for r_dof in 0..2 {
            err = err.max(final_back.q(r_dof).sub(z0.q(r_dof)).frobenius_norm());
            err = err.max(
                final_back
                    .p(r_dof)
                    .scale_re(-1.0)
                    .sub(z0.p(r_dof))
                    .frobenius_norm(),
            );
        }
        assert!(err / z0.norm() < 1e-9, "reversibility error {err}");
    }

    #[test]
    fn harmonic_energy_drift_bounded() {
        let h = models::harmonic_oscillator();
        let mut r = rng(7);
        let z0 = PhasePoint::random(1, 2, 0.8, &mut r);
        let traj = integrate_leapfrog(&h, &z0, 1e-3, 10_000, 100).unwrap();
        let h0 = traj.tr_h[0];
        let max_drift = traj
            .tr_h
            .iter()
            .map(|e| (e - h0).abs() / h0.abs())
            .fold(0.0, f64::max);
        assert!(max_drift < 1e-6, "energy drift {max_drift}");
    }
}
