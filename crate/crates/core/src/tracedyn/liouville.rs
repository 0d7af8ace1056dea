//! Phase-space volume diagnostics: divergence of the Hamiltonian vector
//! field and the finite-difference Jacobian determinant of the flow map.
//!
//! Both work in the orthonormal real coordinates of the Hermitian
//! matrices, in which Hamilton's equations are canonically symplectic.

use nalgebra::DMatrix;

use crate::error::{CoreError, CoreResult};

use super::dynamics::{equations_of_motion, integrate};
use super::phase::{PhasePoint, TraceHamiltonian};

/// Upper bound on the full phase-space dimension for Jacobian builds.
const JACOBIAN_DIM_CAP: usize = 32;

fn tangent_coords(h: &TraceHamiltonian, z: &PhasePoint) -> CoreResult<Vec<f64>> {
    let tangent = equations_of_motion(h, z)?;
    let carrier = PhasePoint::new(tangent.dq, tangent.dp)?;
    let mut coords = Vec::new();
    carrier.to_coords(&mut coords);
    Ok(coords)
}

/// Central-difference divergence of the Hamiltonian vector field over
/// the `2·R·N²` real phase-space coordinates. Exactly zero analytically;
/// the numerical value is dominated by the finite-difference error.
pub fn phase_flow_divergence(
    h: &TraceHamiltonian,
    z: &PhasePoint,
    step: f64,
) -> CoreResult<f64> {
    if !(step > 0.0 && step < 1.0) {
        return Err(CoreError::InvalidInput(format!(
            "divergence step must lie in (0, 1), got {step}"
        )));
    }
    let dofs = z.dofs();
    let dim = z.dim();
    let mut base = Vec::new();
    z.to_coords(&mut base);
    let mut div = 0.0;
    let mut coords = base.clone();
    let mut probe = z.clone();
    for k in 0..coords.len() {
        coords[k] = base[k] + step;
        probe.set_coords(&coords);
        let plus = tangent_coords(h, &probe)?[k];
        coords[k] = base[k] - step;
        probe.set_coords(&coords);
        let minus = tangent_coords(h, &probe)?[k];
        coords[k] = base[k];
        div += (plus - minus) / (2.0 * step);
    }
    let _ = (dofs, dim);
    Ok(div)
}

/// Determinant of the finite-difference Jacobian of the time-`dt·steps`
/// flow map. `steps = 0` is the identity map with determinant one.
pub fn volume_jacobian(
    h: &TraceHamiltonian,
    z: &PhasePoint,
    dt: f64,
    steps: usize,
) -> CoreResult<f64> {
    let n = z.coord_count();
    if n > JACOBIAN_DIM_CAP {
        return Err(CoreError::InvalidInput(format!(
            "phase-space dimension {n} exceeds Jacobian cap {JACOBIAN_DIM_CAP}"
        )));
    }
    let mut base = Vec::new();
    z.to_coords(&mut base);
    let scale = base.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let fd_step = 1e-5 * scale;

    let flow = |coords: &[f64]| -> CoreResult<Vec<f64>> {
        let point = PhasePoint::from_coords(z.dofs(), z.dim(), coords);
        if steps == 0 {
            let mut out = Vec::new();
            point.to_coords(&mut out);
            return Ok(out);
        }
        let traj = integrate(h, &point, dt, steps, steps)?;
        let mut out = Vec::new();
        traj.final_state().to_coords(&mut out);
        Ok(out)
    };

    let mut jac = DMatrix::<f64>::zeros(n, n);
    let mut coords = base.clone();
    for k in 0..n {
        coords[k] = base[k] + fd_step;
        let plus = flow(&coords)?;
        coords[k] = base[k] - fd_step;
        let minus = flow(&coords)?;
        coords[k] = base[k];
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * fd_step);
        }
    }
    Ok(jac.determinant())
}
