//! Trajectory ensembles with deterministic parallel reduction.
//!
//! Trajectory `i` draws from `NoiseStream(master_seed, i)`; per-time
//! statistics and the mean density matrix are combined over the fixed
//! reduction tree of [`crate::exec`], so the output is bit-identical for
//! any thread count.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::exec;
use crate::matcore::ComplexMatrix;

use super::master::{offdiag_abs, purity};
use super::model::{CollapseParams, HilbertModel, StateVector};
use super::noise::NoiseStream;
use super::sde::Stepper;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleOptions {
    /// Steps between recorded statistics points.
    pub record_stride: usize,
    /// Record points between density-matrix accumulations.
    pub rho_stride: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            record_stride: 100,
            rho_stride: 4,
        }
    }
}

/// Ensemble statistics over the recording grid plus the mean density
/// matrix `ρ̄(t) = (1/n) Σ |ψ⟩⟨ψ|` on its coarser grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    /// Ensemble mean of the per-trajectory expectation ⟨q⟩.
    pub mean_q: Vec<f64>,
    pub se_mean_q: Vec<f64>,
    /// Ensemble mean of the per-trajectory variance of q.
    pub mean_var_q: Vec<f64>,
    /// Ensemble mean of each pointer-eigenspace population.
    pub pop_mean: Vec<Vec<f64>>,
    pub pop_se: Vec<Vec<f64>>,
    pub max_norm_residual: f64,
    pub rho_times: Vec<f64>,
    pub rho_bar: Vec<ComplexMatrix>,
    pub purity: Vec<f64>,
    pub offdiag_abs: Vec<f64>,
    pub final_states: Vec<StateVector>,
    pub n_traj: usize,
    pub warnings: Vec<String>,
}

struct TrajAccum {
    sum_q: Vec<f64>,
    sum_q_sq: Vec<f64>,
    sum_var: Vec<f64>,
    sum_pop: Vec<Vec<f64>>,
    sum_pop_sq: Vec<Vec<f64>>,
    rho_sum: Vec<ComplexMatrix>,
    finals: Vec<StateVector>,
    max_norm_residual: f64,
    max_tail: f64,
    n: usize,
}

const MAX_STEPS: usize = 100_000_000;

#[allow(clippy::too_many_arguments)]
pub fn ensemble_run(
    model: &HilbertModel,
    params: &CollapseParams,
    psi0: &StateVector,
    dt: f64,
    t_final: f64,
    n_traj: usize,
    master_seed: u64,
    opts: EnsembleOptions,
) -> CoreResult<EnsembleSummary> {
    params.validate()?;
    if n_traj == 0 {
        return Err(CoreError::InvalidInput("need at least one trajectory".into()));
    }
    if psi0.dim() != model.dim {
        return Err(CoreError::DimMismatch {
            expected: model.dim,
            actual: psi0.dim(),
        });
    }
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(CoreError::InvalidInput(
            "dt and t_final must be positive".into(),
        ));
    }
    let steps = (t_final / dt).round().max(1.0) as usize;
    if steps > MAX_STEPS {
        return Err(CoreError::InvalidInput(format!(
            "step count {steps} exceeds guard {MAX_STEPS}"
        )));
    }
    let dt = t_final / steps as f64;
    let stride = opts.record_stride.max(1);
    let rho_stride = opts.rho_stride.max(1);

    // recording grid (shared by every trajectory)
    let mut times = vec![0.0];
    for step in 1..=steps {
        if step % stride == 0 || step == steps {
            times.push(step as f64 * dt);
        }
    }
    let n_rec = times.len();
    let rho_slots: Vec<usize> = (0..n_rec)
        .filter(|k| k % rho_stride == 0 || *k == n_rec - 1)
        .collect();
    let rho_times: Vec<f64> = rho_slots.iter().map(|&k| times[k]).collect();
    let n_spaces = model.eigenspaces().len();
    let is_oscillator = matches!(
        model.label,
        super::model::ModelLabel::TruncatedOscillator { .. }
    );

    let run_one = |index: usize| -> CoreResult<TrajAccum> {
        let mut noise = NoiseStream::new(master_seed, index as u64);
        let mut stepper = Stepper::new(model, params);
        let mut psi = psi0.amplitudes().to_vec();
        let mut acc = TrajAccum {
            sum_q: vec![0.0; n_rec],
            sum_q_sq: vec![0.0; n_rec],
            sum_var: vec![0.0; n_rec],
            sum_pop: vec![vec![0.0; n_spaces]; n_rec],
            sum_pop_sq: vec![vec![0.0; n_spaces]; n_rec],
            rho_sum: rho_slots
                .iter()
                .map(|_| ComplexMatrix::zeros(model.dim))
                .collect(),
            finals: Vec::new(),
            max_norm_residual: 0.0,
            max_tail: 0.0,
            n: 1,
        };
        let mut slot = 0usize;
        let mut rho_cursor = 0usize;
        let record = |acc: &mut TrajAccum,
                          psi: &[Complex64],
                          slot: &mut usize,
                          rho_cursor: &mut usize| {
            let state = StateVector::from_raw_normalized(psi.to_vec());
            acc.sum_q[*slot] += model.expectation_q(&state);
            acc.sum_q_sq[*slot] += model.expectation_q(&state).powi(2);
            acc.sum_var[*slot] += model.variance_q(&state);
            for (k, p) in model.populations(&state).into_iter().enumerate() {
                acc.sum_pop[*slot][k] += p;
                acc.sum_pop_sq[*slot][k] += p * p;
            }
            acc.max_norm_residual = acc.max_norm_residual.max((state.norm() - 1.0).abs());
            if is_oscillator {
                let tail: f64 = psi[psi.len() - 2..].iter().map(|z| z.norm_sqr()).sum();
                acc.max_tail = acc.max_tail.max(tail);
            }
            if *rho_cursor < rho_slots.len() && rho_slots[*rho_cursor] == *slot {
                for i in 0..psi.len() {
                    for j in 0..psi.len() {
                        let v = psi[i] * psi[j].conj();
                        let entry = &mut acc.rho_sum[*rho_cursor][(i, j)];
                        *entry += v;
                    }
                }
                *rho_cursor += 1;
            }
            *slot += 1;
        };

        record(&mut acc, &psi, &mut slot, &mut rho_cursor);
        for step in 1..=steps {
            let dw = noise.increment(dt);
            stepper.step(&mut psi, dt, dw)?;
            if step % stride == 0 || step == steps {
                record(&mut acc, &psi, &mut slot, &mut rho_cursor);
            }
        }
        acc.finals.push(StateVector::from_raw_normalized(psi));
        Ok(acc)
    };

    let merged = exec::reduce_indexed(n_traj, 8, &run_one, &|a, b| {
        let (mut a, b) = (a?, b?);
        for (x, y) in a.sum_q.iter_mut().zip(&b.sum_q) {
            *x += y;
        }
        for (x, y) in a.sum_q_sq.iter_mut().zip(&b.sum_q_sq) {
            *x += y;
        }
        for (x, y) in a.sum_var.iter_mut().zip(&b.sum_var) {
            *x += y;
        }
        for (row_a, row_b) in a.sum_pop.iter_mut().zip(&b.sum_pop) {
            for (x, y) in row_a.iter_mut().zip(row_b) {
                *x += y;
            }
        }
        for (row_a, row_b) in a.sum_pop_sq.iter_mut().zip(&b.sum_pop_sq) {
            for (x, y) in row_a.iter_mut().zip(row_b) {
                *x += y;
            }
        }
        for (x, y) in a.rho_sum.iter_mut().zip(&b.rho_sum) {
            x.add_assign_scaled(y, Complex64::new(1.0, 0.0));
        }
        a.finals.extend(b.finals);
        a.max_norm_residual = a.max_norm_residual.max(b.max_norm_residual);
        a.max_tail = a.max_tail.max(b.max_tail);
        a.n += b.n;
        Ok(a)
    })
    .expect("n_traj > 0")?;

    let n = merged.n as f64;
    let mean_q: Vec<f64> = merged.sum_q.iter().map(|s| s / n).collect();
    let se_mean_q: Vec<f64> = merged
        .sum_q_sq
        .iter()
        .zip(&mean_q)
        .map(|(sq, m)| {
            let var = (sq / n - m * m).max(0.0) * n / (n - 1.0).max(1.0);
            (var / n).sqrt()
        })
        .collect();
    let pop_mean: Vec<Vec<f64>> = merged
        .sum_pop
        .iter()
        .map(|row| row.iter().map(|s| s / n).collect())
        .collect();
    let pop_se: Vec<Vec<f64>> = merged
        .sum_pop_sq
        .iter()
        .zip(&pop_mean)
        .map(|(row_sq, row_m)| {
            row_sq
                .iter()
                .zip(row_m)
                .map(|(sq, m)| {
                    let var = (sq / n - m * m).max(0.0) * n / (n - 1.0).max(1.0);
                    (var / n).sqrt()
                })
                .collect()
        })
        .collect();
    let rho_bar: Vec<ComplexMatrix> = merged
        .rho_sum
        .iter()
        .map(|m| m.scale_re(1.0 / n))
        .collect();
    let purity_curve: Vec<f64> = rho_bar.iter().map(purity).collect();
    let offdiag: Vec<f64> = rho_bar.iter().map(offdiag_abs).collect();

    let mut warnings = Vec::new();
    if merged.max_tail > 1e-6 {
        warnings.push(format!(
            "truncation tail population {:.3e} exceeded 1e-6",
            merged.max_tail
        ));
    }

    Ok(EnsembleSummary {
        times,
        mean_q,
        se_mean_q,
        mean_var_q: merged.sum_var.iter().map(|s| s / n).collect(),
        pop_mean,
        pop_se,
        max_norm_residual: merged.max_norm_residual,
        rho_times,
        rho_bar,
        purity: purity_curve,
        offdiag_abs: offdiag,
        final_states: merged.finals,
        n_traj: merged.n,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::master::{integrate_master, trace_distance};

    fn opts(record: usize, rho: usize) -> EnsembleOptions {
        EnsembleOptions {
            record_stride: record,
            rho_stride: rho,
        }
    }

    #[test]
    fn single_trajectory_mean_density_is_pure() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let psi0 = StateVector::from_weights(&[0.7, 0.3]).unwrap();
        let s = ensemble_run(&model, &params, &psi0, 1e-3, 0.5, 1, 1, opts(100, 1)).unwrap();
        for p in &s.purity {
            assert!((p - 1.0).abs() < 1e-12, "purity {p}");
        }
    }

    #[test]
    fn populations_are_martingales_without_hamiltonian() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let psi0 = StateVector::from_weights(&[0.7, 0.3]).unwrap();
        let s =
            ensemble_run(&model, &params, &psi0, 5e-4, 2.0, 2000, 2024, opts(400, 2)).unwrap();
        // eigenspaces ascending: slot 1 is the +1 outcome with weight 0.7
        for (k, t) in s.times.iter().enumerate() {
            let mean = s.pop_mean[k][1];
            let se = s.pop_se[k][1].max(1e-12);
            assert!(
                (mean - 0.7).abs() <= 3.0 * se + 2e-3,
                "t = {t}: ⟨P₊⟩ = {mean} ± {se}"
            );
        }
        assert!(s.max_norm_residual <= 1e-12);
    }

    #[test]
    fn mean_density_matches_master_equation() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let psi0 = StateVector::from_weights(&[0.7, 0.3]).unwrap();
        let gamma = 2.0;
        let t_final = 1.0 / gamma;
        let n_traj = 1000;
        let s = ensemble_run(
            &model, &params, &psi0, 2e-4, t_final, n_traj, 555, opts(250, 1),
        )
        .unwrap();
        let master =
            integrate_master(&model, &params, &psi0.density(), 2e-4, t_final, 250).unwrap();
        assert_eq!(s.rho_times.len(), master.times.len());
        let bound = 5.0 / (n_traj as f64).sqrt();
        for (k, rho) in s.rho_bar.iter().enumerate() {
            let d = trace_distance(rho, &master.rhos[k]).unwrap();
            assert!(d < bound, "t = {}: trace distance {d} > {bound}", s.rho_times[k]);
        }
    }

    #[test]
    fn oscillator_mean_q_follows_classical_curve_with_collapse_on() {
        // the pointer coupling commutes out of the Ehrenfest pair for the
        // oscillator, so the ensemble mean of ⟨q⟩ tracks the λ = 0 curve
        let dim = 8;
        let model = HilbertModel::truncated_oscillator(dim, 1.0).unwrap();
        let params = CollapseParams {
            lambda0: 0.3,
            ..CollapseParams::default()
        };
        let psi0 = StateVector::coherent(dim, Complex64::new(0.8, 0.0)).unwrap();
        let q0 = model.expectation_q(&psi0);
        let t_final = std::f64::consts::PI;
        let s = ensemble_run(&model, &params, &psi0, 1e-3, t_final, 400, 77, opts(785, 4))
            .unwrap();
        for (k, t) in s.times.iter().enumerate() {
            let expected = q0 * t.cos();
            let tol = 3.0 * s.se_mean_q[k] + 5e-3;
            assert!(
                (s.mean_q[k] - expected).abs() <= tol,
                "t = {t}: mean ⟨q⟩ = {} vs {expected} (tol {tol})",
                s.mean_q[k]
            );
        }
    }

    #[test]
    fn thread_count_independent_bitwise() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let psi0 = StateVector::from_weights(&[0.6, 0.4]).unwrap();
        let run = || {
            ensemble_run(&model, &params, &psi0, 1e-3, 0.5, 64, 31, opts(100, 2)).unwrap()
        };
        let a = crate::exec::with_threads(Some(1), run);
        let b = crate::exec::with_threads(Some(4), run);
        assert_eq!(a.mean_q, b.mean_q);
        assert_eq!(a.se_mean_q, b.se_mean_q);
        for (x, y) in a.rho_bar.iter().zip(&b.rho_bar) {
            assert_eq!(x.entries(), y.entries());
        }
        assert_eq!(a.final_states.len(), b.final_states.len());
        for (x, y) in a.final_states.iter().zip(&b.final_states) {
            assert_eq!(x.amplitudes(), y.amplitudes());
        }
    }
}
