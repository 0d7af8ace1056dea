//! Stochastic state-vector dynamics.
//!
//! The normalized scheme is an Euler–Maruyama step of
//!
//! ```text
//! dψ = [ −(i/ħ) H dt + √λ (q − ⟨q⟩) dW − (λ/2)(q − ⟨q⟩)² dt ] ψ
//! ```
//!
//! with the non-anticipating (Itô) convention — `⟨q⟩` is evaluated at the
//! step's start — followed by explicit renormalization. The continuous
//! equation preserves the norm exactly; the discrete step drifts at
//! O(dt), and renormalization restores the constraint without changing
//! the weak order.
//!
//! The linear scheme drops the state dependence entirely,
//! `dψ = [−(i/ħ)H dt + √λ q dW − (λ/2) q² dt]ψ` with no renormalization:
//! per trajectory its squared norm is a martingale (`E‖ψ‖²` constant,
//! per-path variance growing), which is what the norm probe measures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::exec;

use super::model::{CollapseParams, HilbertModel, ModelLabel, StateVector};
use super::noise::NoiseStream;

const MAX_STEPS: usize = 100_000_000;

pub(crate) struct Stepper<'m> {
    model: &'m HilbertModel,
    hbar: f64,
    lambda: f64,
    sqrt_lambda: f64,
    h_zero: bool,
    hpsi: Vec<Complex64>,
    apsi: Vec<Complex64>,
    a2psi: Vec<Complex64>,
    next: Vec<Complex64>,
}

impl<'m> Stepper<'m> {
    pub(crate) fn new(model: &'m HilbertModel, params: &CollapseParams) -> Self {
        let dim = model.dim;
        Self {
            model,
            hbar: params.hbar,
            lambda: params.lambda(),
            sqrt_lambda: params.lambda().sqrt(),
            h_zero: model.has_trivial_hamiltonian(),
            hpsi: vec![Complex64::default(); dim],
            apsi: vec![Complex64::default(); dim],
            a2psi: vec![Complex64::default(); dim],
            next: vec![Complex64::default(); dim],
        }
    }

    fn q_expectation(&mut self, psi: &[Complex64]) -> f64 {
        self.model.q_op.mul_vec_into(psi, &mut self.apsi);
        psi.iter()
            .zip(&self.apsi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Normalized nonlinear step; `dw` is the Wiener increment for this
    /// step.
    pub(crate) fn step(&mut self, psi: &mut [Complex64], dt: f64, dw: f64) -> CoreResult<()> {
        self.next.copy_from_slice(psi);
        if self.lambda > 0.0 {
            // apsi = (q − ⟨q⟩)ψ with ⟨q⟩ from the pre-step state
            let q_exp = self.q_expectation(psi);
            for (a, p) in self.apsi.iter_mut().zip(psi.iter()) {
                *a -= q_exp * p;
            }
            // a2psi = (q − ⟨q⟩)·apsi
            self.model.q_op.mul_vec_into(&self.apsi, &mut self.a2psi);
            for (a2, a) in self.a2psi.iter_mut().zip(&self.apsi) {
                *a2 -= q_exp * a;
            }
            let noise = self.sqrt_lambda * dw;
            let drift = -0.5 * self.lambda * dt;
            for i in 0..psi.len() {
                self.next[i] += noise * self.apsi[i] + drift * self.a2psi[i];
            }
        }
        if !self.h_zero {
            self.model.h_op.mul_vec_into(psi, &mut self.hpsi);
            let coeff = Complex64::new(0.0, -dt / self.hbar);
            for i in 0..psi.len() {
                self.next[i] += coeff * self.hpsi[i];
            }
        }
        normalize(&mut self.next)?;
        psi.copy_from_slice(&self.next);
        Ok(())
    }

    /// Linear (state-independent) step without renormalization.
    pub(crate) fn step_linear(
        &mut self,
        psi: &mut [Complex64],
        dt: f64,
        dw: f64,
    ) -> CoreResult<()> {
        self.next.copy_from_slice(psi);
        if self.lambda > 0.0 {
            self.model.q_op.mul_vec_into(psi, &mut self.apsi);
            self.model.q_op.mul_vec_into(&self.apsi, &mut self.a2psi);
            let noise = self.sqrt_lambda * dw;
            let drift = -0.5 * self.lambda * dt;
            for i in 0..psi.len() {
                self.next[i] += noise * self.apsi[i] + drift * self.a2psi[i];
            }
        }
        if !self.h_zero {
            self.model.h_op.mul_vec_into(psi, &mut self.hpsi);
            let coeff = Complex64::new(0.0, -dt / self.hbar);
            for i in 0..psi.len() {
                self.next[i] += coeff * self.hpsi[i];
            }
        }
        psi.copy_from_slice(&self.next);
        Ok(())
    }
}

fn normalize(psi: &mut [Complex64]) -> CoreResult<f64> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(CoreError::StepSize(format!(
            "state norm collapsed to {norm:.3e}; reduce dt"
        )));
    }
    let inv = 1.0 / norm;
    for z in psi.iter_mut() {
        *z *= inv;
    }
    Ok(norm)
}

/// One Euler–Maruyama step of the normalized collapse equation.
pub fn qmupl_step(
    psi: &StateVector,
    model: &HilbertModel,
    params: &CollapseParams,
    dt: f64,
    dw: f64,
) -> CoreResult<StateVector> {
    if !(dt > 0.0) {
        return Err(CoreError::InvalidInput("dt must be positive".into()));
    }
    params.validate()?;
    if psi.dim() != model.dim {
        return Err(CoreError::DimMismatch {
            expected: model.dim,
            actual: psi.dim(),
        });
    }
    let mut stepper = Stepper::new(model, params);
    let mut amps = psi.amplitudes().to_vec();
    stepper.step(&mut amps, dt, dw)?;
    Ok(StateVector::from_raw_normalized(amps))
}

/// Per-trajectory diagnostics on a fixed recording grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub times: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub var_q: Vec<f64>,
    pub norm_residual: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub final_state: StateVector,
    pub tail_population_max: f64,
    pub warnings: Vec<String>,
}

/// Oscillator-truncation guard threshold on the top two levels.
const TAIL_GUARD: f64 = 1e-6;

/// Integrate one trajectory of the normalized scheme, recording
/// diagnostics every `record_stride` steps plus the initial and final
/// times.
pub fn simulate_trajectory(
    model: &HilbertModel,
    params: &CollapseParams,
    psi0: &StateVector,
    dt: f64,
    t_final: f64,
    noise: &mut NoiseStream,
    record_stride: usize,
) -> CoreResult<TrajectoryStats> {
    params.validate()?;
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
    let stride = record_stride.max(1);

    let mut stepper = Stepper::new(model, params);
    let mut psi = psi0.amplitudes().to_vec();
    let mut stats = TrajectoryStats {
        times: Vec::new(),
        mean_q: Vec::new(),
        var_q: Vec::new(),
        norm_residual: Vec::new(),
        populations: Vec::new(),
        final_state: psi0.clone(),
        tail_population_max: 0.0,
        warnings: Vec::new(),
    };
    let is_oscillator = matches!(model.label, ModelLabel::TruncatedOscillator { .. });

    let record =
        |stats: &mut TrajectoryStats, t: f64, psi: &[Complex64]| {
            let state = StateVector::from_raw_normalized(psi.to_vec());
            stats.times.push(t);
            stats.mean_q.push(model.expectation_q(&state));
            stats.var_q.push(model.variance_q(&state));
            stats.norm_residual.push((state.norm() - 1.0).abs());
            stats.populations.push(model.populations(&state));
            if is_oscillator {
                let dim = psi.len();
                let tail: f64 = psi[dim - 2..].iter().map(|z| z.norm_sqr()).sum();
                if tail > stats.tail_population_max {
                    stats.tail_population_max = tail;
                }
            }
        };

    record(&mut stats, 0.0, &psi);
    for step in 1..=steps {
        let dw = noise.increment(dt);
        stepper.step(&mut psi, dt, dw)?;
        if step % stride == 0 || step == steps {
            record(&mut stats, step as f64 * dt, &psi);
        }
    }
    if stats.tail_population_max > TAIL_GUARD {
        stats.warnings.push(format!(
            "truncation tail population {:.3e} exceeded {TAIL_GUARD:.0e}",
            stats.tail_population_max
        ));
    }
    stats.final_state = StateVector::from_raw_normalized(psi);
    Ok(stats)
}

/// Norm behaviour of the linear (unnormalized) scheme against the
/// normalized one, trajectory by trajectory over shared noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormProbe {
    pub times: Vec<f64>,
    /// Ensemble mean of `‖ψ‖²` under the linear scheme.
    pub linear_mean_norm_sq: Vec<f64>,
    /// Standard error of that mean.
    pub linear_se_norm_sq: Vec<f64>,
    /// Ensemble variance of `‖ψ‖²` under the linear scheme.
    pub linear_var_norm_sq: Vec<f64>,
    /// Largest `|‖ψ‖ − 1|` seen at recorded times in the normalized
    /// scheme.
    pub normalized_max_residual: f64,
    pub n_traj: usize,
}

struct ProbeAccum {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    max_residual: f64,
    n: usize,
}

/// Run both schemes over the same Wiener increments and report the norm
/// statistics of the linear one.
pub fn norm_drift_probe(
    model: &HilbertModel,
    params: &CollapseParams,
    psi0: &StateVector,
    dt: f64,
    t_final: f64,
    n_traj: usize,
    master_seed: u64,
    record_stride: usize,
) -> CoreResult<NormProbe> {
    params.validate()?;
    if n_traj == 0 {
        return Err(CoreError::InvalidInput("need at least one trajectory".into()));
    }
    let steps = (t_final / dt).round().max(1.0) as usize;
    if steps > MAX_STEPS {
        return Err(CoreError::InvalidInput(format!(
            "step count {steps} exceeds guard {MAX_STEPS}"
        )));
    }
    let dt = t_final / steps as f64;
    let stride = record_stride.max(1);
    let mut times = vec![0.0];
    for step in 1..=steps {
        if step % stride == 0 || step == steps {
            times.push(step as f64 * dt);
        }
    }

    let run_one = |index: usize| -> CoreResult<ProbeAccum> {
        let mut noise = NoiseStream::new(master_seed, index as u64);
        let mut lin_stepper = Stepper::new(model, params);
        let mut full_stepper = Stepper::new(model, params);
        let mut lin = psi0.amplitudes().to_vec();
        let mut full = psi0.amplitudes().to_vec();
        let mut norms = vec![0.0f64; times.len()];
        let mut max_residual = 0.0f64;
        let mut slot = 0;
        let mut record = |lin: &[Complex64], full: &[Complex64], slot: &mut usize| {
            let n2: f64 = lin.iter().map(|z| z.norm_sqr()).sum();
            norms[*slot] = n2;
            let fnorm: f64 = full.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            max_residual = max_residual.max((fnorm - 1.0).abs());
            *slot += 1;
        };
        record(&lin, &full, &mut slot);
        for step in 1..=steps {
            let dw = noise.increment(dt);
            lin_stepper.step_linear(&mut lin, dt, dw)?;
            full_stepper.step(&mut full, dt, dw)?;
            if step % stride == 0 || step == steps {
                record(&lin, &full, &mut slot);
            }
        }
        drop(record);
        Ok(ProbeAccum {
            sum_sq: norms.iter().map(|v| v * v).collect(),
            sum: norms,
            max_residual,
            n: 1,
        })
    };

    let merged = exec::reduce_indexed(n_traj, 8, &run_one, &|a, b| {
        let (mut a, b) = (a?, b?);
        for (x, y) in a.sum.iter_mut().zip(&b.sum) {
            *x += y;
        }
        for (x, y) in a.sum_sq.iter_mut().zip(&b.sum_sq) {
            *x += y;
        }
        a.max_residual = a.max_residual.max(b.max_residual);
        a.n += b.n;
        Ok(a)
    })
    .expect("n_traj > 0")?;

    let n = merged.n as f64;
    let mean: Vec<f64> = merged.sum.iter().map(|s| s / n).collect();
    let var: Vec<f64> = merged
        .sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| (sq / n - m * m).max(0.0) * n / (n - 1.0).max(1.0))
        .collect();
    let se: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();

    Ok(NormProbe {
        times,
        linear_mean_norm_sq: mean,
        linear_se_norm_sq: se,
        linear_var_norm_sq: var,
        normalized_max_residual: merged.max_residual,
        n_traj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level_state() -> StateVector {
        StateVector::from_weights(&[0.7, 0.3]).unwrap()
    }

    #[test]
    fn eigenstate_is_fixed_point_without_hamiltonian() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let psi = StateVector::basis(2, 0);
        for dw in [-0.3, 0.0, 0.7] {
            let out = qmupl_step(&psi, &model, &params, 1e-3, dw).unwrap();
            let diff: f64 = out
                .amplitudes()
                .iter()
                .zip(psi.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .sum();
            assert!(diff < 1e-15, "fixed point moved by {diff} at dw={dw}");
        }
    }

    #[test]
    fn step_matches_symbolic_two_level_expansion() {
        // H = 0, q = diag(1,−1): the step acts diagonally, so the exact
        // post-step amplitudes follow from scalar arithmetic
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams {
            lambda0: 0.8,
            ..CollapseParams::default()
        };
        let lambda = params.lambda();
        let psi = two_level_state();
        let (dt, dw) = (1e-4, 0.013);

        let a = psi.amplitudes()[0].re;
        let b = psi.amplitudes()[1].re;
        let q_exp = a * a - b * b;
        let a1 = 1.0 - q_exp;
        let a2 = -1.0 - q_exp;
        let ap = a * (1.0 + lambda.sqrt() * a1 * dw - 0.5 * lambda * a1 * a1 * dt);
        let bp = b * (1.0 + lambda.sqrt() * a2 * dw - 0.5 * lambda * a2 * a2 * dt);
        let norm = (ap * ap + bp * bp).sqrt();

        let out = qmupl_step(&psi, &model, &params, dt, dw).unwrap();
        assert!((out.amplitudes()[0].re - ap / norm).abs() < 1e-10);
        assert!((out.amplitudes()[1].re - bp / norm).abs() < 1e-10);

        // leading noise response of the population:
        // dP = 2√λ P(1−P)(q₁−q₂) dW + O(dt)
        let tiny_dw = 1e-8;
        let out = qmupl_step(&psi, &model, &params, 1e-16, tiny_dw).unwrap();
        let p_before = a * a;
        let p_after = out.amplitudes()[0].norm_sqr();
        let measured = (p_after - p_before) / tiny_dw;
        let predicted = 2.0 * lambda.sqrt() * 0.7 * 0.3 * 2.0;
        assert!(
            (measured - predicted).abs() < 1e-4 * predicted.abs(),
            "dP/dW = {measured}, predicted {predicted}"
        );
    }

    #[test]
    fn unitary_limit_has_second_order_local_error() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.7);
        let params = CollapseParams {
            lambda0: 0.0,
            ..CollapseParams::default()
        };
        let psi = two_level_state();
        let (vals, vecs) = model.h_op.hermitian_eigensystem().unwrap();

        let exact = |dt: f64| -> Vec<Complex64> {
            // V diag(e^{−iE dt}) V† ψ
            let mut out = vec![Complex64::default(); 2];
            for (e, v) in vals.iter().zip(&vecs) {
                let overlap: Complex64 = v
                    .iter()
                    .zip(psi.amplitudes())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let phase = Complex64::from_polar(1.0, -e * dt);
                for (o, vi) in out.iter_mut().zip(v) {
                    *o += phase * overlap * vi;
                }
            }
            out
        };

        let mut errors = Vec::new();
        let dts = [2e-2f64, 1e-2, 5e-3, 2.5e-3];
        for &dt in &dts {
            let stepped = qmupl_step(&psi, &model, &params, dt, 0.0).unwrap();
            let reference = exact(dt);
            let err: f64 = stepped
                .amplitudes()
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            errors.push(err);
        }
        let slope = {
            let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
            let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
            let n = xs.len() as f64;
            let xm = xs.iter().sum::<f64>() / n;
            let ym = ys.iter().sum::<f64>() / n;
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| (x - xm) * (y - ym))
                .sum::<f64>()
                / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>()
        };
        assert!(
            (slope - 2.0).abs() <= 0.2,
            "local error order {slope}, errors {errors:?}"
        );
    }

    #[test]
    fn every_trajectory_collapses_without_hamiltonian() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default(); // λ = 1, Γ = 2
        let gamma = 0.5 * params.lambda() * 4.0;
        let t_final = 20.0 / gamma;
        let psi0 = two_level_state();
        let mut uncollapsed = 0usize;
        for traj in 0..200 {
            let mut noise = NoiseStream::new(777, traj);
            let stats = simulate_trajectory(
                &model, &params, &psi0, 1e-3, t_final, &mut noise, 2000,
            )
            .unwrap();
            let final_var = *stats.var_q.last().unwrap();
            assert!(
                final_var < 1e-6,
                "trajectory {traj}: Var(q) = {final_var:.3e} at t = 20/Γ"
            );
            let max_pop = stats
                .populations
                .last()
                .unwrap()
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            if max_pop <= 0.999 {
                uncollapsed += 1;
            }
            for r in &stats.norm_residual {
                assert!(*r <= 1e-12, "norm residual {r}");
            }
        }
        assert!(
            (uncollapsed as f64) < 0.01 * 200.0,
            "{uncollapsed}/200 uncollapsed"
        );
    }

    #[test]
    fn ehrenfest_oscillation_in_unitary_limit() {
        let dim = 16;
        let model = HilbertModel::truncated_oscillator(dim, 1.0).unwrap();
        let params = CollapseParams {
            lambda0: 0.0,
            ..CollapseParams::default()
        };
        let psi0 = StateVector::coherent(dim, Complex64::new(1.0, 0.0)).unwrap();
        let q0 = model.expectation_q(&psi0);
        // ⟨p⟩ of a real coherent state vanishes
        let period = 2.0 * std::f64::consts::PI;
        let mut noise = NoiseStream::new(1, 0);
        let stats = simulate_trajectory(
            &model, &params, &psi0, 1e-5, period, &mut noise, 10_000,
        )
        .unwrap();
        for (t, mq) in stats.times.iter().zip(&stats.mean_q) {
            let expected = q0 * t.cos();
            assert!(
                (mq - expected).abs() < 1e-4,
                "t = {t}: ⟨q⟩ = {mq}, expected {expected}"
            );
        }
        assert!(stats.tail_population_max < 1e-6);
        assert!(stats.warnings.is_empty());
    }

    #[test]
    fn weak_convergence_order_at_least_one() {
        // common-noise comparison against the finest grid; the
        // population product P(1−P) at T carries the O(dt) bias
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let psi0 = two_level_state();
        let t_final = 1.0f64;
        let dt_fine = 1.25e-4f64;
        let fine_steps = (t_final / dt_fine).round() as usize;
        let n_traj = 4000;
        let levels = [8usize, 4, 2]; // coarse step = level · dt_fine

        let mut sums = vec![0.0f64; levels.len() + 1]; // last = fine
        for traj in 0..n_traj {
            let mut noise = NoiseStream::new(4242, traj as u64);
            let increments: Vec<f64> =
                (0..fine_steps).map(|_| noise.increment(dt_fine)).collect();
            for (li, &level) in levels.iter().enumerate() {
                let dt = dt_fine * level as f64;
                let mut stepper = Stepper::new(&model, &params);
                let mut psi = psi0.amplitudes().to_vec();
                for chunk in increments.chunks(level) {
                    let dw: f64 = chunk.iter().sum();
                    stepper.step(&mut psi, dt, dw).unwrap();
                }
                let p = psi[0].norm_sqr();
                sums[li] += p * (1.0 - p);
            }
            let mut stepper = Stepper::new(&model, &params);
            let mut psi = psi0.amplitudes().to_vec();
            for &dw in &increments {
                stepper.step(&mut psi, dt_fine, dw).unwrap();
            }
            let p = psi[0].norm_sqr();
            sums[levels.len()] += p * (1.0 - p);
        }
        let reference = sums[levels.len()] / n_traj as f64;
        let errors: Vec<f64> = (0..levels.len())
            .map(|li| (sums[li] / n_traj as f64 - reference).abs())
            .collect();
        let dts: Vec<f64> = levels.iter().map(|&l| dt_fine * l as f64).collect();
        let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let n = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!(
            slope >= 0.8,
            "weak order fit {slope}, errors {errors:?} at dts {dts:?}"
        );
    }

    #[test]
    fn norm_probe_linear_wanders_normalized_pinned() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let psi0 = two_level_state();
        let probe = norm_drift_probe(&model, &params, &psi0, 1e-3, 1.0, 800, 99, 100).unwrap();

        assert!(probe.normalized_max_residual <= 1e-12);
        // E‖ψ‖² stays at 1 within its own error bars
        for (k, t) in probe.times.iter().enumerate() {
            let mean = probe.linear_mean_norm_sq[k];
            let se = probe.linear_se_norm_sq[k];
            assert!(
                (mean - 1.0).abs() <= 3.0 * se.max(1e-12),
                "t = {t}: E‖ψ‖² = {mean} ± {se}"
            );
        }
        // per-trajectory variance grows
        let first_quarter = probe.linear_var_norm_sq[probe.times.len() / 4];
        let last = *probe.linear_var_norm_sq.last().unwrap();
        assert!(
            last > 2.0 * first_quarter,
            "variance did not grow: {first_quarter} -> {last}"
        );
    }

    #[test]
    fn lambda_zero_keeps_norm_in_both_schemes() {
        let model = HilbertModel::two_level([1.0, -1.0], 0.4);
        let params = CollapseParams {
            lambda0: 0.0,
            ..CollapseParams::default()
        };
        let psi0 = two_level_state();
        let probe = norm_drift_probe(&model, &params, &psi0, 1e-4, 0.5, 10, 7, 50).unwrap();
        for v in &probe.linear_var_norm_sq {
            assert!(*v < 1e-8, "linear variance {v} at λ=0");
        }
        for m in &probe.linear_mean_norm_sq {
            assert!((m - 1.0).abs() < 1e-6, "linear mean norm {m} at λ=0");
        }
        assert!(probe.normalized_max_residual <= 1e-12);
    }

    #[test]
    fn zero_norm_step_is_an_error() {
        // balanced state, q = diag(1,−1): ⟨q⟩ = 0 and (q−⟨q⟩)² = I, so a
        // pathological dt = 2/λ wipes the whole state in one drift step
        let model = HilbertModel::two_level([1.0, -1.0], 0.0);
        let params = CollapseParams::default();
        let balanced = StateVector::from_weights(&[0.5, 0.5]).unwrap();
        assert!(qmupl_step(&balanced, &model, &params, 1.9, 0.0).is_ok());
        assert!(matches!(
            qmupl_step(&balanced, &model, &params, 2.0, 0.0),
            Err(CoreError::StepSize(_))
        ));
    }
}
