//! Spectral diagnostics of the sampled conserved charge.
//!
//! The canonical average `⟨Q̃⟩` is estimated entrywise, anti-Hermitized,
//! and eigendecomposed. Whether the eigenvalue magnitudes cluster into
//! `±` pairs of a common scale is reported descriptively — it is a
//! structure to look at, never an assertion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::ComplexMatrix;
use crate::tracedyn::{adler_millard_charge, PhasePoint, TraceHamiltonian};

use super::config::{i_eff_lambda, EnsembleConfig};
use super::sampler::{metropolis_sample, ChargeObserver};
use super::stats::{MatrixBatch, MatrixStats};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingReport {
    /// Eigenvalue magnitudes `|Im λ|`, descending.
    pub magnitudes: Vec<f64>,
    /// `||λ⁺_k| − |λ⁻_k||` for sign-paired eigenvalues, largest first.
    pub pair_gaps: Vec<f64>,
    pub magnitude_mean: f64,
    pub magnitude_spread: f64,
    /// Eigenvalues left over when positive and negative counts differ.
    pub unpaired: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargeDiagnostics {
    /// Anti-Hermitized entrywise mean of the sampled charge.
    pub mean_charge: ComplexMatrix,
    /// Purely imaginary spectrum of the mean.
    pub eigenvalues: Vec<Complex64>,
    /// `|Tr ⟨Q̃⟩|` before anti-Hermitization.
    pub trace_residual: f64,
    /// `|Σ eigenvalues|` of the anti-Hermitized mean.
    pub eig_sum_abs: f64,
    /// Largest entrywise Monte Carlo standard error.
    pub max_entry_se: f64,
    pub n_samples: usize,
    pub pairing: PairingReport,
}

fn pairing_report(eigs: &[Complex64]) -> PairingReport {
    let mut pos: Vec<f64> = eigs.iter().map(|e| e.im).filter(|&v| v >= 0.0).collect();
    let mut neg: Vec<f64> = eigs
        .iter()
        .map(|e| e.im)
        .filter(|&v| v < 0.0)
        .map(f64::abs)
        .collect();
    pos.sort_by(|a, b| b.partial_cmp(a).unwrap());
    neg.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let pairs = pos.len().min(neg.len());
    let pair_gaps = (0..pairs).map(|k| (pos[k] - neg[k]).abs()).collect();

    let mut magnitudes: Vec<f64> = eigs.iter().map(|e| e.im.abs()).collect();
    magnitudes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let magnitude_mean = magnitudes.iter().sum::<f64>() / magnitudes.len().max(1) as f64;
    let magnitude_spread = match (magnitudes.first(), magnitudes.last()) {
        (Some(hi), Some(lo)) => hi - lo,
        _ => 0.0,
    };
    PairingReport {
        unpaired: pos.len().abs_diff(neg.len()),
        magnitudes,
        pair_gaps,
        magnitude_mean,
        magnitude_spread,
    }
}

/// Diagnostics from pre-accumulated entrywise statistics.
pub fn charge_diagnostics_from_stats(stats: &MatrixStats) -> CoreResult<ChargeDiagnostics> {
    if stats.n < 1000 {
        return Err(CoreError::TooFewSamples {
            needed: 1000,
            got: stats.n,
        });
    }
    let trace_residual = stats.mean.trace().norm();
    let anti = stats.mean.anti_hermitian_part();
    let eigenvalues = anti.anti_hermitian_eigenvalues()?;
    let eig_sum: Complex64 = eigenvalues.iter().sum();
    let max_entry_se = stats
        .se_re
        .iter()
        .chain(&stats.se_im)
        .copied()
        .fold(0.0, f64::max);
    Ok(ChargeDiagnostics {
        pairing: pairing_report(&eigenvalues),
        mean_charge: anti,
        eig_sum_abs: eig_sum.norm(),
        eigenvalues,
        trace_residual,
        max_entry_se,
        n_samples: stats.n,
    })
}

/// Diagnostics straight from a collected sample list (≥ 1000 samples).
pub fn charge_diagnostics(samples: &[PhasePoint]) -> CoreResult<ChargeDiagnostics> {
    if samples.len() < 1000 {
        return Err(CoreError::TooFewSamples {
            needed: 1000,
            got: samples.len(),
        });
    }
    let dim = samples[0].dim();
    let batch_len = ((samples.len() as f64).sqrt().ceil() as usize).max(1);
    let mut acc = MatrixBatch::new(dim, batch_len);
    for z in samples {
        acc.observe(&adler_millard_charge(z)?);
    }
    charge_diagnostics_from_stats(&acc.stats())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    /// `max Im λ − min Im λ` of the mean-charge spectrum.
    pub spread: f64,
    pub eig_im: Vec<f64>,
}

/// Response of the mean-charge spectrum to the multiplier strength:
/// sample at `λ̃ = θ·diag(i, −i, ...)` for each θ and report the spread
/// of the imaginary eigenvalues as a curve.
pub fn charge_response_sweep(
    h: &TraceHamiltonian,
    base: &EnsembleConfig,
    thetas: &[f64],
) -> CoreResult<Vec<SweepPoint>> {
    let dim = base.dim();
    let batch_len = ((base.per_chain_samples() as f64).sqrt().ceil() as usize).max(1);
    let mut curve = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let cfg = base.clone().with_lambda(i_eff_lambda(dim, theta)?);
        let (obs, _) = metropolis_sample(h, &cfg, || ChargeObserver::new(dim, batch_len))?;
        let diag = charge_diagnostics_from_stats(&obs.batch.stats())?;
        let im: Vec<f64> = diag.eigenvalues.iter().map(|e| e.im).collect();
        let spread = im.iter().copied().fold(f64::MIN, f64::max)
            - im.iter().copied().fold(f64::MAX, f64::min);
        curve.push(SweepPoint {
            theta,
            spread,
            eig_im: im,
        });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::sampler::collect_samples;
    use crate::tracedyn::models;

    fn fast_cfg(dim: usize, seed: u64) -> EnsembleConfig {
        let mut cfg = EnsembleConfig::new(dim, 1.0, seed);
        cfg.n_samples = 4_000;
        cfg.burn_in = 2_000;
        cfg.thinning = 5;
        cfg
    }

    #[test]
    fn requires_minimum_samples() {
        assert!(matches!(
            charge_diagnostics(&[]),
            Err(CoreError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn symmetric_ensemble_mean_charge_consistent_with_zero() {
        // λ = 0 and the q → −q symmetry force ⟨Q̃⟩ = 0
        let h = models::harmonic_oscillator();
        let cfg = fast_cfg(2, 41);
        let (samples, _) = collect_samples(&h, &cfg).unwrap();
        let diag = charge_diagnostics(&samples).unwrap();
        for e in &diag.eigenvalues {
            assert!(
                e.im.abs() <= 3.0 * diag.max_entry_se * 2.0 + 1e-12,
                "eigenvalue {} vs SE {}",
                e.im,
                diag.max_entry_se
            );
        }
    }

    #[test]
    fn eigenvalue_sum_is_traceless() {
        let h = models::harmonic_oscillator();
        let cfg = fast_cfg(2, 42).with_lambda(i_eff_lambda(2, 0.2).unwrap());
        let (samples, _) = collect_samples(&h, &cfg).unwrap();
        let diag = charge_diagnostics(&samples).unwrap();
        let scale = diag
            .pairing
            .magnitudes
            .first()
            .copied()
            .unwrap_or(1.0)
            .max(1e-12);
        assert!(diag.eig_sum_abs <= 1e-10 * scale.max(1.0));
        assert!(diag.trace_residual <= 1e-10 * scale.max(1.0));
        for e in &diag.eigenvalues {
            assert!(e.re.abs() <= 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn sweep_reports_curve() {
        let h = models::harmonic_oscillator();
        let mut cfg = fast_cfg(2, 43);
        cfg.n_samples = 2_000;
        let curve = charge_response_sweep(&h, &cfg, &[0.05, 0.1, 0.2]).unwrap();
        assert_eq!(curve.len(), 3);
        for p in &curve {
            assert!(p.spread.is_finite());
            assert_eq!(p.eig_im.len(), 2);
        }
        println!(
            "spread curve: {:?}",
            curve.iter().map(|p| (p.theta, p.spread)).collect::<Vec<_>>()
        );
    }
}
