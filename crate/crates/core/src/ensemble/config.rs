//! Sampler configuration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::ComplexMatrix;

/// Canonical-ensemble sampler configuration. `tau` is the
/// temperature-like multiplier conjugate to the Hamiltonian and `lambda`
/// the anti-Hermitian matrix multiplier conjugate to the conserved
/// charge; anti-Hermiticity of `lambda` is what keeps the log-weight
/// real.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub tau: f64,
    pub lambda: ComplexMatrix,
    pub burn_in: usize,
    pub n_samples: usize,
    pub thinning: usize,
    pub proposal_scale: f64,
    pub init_scale: f64,
    pub n_chains: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    /// Defaults for a given matrix dimension with `lambda = 0`.
    pub fn new(dim: usize, tau: f64, seed: u64) -> Self {
        Self {
            tau,
            lambda: ComplexMatrix::zeros(dim),
            burn_in: 10_000,
            n_samples: 10_000,
            thinning: 10,
            proposal_scale: 0.5,
            init_scale: 1.0,
            n_chains: 4,
            seed,
        }
    }

    pub fn with_lambda(mut self, lambda: ComplexMatrix) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    pub fn validate(&self) -> CoreResult<()> {
        if !(self.tau > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.n_samples < 100 {
            return Err(CoreError::InvalidConfig(format!(
                "n_samples must be at least 100, got {}",
                self.n_samples
            )));
        }
        if self.thinning == 0 || self.n_chains == 0 {
            return Err(CoreError::InvalidConfig(
                "thinning and n_chains must be positive".into(),
            ));
        }
        if !(self.proposal_scale > 0.0) || !(self.init_scale > 0.0) {
            return Err(CoreError::InvalidConfig(
                "proposal_scale and init_scale must be positive".into(),
            ));
        }
        let norm = self.lambda.frobenius_norm();
        if norm > 0.0 && !self.lambda.is_anti_hermitian(1e-12) {
            return Err(CoreError::InvalidConfig(
                "lambda must be anti-Hermitian".into(),
            ));
        }
        Ok(())
    }

    /// Retained samples per chain (total rounded up to a multiple of the
    /// chain count).
    pub fn per_chain_samples(&self) -> usize {
        self.n_samples.div_ceil(self.n_chains)
    }
}

/// The alternating-sign diagonal pattern `θ·diag(i, −i, i, −i, ...)`;
/// traceless for even dimensions.
pub fn i_eff_lambda(dim: usize, theta: f64) -> CoreResult<ComplexMatrix> {
    if dim % 2 != 0 {
        return Err(CoreError::InvalidConfig(format!(
            "alternating diagonal multiplier needs an even dimension, got {dim}"
        )));
    }
    let values: Vec<Complex64> = (0..dim)
        .map(|k| Complex64::new(0.0, if k % 2 == 0 { theta } else { -theta }))
        .collect();
    Ok(ComplexMatrix::diagonal(&values))
}
