//! Equilibrium statistical mechanics of the matrix dynamics: Metropolis
//! sampling of the canonical distribution, canonical averages with
//! batch-means errors, shift-invariance (Ward) residuals, and spectral
//! diagnostics of the sampled conserved charge.

mod charge_stats;
mod config;
mod sampler;
mod stats;
mod ward;

pub use charge_stats::{
    charge_diagnostics, charge_diagnostics_from_stats, charge_response_sweep, ChargeDiagnostics,
    PairingReport, SweepPoint,
};
pub use config::{i_eff_lambda, EnsembleConfig};
pub use sampler::{
    collect_samples, log_weight, log_weight_model, metropolis_sample, ChargeObserver,
    CollectSamples, SampleAccumulator, SamplerReport, ScalarObserver,
};
pub use stats::{
    canonical_average, canonical_average_matrix, MatrixBatch, MatrixStats, RunningBatch,
    SampleStats, ScalarStats,
};
pub use ward::{
    scalar_test_function, standard_test_functions, ward_residual, ward_residuals, ComponentPart,
    WardComponent, WardReport, WardTest,
};
