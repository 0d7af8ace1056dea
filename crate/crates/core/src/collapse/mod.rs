//! Stochastic nonlinear state-vector dynamics on finite Hilbert models,
//! with a deterministic master-equation oracle, Born-rule statistics,
//! and mass-amplified decoherence rates.

mod born;
mod ensemble_run;
mod master;
mod model;
mod noise;
mod rates;
mod sde;

pub use born::{born_statistics, wilson_interval, BornOutcome, BornReport, COLLAPSE_THRESHOLD};
pub use ensemble_run::{ensemble_run, EnsembleOptions, EnsembleSummary};
pub use master::{
    dephasing_rate, integrate_master, lindblad_rhs, offdiag_abs, purity, trace_distance,
    MasterRecord,
};
pub use model::{CollapseParams, HilbertModel, ModelLabel, QEigenspace, StateVector};
pub use noise::NoiseStream;
pub use rates::{amplification_scan, decoherence_rate_fit, RateFit, ScanReport, ScanRow};
pub use sde::{norm_drift_probe, qmupl_step, simulate_trajectory, NormProbe, TrajectoryStats};
