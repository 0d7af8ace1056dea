//! Outcome statistics of collapsed ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};

use super::model::{HilbertModel, StateVector};

/// Population above which a trajectory counts as collapsed onto an
/// eigenspace.
pub const COLLAPSE_THRESHOLD: f64 = 0.999;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BornOutcome {
    pub eigenvalue: f64,
    pub count: usize,
    /// Relative frequency among collapsed trajectories.
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BornReport {
    pub outcomes: Vec<BornOutcome>,
    pub n_total: usize,
    pub n_collapsed: usize,
    pub uncollapsed_fraction: f64,
    pub threshold: f64,
    pub ci_z: f64,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Classify final states by dominant pointer eigenspace and report
/// empirical frequencies with Wilson confidence intervals. Errors as
/// inconclusive if more than 1% of trajectories have not collapsed.
pub fn born_statistics(
    model: &HilbertModel,
    finals: &[StateVector],
    threshold: f64,
    ci_z: f64,
) -> CoreResult<BornReport> {
    if finals.is_empty() {
        return Err(CoreError::InvalidInput("no final states".into()));
    }
    let spaces = model.eigenspaces();
    let mut counts = vec![0usize; spaces.len()];
    let mut uncollapsed = 0usize;
    for psi in finals {
        let pops = model.populations(psi);
        let (best, best_pop) = pops
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::MIN), |acc, (k, p)| if p > acc.1 { (k, p) } else { acc });
        if best_pop > threshold {
            counts[best] += 1;
        } else {
            uncollapsed += 1;
        }
    }
    let n_total = finals.len();
    let n_collapsed = n_total - uncollapsed;
    let uncollapsed_fraction = uncollapsed as f64 / n_total as f64;

    let outcomes = spaces
        .iter()
        .zip(&counts)
        .map(|(space, &count)| {
            let (lo, hi) = wilson_interval(count, n_collapsed.max(1), ci_z);
            BornOutcome {
                eigenvalue: space.value,
                count,
                frequency: count as f64 / n_collapsed.max(1) as f64,
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();

    let report = BornReport {
        outcomes,
        n_total,
        n_collapsed,
        uncollapsed_fraction,
        threshold,
        ci_z,
    };
    if uncollapsed_fraction > 0.01 {
        return Err(CoreError::Inconclusive(format!(
            "{uncollapsed} of {n_total} trajectories uncollapsed \
             (fraction {uncollapsed_fraction:.4} > 0.01); extend the horizon"
        )));
    }
    Ok(report)
}
