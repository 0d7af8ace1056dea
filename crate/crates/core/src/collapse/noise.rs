//! Per-trajectory Wiener increment streams.

use crate::rng::{CounterRng, StreamDomain};

/// Counter-based Gaussian increment source for one trajectory. The same
/// `(master seed, trajectory index)` always replays the same increments;
/// distinct indices are independent.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: CounterRng,
    pub trajectory_index: u64,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory_index: u64) -> Self {
        Self {
            rng: CounterRng::new(master_seed, StreamDomain::Trajectory, trajectory_index),
            trajectory_index,
        }
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.rng.normal()
    }

    /// Wiener increment `dW ~ N(0, dt)`.
    pub fn increment(&mut self, dt: f64) -> f64 {
        self.rng.normal() * dt.sqrt()
    }
}
