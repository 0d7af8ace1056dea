//! Counter-based splittable random number streams.
//!
//! Every stochastic component of the crate draws from a [`CounterRng`]
//! keyed by `(master seed, domain, stream index)`. The mapping from key
//! and counter to output is a pure function (splitmix64), so a stream is
//! fully determined by its key: the same key always replays the same
//! sequence, distinct keys give statistically independent sequences, and
//! no state is shared between parallel workers.

use serde::{Deserialize, Serialize};

/// Stream domains keep separate subsystems from ever sharing a stream
/// even when they use the same master seed and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamDomain {
    InitialData,
    MetropolisChain,
    Trajectory,
    Probe,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::InitialData => 0x49ee_9d3f_0b1c_a55d,
            StreamDomain::MetropolisChain => 0x9e2c_37f1_d8b4_46a1,
            StreamDomain::Trajectory => 0x6c8e_944a_f6f3_72c9,
            StreamDomain::Probe => 0x22d4_6ae3_5f98_0c37,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based PRNG: output i is `mix(key + i)`, so the whole stream is
/// addressable and reproducible independent of scheduling.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(master_seed: u64, domain: StreamDomain, index: u64) -> Self {
        let key = splitmix64(master_seed ^ domain.tag()).wrapping_add(splitmix64(index));
        Self {
            key: splitmix64(key),
            counter: 0,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = splitmix64(self.key.wrapping_add(self.counter));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller; the second draw of each pair is
    /// cached per stream.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare_normal = Some(mag * s);
        mag * c
    }
}
