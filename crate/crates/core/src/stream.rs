//! Counter-based random draws for trajectories.
//!
//! Each trajectory owns an independent ChaCha8 stream:
//!
//! * key: the master seed as 8 little-endian bytes followed by 24 zero bytes,
//! * stream id: the trajectory index,
//! * block counter: starts at zero.
//!
//! The first three 64-bit outputs of the stream are turned into uniforms in
//! `[0, 1)` by keeping the top 53 bits, `(x >> 11) * 2^-53`. They are
//! consumed in a fixed order: the collapse-timing draw, then the draw that
//! picks the branch of a spontaneous collapse, then the observer's draw.
//! A draw is consumed even when the regime does not need it, so the draw
//! used for a given role never depends on earlier outcomes.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNIT_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// The three uniforms one trajectory consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryDraws {
    /// Rule A inverse-CDF draw, or the spontaneous waiting-time draw.
    pub timing: f64,
    /// Born draw deciding the branch of a spontaneous collapse.
    pub collapse_branch: f64,
    pub observer: f64,
}

impl TrajectoryDraws {
    pub fn derive(master_seed: u64, trajectory_index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(trajectory_index);
        let mut next = || to_unit(rng.next_u64());
        let timing = next();
        let collapse_branch = next();
        let observer = next();
        Self {
            timing,
            collapse_branch,
            observer,
        }
    }
}

fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * UNIT_SCALE
}
