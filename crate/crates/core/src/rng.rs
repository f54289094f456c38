//! Reproducible per-trajectory random streams.
//!
//! Trajectory `i` of a run with master seed `s` draws from a PCG-64 (MCG
//! variant) generator seeded with
//!
//! ```text
//! sub_seed(s, i) = splitmix64(s ^ splitmix64(i + 0x9E37_79B9_7F4A_7C15))
//! ```
//!
//! Streams therefore depend only on `(s, i)`, never on which worker runs the
//! trajectory or in what order.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit sub-seed for trajectory `index` of a run seeded with `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// Generator for one trajectory.
pub fn trajectory_rng(seed: u64, index: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(sub_seed(seed, index))
}

/// Derive a seed for a labelled sub-task (e.g. one calibration temperature)
/// from a master seed.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix64(seed.rotate_left(17) ^ splitmix64(label))
}
