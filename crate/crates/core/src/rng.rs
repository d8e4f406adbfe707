// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded, counter-based random streams.
//!
//! Every replicate draws from its own ChaCha stream selected by
//! `(domain, index)`, so results do not depend on how replicates are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Stream families, kept apart so that e.g. calibration and benchmark runs
/// with the same seed never share draws.
pub mod domain {
    pub const CALIBRATION: u64 = 1;
    pub const BENCHMARK: u64 = 2;
    pub const SCENARIO: u64 = 3;
    pub const MONITOR: u64 = 4;
    pub const DEMO: u64 = 5;
}

const INDEX_BITS: u32 = 40;

/// Independent substream `index` of family `domain` under `seed`.
pub fn substream(seed: u64, domain: u64, index: u64) -> StreamRng {
    debug_assert!(index < 1 << INDEX_BITS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << INDEX_BITS) | index);
    rng
}

/// Maps `f` over replicate indices `0..reps`, in parallel when the
/// `parallel` feature is on. Output order always follows the index.
pub fn map_replicates<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..reps).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..reps).map(f).collect()
    }
}
