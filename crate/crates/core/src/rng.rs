//! Seed handling.
//!
//! Every random quantity comes from a ChaCha8 keystream keyed by the master
//! seed. Independent substreams are selected through the ChaCha stream id,
//! which is a pure function of `(trial, purpose)`:
//!
//! ```text
//! stream = trial * STREAMS_PER_TRIAL + purpose
//! ```
//!
//! so trial `k` draws the same numbers no matter which worker runs it or in
//! which order trials complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// What a substream is used for. The discriminant is part of the stream id
/// and must never be reordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Signal = 0,
    Noise = 1,
    Rows = 2,
    IidMatrix = 3,
    Oracle = 4,
    /// Signal for the i.i.d. operator when instances are not shared.
    IndependentSignal = 5,
    /// Noise for the i.i.d. operator when instances are not shared.
    IndependentNoise = 6,
}

pub const STREAMS_PER_TRIAL: u64 = 8;

/// Substream for `purpose` within trial `trial`.
pub fn substream(master_seed: u64, trial: u64, purpose: Purpose) -> Rng {
    let mut rng = Rng::seed_from_u64(master_seed);
    rng.set_stream(trial * STREAMS_PER_TRIAL + purpose as u64);
    rng
}

/// Substream shared by all trials (used for a fixed row selection).
pub fn shared_stream(master_seed: u64, purpose: Purpose) -> Rng {
    let mut rng = Rng::seed_from_u64(master_seed);
    rng.set_stream(u64::MAX - purpose as u64);
    rng
}
