//! Hierarchical random streams.
//!
//! Every random draw in a simulation comes from a stream keyed by a base seed
//! and a path of integer tags such as `(purpose, agent, iteration)`. Streams
//! are independent of evaluation order, which is what lets the message-passing
//! simulation, the matrix-form engine and resumed runs see identical noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used for every stream.
pub type StreamRng = ChaCha8Rng;

/// Stream purposes. Each is the first tag of a key path.
pub mod purpose {
    pub const ESTIMATOR: u64 = 1;
    pub const INIT: u64 = 2;
    pub const OUTPUT_INDEX: u64 = 3;
    pub const METRICS: u64 = 4;
    pub const BASELINE: u64 = 5;
    pub const DATA: u64 = 6;
    pub const TRIAL: u64 = 7;
    pub const GRAPH: u64 = 8;
    pub const OBJECTIVE: u64 = 9;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a seed and a tag path into a single 64-bit key.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for &tag in path {
        state ^= tag.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(acc);
        acc = splitmix64(&mut state);
    }
    acc
}

/// Open the stream identified by `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut state = derive_seed(seed, path);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    StreamRng::from_seed(bytes)
}
