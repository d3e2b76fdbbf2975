//! Counter-based random streams keyed by `(seed, stream, lane)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a lane draws for a given user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Message = 0,
    Forward = 1,
    Feedback = 2,
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn key(seed: u64, lane: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    let mut s = seed ^ splitmix64(lane);
    for chunk in out.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    out
}

/// Independent generator for `(seed, stream, lane)`: the lane selects the
/// key, the stream selects the ChaCha nonce.
pub fn stream_rng(seed: u64, stream: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key(seed, lane));
    rng.set_stream(stream);
    rng
}

pub fn lane(user: usize, role: Role) -> u64 {
    ((user as u64) << 8) | role as u64
}
