//! Counter-based seeding.
//!
//! Every replication and subsystem gets its own ChaCha stream derived from the
//! master seed, so adding draws in one subsystem never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams used inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Subsystem {
    Layout = 1,
    Spawn = 2,
    Mobility = 3,
    Deployment = 4,
    Blockage = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed identifying one replication; reported in CSV output.
pub fn replication_seed(master_seed: u64, replication: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(replication.wrapping_add(0x5eed)))
}

/// Stream for `subsystem` within the replication identified by `replication_seed`.
pub fn stream(replication_seed: u64, subsystem: Subsystem) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut z = replication_seed;
    for chunk in key.chunks_exact_mut(8) {
        z = splitmix64(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(subsystem as u64);
    rng
}
