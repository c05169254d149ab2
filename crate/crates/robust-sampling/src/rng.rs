//! Deterministic random-number plumbing.
//!
//! Every generator is derived from `(master_seed, label, index)` through
//! SHA-256, so trials are independent streams and any run is bit-reproducible
//! from its seed. Independent implementations can cross-check transcripts by
//! reproducing this derivation: the ChaCha8 seed is
//! `SHA-256(master_seed_le || label || index_le)`.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives an independent generator for one logical stream of randomness.
pub fn derive_rng(master_seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Derives the per-trial seed used by the Monte Carlo harness.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(b"trial");
    hasher.update(trial_index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Uniform big integer in `[0, bound)` by rejection on the top chunk.
pub fn uniform_biguint_below<R: Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "bound must be positive");
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let top_mask: u8 = if bits % 8 == 0 {
        0xff
    } else {
        (1u8 << (bits % 8)) - 1
    };
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill(&mut buf[..]);
        buf[bytes - 1] &= top_mask;
        let candidate = BigUint::from_bytes_le(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform element of `[1, n]`.
pub fn uniform_in_universe<R: Rng + ?Sized>(rng: &mut R, n: &BigUint) -> BigUint {
    uniform_biguint_below(rng, n) + 1u32
}
