//! Deterministic seed derivation. Every random stream in the crate is keyed
//! by the run seed, a component name and optional integer coordinates.

use sha2::{Digest, Sha256};

pub fn derive(seed: u64, component: &str, coords: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((component.len() as u64).to_le_bytes());
    h.update(component.as_bytes());
    for c in coords {
        h.update(c.to_le_bytes());
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

pub fn rng(seed: u64, component: &str, coords: &[u64]) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(derive(seed, component, coords))
}
