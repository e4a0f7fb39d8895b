//! Stable seed derivation.
//!
//! Experiment cells and greedy candidate evaluations each get a seed derived
//! from a label plus integer coordinates. The hash is FNV-1a over a canonical
//! byte encoding, spelled out here so derived seeds never change between
//! builds or platforms (std's `DefaultHasher` gives no such guarantee).

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(state: u64, bytes: &[u8]) -> u64 {
    let mut h = state;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Derive a seed from a textual label and a list of integer coordinates.
pub fn derive_seed(label: &str, parts: &[u64]) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, label.as_bytes());
    h = fnv1a(h, &[0x1f]);
    for &p in parts {
        h = fnv1a(h, &p.to_le_bytes());
    }
    h
}
