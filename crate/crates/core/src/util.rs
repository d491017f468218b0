//! Small deterministic helpers shared across modules.

/// splitmix64 finalizer. A fixed, published 64-bit integer mixing
/// function; every hash-like decision in the simulator and every
/// derived seed goes through this so runs are reproducible without
/// an RNG dependency.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Chain several values into one mixed word.
pub fn mix_parts(seed: u64, parts: &[u64]) -> u64 {
    let mut h = mix64(seed);
    for &p in parts {
        h = mix64(h ^ p);
    }
    h
}

/// Mix a byte string, 8 bytes per round, length-salted so prefixes
/// of each other do not collide.
pub fn mix_bytes(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = mix64(seed ^ bytes.len() as u64);
    for chunk in bytes.chunks(8) {
        let mut w = [0u8; 8];
        w[..chunk.len()].copy_from_slice(chunk);
        h = mix64(h ^ u64::from_le_bytes(w));
    }
    h
}

/// Map a mixed word onto [0, 1).
pub fn unit_fraction(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}
