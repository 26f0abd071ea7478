//! Stable seed derivation. Every stochastic step derives its RNG stream from
//! the single run seed plus structural labels (paper id, model, restart
//! index), so results never depend on thread scheduling or on the hash
//! randomization of the standard library. The hashes here are pinned
//! implementations, not std::hash, precisely so outputs survive toolchain
//! upgrades byte for byte.

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds any number of seed components into one well-mixed 64-bit value.
pub fn mix(parts: &[u64]) -> u64 {
    let mut acc: u64 = 0x243f_6a88_85a3_08d3;
    for &p in parts {
        acc = splitmix(acc ^ p);
    }
    acc
}
