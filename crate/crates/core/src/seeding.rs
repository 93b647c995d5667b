//! Platform-independent seed derivation.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn combine(seed: u64, value: u64) -> u64 {
    mix(seed ^ mix(value))
}

/// FNV-1a, folded through [`mix`].
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix(h)
}

/// Seed for the subtree rooted at `path`; independent of traversal order.
pub fn path_seed(seed: u64, path: &[usize]) -> u64 {
    path.iter()
        .fold(mix(seed), |acc, &i| combine(acc, i as u64 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_seeds_differ() {
        let s = 42;
        assert_ne!(path_seed(s, &[]), path_seed(s, &[0]));
        assert_ne!(path_seed(s, &[0, 1]), path_seed(s, &[1, 0]));
        assert_eq!(path_seed(s, &[2, 1]), path_seed(s, &[2, 1]));
        assert_ne!(path_seed(1, &[0]), path_seed(2, &[0]));
    }

    #[test]
    fn hash_is_stable() {
        // Frozen so that persisted seeds stay reproducible across releases.
        assert_eq!(hash_str(""), mix(0xcbf2_9ce4_8422_2325));
        assert_ne!(hash_str("r1"), hash_str("r2"));
    }
}
