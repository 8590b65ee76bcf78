use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over a sequence of byte strings, with a separator between parts.
/// Used to derive stable per-item seeds; std hashers are not stable across
/// releases.
pub(crate) fn stable_hash(parts: &[&[u8]]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(PRIME);
    }
    h
}

pub(crate) fn rng_for(seed: u64, parts: &[&[u8]]) -> ChaCha8Rng {
    let mut all: Vec<&[u8]> = Vec::with_capacity(parts.len() + 1);
    let seed_bytes = seed.to_le_bytes();
    all.push(&seed_bytes);
    all.extend_from_slice(parts);
    ChaCha8Rng::seed_from_u64(stable_hash(&all))
}

/// Formats an optional number for CSV output; undefined values become empty cells.
pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => fmt_num(x),
        None => String::new(),
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}
