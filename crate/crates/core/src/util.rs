//! Small shared helpers: a stable string hash and timestamp sources.

use chrono::{DateTime, Duration, TimeZone, Utc};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_with_basis(bytes, FNV_OFFSET)
}

pub fn fnv1a_with_basis(bytes: &[u8], basis: u64) -> u64 {
    let mut hash = basis;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// The 64-bit finalizer from MurmurHash3. FNV-1a alone leaves the low bits
/// of near-identical strings correlated.
pub fn mix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

/// Hash several string parts with a separator byte so `("ab","c")` and `("a","bc")` differ.
pub fn fnv1a_parts<'a, I: IntoIterator<Item = &'a str>>(parts: I) -> u64 {
    let mut hash = FNV_OFFSET;
    for part in parts {
        for &b in part.as_bytes() {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(FNV_PRIME);
        }
        hash ^= 0x1f;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Where event and artifact timestamps come from.
///
/// `Logical` timestamps are a fixed base plus a tick count, so two runs
/// against a deterministic provider produce byte-identical files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timestamps {
    Wall,
    Logical { base: DateTime<Utc> },
}

impl Timestamps {
    pub fn logical() -> Self {
        Timestamps::Logical {
            base: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    /// Timestamp for the `tick`-th item of a sequence.
    pub fn at(&self, tick: u64) -> DateTime<Utc> {
        match self {
            Timestamps::Wall => Utc::now(),
            Timestamps::Logical { base } => *base + Duration::seconds(tick as i64),
        }
    }

    pub fn rfc3339(&self, tick: u64) -> String {
        self.at(tick)
            .to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

/// Replace characters that are awkward in file names.
pub fn sanitize_component(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
