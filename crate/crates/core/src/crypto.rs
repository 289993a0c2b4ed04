//! Hashing primitives, PRF sequencing, participant masking and map-key
//! derivation.
//!
//! Everything here is a pure function over fixed-width byte strings. All
//! 32-byte values render as lowercase `0x`-prefixed hex with 64 digits,
//! account identifiers with 40.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use tiny_keccak::{Hasher, Keccak};

/// Error returned when parsing a fixed-width hex value.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexError {
    #[error("missing 0x prefix")]
    MissingPrefix,
    #[error("expected {expected} hex digits, found {found}")]
    BadLength { expected: usize, found: usize },
    #[error("invalid hex digit")]
    InvalidDigit,
}

fn parse_fixed<const N: usize>(s: &str) -> Result<[u8; N], HexError> {
    let digits = s.strip_prefix("0x").ok_or(HexError::MissingPrefix)?;
    if digits.len() != 2 * N {
        return Err(HexError::BadLength {
            expected: 2 * N,
            found: digits.len(),
        });
    }
    // Uppercase input is rejected so that every accepted string has exactly
    // one encoding.
    if digits.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(HexError::InvalidDigit);
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(digits, &mut out).map_err(|_| HexError::InvalidDigit)?;
    Ok(out)
}

macro_rules! hex_newtype {
    ($name:ident, $len:expr) => {
        impl $name {
            pub const LEN: usize = $len;

            pub const fn from_bytes(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }

            pub const fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                format!("0x{}", hex::encode(self.0))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_fixed::<$len>(s).map(Self)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(de::Error::custom)
            }
        }
    };
}

/// A 256-bit digest. Ordered bytewise.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest256([u8; 32]);
hex_newtype!(Digest256, 32);

impl Digest256 {
    pub const ZERO: Digest256 = Digest256([0u8; 32]);

    /// Number of set bits.
    pub fn hamming_weight(&self) -> u32 {
        self.0.iter().map(|b| b.count_ones()).sum()
    }

    pub fn hamming_distance(&self, other: &Digest256) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

/// The block hash of a pinned block, or one of the two reserved values.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pin(Digest256);

impl Pin {
    /// Predecessor of the first pin of every chain.
    pub const ZERO: Pin = Pin(Digest256::ZERO);

    /// Written over a pin once a contest against it passes. The four low
    /// bytes are `0xff`, everything above is zero.
    pub const CONTESTED: Pin = Pin(Digest256({
        let mut b = [0u8; 32];
        b[28] = 0xff;
        b[29] = 0xff;
        b[30] = 0xff;
        b[31] = 0xff;
        b
    }));

    pub const fn new(value: Digest256) -> Self {
        Pin(value)
    }

    pub const fn digest(&self) -> &Digest256 {
        &self.0
    }

    pub fn is_contested(&self) -> bool {
        *self == Pin::CONTESTED
    }
}

/// Key of an entry in the pin map.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MapKey(Digest256);

impl MapKey {
    /// Reserved key standing in for "no previous pin" in contest proofs.
    pub const GENESIS_PREV: MapKey = MapKey(Digest256::ZERO);

    pub const fn new(value: Digest256) -> Self {
        MapKey(value)
    }

    pub const fn digest(&self) -> &Digest256 {
        &self.0
    }
}

/// Public identifier of a pinned chain.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pbi([u8; 32]);
hex_newtype!(Pbi, 32);

impl Pbi {
    /// Identifier of the management sidechain. No other sidechain may use it.
    pub const MANAGEMENT: Pbi = Pbi([0u8; 32]);

    pub fn is_management(&self) -> bool {
        *self == Pbi::MANAGEMENT
    }
}

/// 20-byte account identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AccountId([u8; 20]);
hex_newtype!(AccountId, 20);

/// A participant listed only by its salted hash.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MaskedId(Digest256);

impl MaskedId {
    pub const fn new(value: Digest256) -> Self {
        MaskedId(value)
    }

    pub const fn digest(&self) -> &Digest256 {
        &self.0
    }
}

/// Secret salt held off-registry by a masked participant.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Salt([u8; 32]);
hex_newtype!(Salt, 32);

macro_rules! digest_wrapper {
    ($name:ident) => {
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.0.to_hex())
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.parse().map($name)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                self.0.serialize(serializer)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                Digest256::deserialize(deserializer).map($name)
            }
        }
    };
}

digest_wrapper!(Pin);
digest_wrapper!(MapKey);
digest_wrapper!(MaskedId);

/// Seed of a chain's PRF sequence.
///
/// Deliberately has no `Serialize` impl and a redacting `Debug`, so it cannot
/// end up in a registry snapshot or an event log. It can be parsed from hex,
/// which is how scenario files provision it.
#[derive(Clone, PartialEq, Eq)]
pub struct ChainSecret([u8; 32]);

impl ChainSecret {
    pub const fn from_bytes(seed: [u8; 32]) -> Self {
        ChainSecret(seed)
    }

    pub fn expose(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for ChainSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ChainSecret(<redacted>)")
    }
}

impl FromStr for ChainSecret {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fixed::<32>(s).map(ChainSecret)
    }
}

impl<'de> Deserialize<'de> for ChainSecret {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// KECCAK-256 with the original Keccak padding, as used by Ethereum.
pub fn keccak256(data: &[u8]) -> Digest256 {
    keccak256_concat(&[data])
}

/// KECCAK-256 over the concatenation of `parts`, without copying them.
pub fn keccak256_concat(parts: &[&[u8]]) -> Digest256 {
    let mut hasher = Keccak::v256();
    for part in parts {
        hasher.update(part);
    }
    let mut out = [0u8; 32];
    hasher.finalize(&mut out);
    Digest256(out)
}

/// The `t`-th value of the chain's PRF sequence: `keccak256(secret || t)`
/// with `t` as an 8-byte big-endian counter.
pub fn prf_value(secret: &ChainSecret, t: u64) -> Digest256 {
    keccak256_concat(&[&secret.0, &t.to_be_bytes()])
}

/// `keccak256(pbi || prev_pin || prf_t)` over the 96-byte packed
/// concatenation.
pub fn derive_map_key(pbi: &Pbi, prev_pin: &Pin, prf_t: &Digest256) -> MapKey {
    MapKey(keccak256_concat(&[
        &pbi.0,
        prev_pin.0.as_bytes(),
        prf_t.as_bytes(),
    ]))
}

/// `keccak256(addr || salt)` over the 52-byte packed concatenation.
pub fn mask_participant(addr: &AccountId, salt: &Salt) -> MaskedId {
    MaskedId(keccak256_concat(&[&addr.0, &salt.0]))
}

/// Everything needed to derive a chain's map keys.
#[derive(Clone, Debug)]
pub struct PinKeys {
    pub pbi: Pbi,
    pub secret: ChainSecret,
}

impl PinKeys {
    pub fn new(pbi: Pbi, secret: ChainSecret) -> Self {
        PinKeys { pbi, secret }
    }

    pub fn prf(&self, t: u64) -> Digest256 {
        prf_value(&self.secret, t)
    }

    /// Key for the pin following `prev_pin` when PRF value `t` is consumed.
    pub fn key(&self, prev_pin: &Pin, t: u64) -> MapKey {
        derive_map_key(&self.pbi, prev_pin, &self.prf(t))
    }
}
