//! Byte-exact conversion between 256-bit values, multihash framing, and
//! Base58-encoded CIDv0 strings ("Qm...").
//!
//! Only the v0 form is supported: a 34-byte multihash (0x12 = SHA-256,
//! 0x20 = 32-byte digest) rendered in the Bitcoin Base58 alphabet, always
//! 46 characters starting with "Qm". CIDv1/multibase strings are rejected.

use std::fmt;

use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Bitcoin Base58 alphabet: no 0, O, I, l.
pub const BASE58_ALPHABET: &[u8; 58] =
    b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

/// Multihash code for SHA-256.
pub const MULTIHASH_SHA256: u8 = 0x12;
/// Multihash digest length for SHA-256.
pub const MULTIHASH_LEN: u8 = 0x20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("character {ch:?} at index {index} is not in the Base58 alphabet")]
    InvalidCharacter { index: usize, ch: char },
    #[error("not a CIDv0 multihash: {detail}")]
    BadPrefix { detail: String },
    #[error("value does not fit in 256 bits")]
    ValueTooLarge,
}

/// Encodes bytes in Base58; each leading zero byte becomes a leading '1'.
pub fn base58_encode(data: &[u8]) -> String {
    let zeros = data.iter().take_while(|b| **b == 0).count();
    let mut out = String::with_capacity(data.len() * 138 / 100 + 1);
    for _ in 0..zeros {
        out.push('1');
    }
    if zeros < data.len() {
        let value = BigUint::from_bytes_be(&data[zeros..]);
        for digit in value.to_radix_be(58) {
            out.push(BASE58_ALPHABET[digit as usize] as char);
        }
    }
    out
}

/// Exact inverse of [`base58_encode`]; reports the index of the first
/// offending character.
pub fn base58_decode(text: &str) -> Result<Vec<u8>, CodecError> {
    let mut digits = Vec::with_capacity(text.len());
    for (index, ch) in text.chars().enumerate() {
        match BASE58_ALPHABET.iter().position(|&a| a as char == ch) {
            Some(d) => digits.push(d as u8),
            None => return Err(CodecError::InvalidCharacter { index, ch }),
        }
    }
    let zeros = digits.iter().take_while(|d| **d == 0).count();
    let mut out = vec![0u8; zeros];
    if zeros < digits.len() {
        let value = BigUint::from_radix_be(&digits[zeros..], 58).expect("digits < 58");
        out.extend_from_slice(&value.to_bytes_be());
    }
    Ok(out)
}

/// A 256-bit digest. Houses SHA-256 outputs and the values the skewed
/// generator emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest256([u8; 32]);

impl Digest256 {
    pub fn new(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Some(Self(arr))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_value(&self) -> BigUint {
        BigUint::from_bytes_be(&self.0)
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl Serialize for Digest256 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.hex())
    }
}

impl<'de> Deserialize<'de> for Digest256 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(de::Error::custom)?;
        Digest256::from_slice(&bytes)
            .ok_or_else(|| de::Error::custom(format!("expected 32 bytes, got {}", bytes.len())))
    }
}

/// A content identifier in CIDv0 form: 34-byte multihash plus its canonical
/// 46-character "Qm..." rendering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CidV0 {
    multihash: [u8; 34],
    text: String,
}

impl CidV0 {
    pub fn from_digest(digest: Digest256) -> Self {
        let mut multihash = [0u8; 34];
        multihash[0] = MULTIHASH_SHA256;
        multihash[1] = MULTIHASH_LEN;
        multihash[2..].copy_from_slice(digest.as_bytes());
        let text = base58_encode(&multihash);
        debug_assert!(text.starts_with("Qm") && text.len() == 46);
        Self { multihash, text }
    }

    /// Parses a "Qm..." string, rejecting anything that is not a SHA-256
    /// CIDv0 (CIDv1/base32 strings fail here).
    pub fn parse(text: &str) -> Result<Self, CodecError> {
        let bytes = base58_decode(text)?;
        if bytes.len() != 34 {
            return Err(CodecError::BadPrefix {
                detail: format!("decoded to {} bytes, expected 34", bytes.len()),
            });
        }
        if bytes[0] != MULTIHASH_SHA256 || bytes[1] != MULTIHASH_LEN {
            return Err(CodecError::BadPrefix {
                detail: format!("multihash header {:02x}{:02x}, expected 1220", bytes[0], bytes[1]),
            });
        }
        let digest = Digest256::from_slice(&bytes[2..]).expect("length checked");
        Ok(Self::from_digest(digest))
    }

    pub fn multihash(&self) -> &[u8; 34] {
        &self.multihash
    }

    pub fn digest(&self) -> Digest256 {
        Digest256::from_slice(&self.multihash[2..]).expect("fixed layout")
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for CidV0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl std::str::FromStr for CidV0 {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for CidV0 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for CidV0 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CidV0::parse(&s).map_err(de::Error::custom)
    }
}

/// Serializes `v < 2^256` as a 32-byte big-endian digest and wraps it in
/// multihash + Base58 framing.
pub fn cid_from_value(v: &BigUint) -> Result<CidV0, CodecError> {
    let bytes = v.to_bytes_be();
    if bytes.len() > 32 {
        return Err(CodecError::ValueTooLarge);
    }
    let mut digest = [0u8; 32];
    digest[32 - bytes.len()..].copy_from_slice(&bytes);
    Ok(CidV0::from_digest(Digest256::new(digest)))
}

/// Reads the digest back as a big-endian integer.
pub fn cid_to_value(cid: &CidV0) -> BigUint {
    cid.digest().to_value()
}
