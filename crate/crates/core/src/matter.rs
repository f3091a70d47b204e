//! Qualified cryptographic material.
//!
//! Every key, digest, signature and identifier prefix travels as a
//! derivation code followed by the URL-safe Base64 encoding of the raw
//! bytes. The code is sized so that it exactly replaces the Base64 pad
//! characters the raw length would otherwise need: 1-character codes for a
//! single pad, 2-character codes for two pads and 4-character codes when no
//! padding is required. Every qualified string is therefore a multiple of
//! four characters and can be converted to the binary domain before parsing.
//!
//! Only the rows of the published code tables are registered. Anything else
//! is rejected, which keeps parsing closed-world.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::{STANDARD, URL_SAFE_NO_PAD};
use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::MatterError;

/// URL-safe Base64 alphabet, index order.
pub const B64_ALPHABET: &[u8; 64] =
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

/// Value of a URL-safe Base64 character.
pub fn b64_index(c: u8) -> Option<u8> {
    match c {
        b'A'..=b'Z' => Some(c - b'A'),
        b'a'..=b'z' => Some(c - b'a' + 26),
        b'0'..=b'9' => Some(c - b'0' + 52),
        b'-' => Some(62),
        b'_' => Some(63),
        _ => None,
    }
}

/// Character for a Base64 value in `0..64`.
pub fn b64_char(value: u8) -> char {
    B64_ALPHABET[value as usize & 0x3f] as char
}

/// Big-endian positional Base64 encoding of `value` in exactly `width` chars.
pub fn int_to_b64(value: u32, width: usize) -> String {
    let mut out = vec![b'A'; width];
    let mut v = value;
    for slot in out.iter_mut().rev() {
        *slot = B64_ALPHABET[(v & 0x3f) as usize];
        v >>= 6;
    }
    String::from_utf8(out).expect("alphabet is ascii")
}

/// Inverse of [`int_to_b64`].
pub fn b64_to_int(text: &str) -> Result<u32, MatterError> {
    text.bytes().try_fold(0u32, |acc, c| {
        let v = b64_index(c).ok_or(MatterError::NonBase64(c as char))?;
        Ok((acc << 6) | v as u32)
    })
}

/// What a piece of qualified material is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaterialKind {
    Seed,
    PublicKeyNonTransferable,
    PublicKey,
    EncryptionKey,
    Digest,
    Signature,
}

/// Hash functions behind the registered digest codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DigestAlgo {
    Blake3_256,
    Blake2b256,
    Blake2s256,
    Sha3_256,
    Sha2_256,
    Blake3_512,
    Sha3_512,
    Blake2b512,
    Sha2_512,
}

/// One registered row of the derivation code tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DerivationCode {
    pub code: &'static str,
    pub raw_size: usize,
    pub kind: MaterialKind,
    pub description: &'static str,
}

impl DerivationCode {
    /// Base64 pad characters the raw size would need on its own.
    pub const fn pad_length(&self) -> usize {
        (3 - self.raw_size % 3) % 3
    }

    /// Characters of the full qualified text form.
    pub const fn qualified_b64_length(&self) -> usize {
        self.code.len() + (self.raw_size * 4 + 2) / 3
    }

    /// Bytes of the qualified binary form.
    pub const fn qualified_b2_length(&self) -> usize {
        self.qualified_b64_length() * 3 / 4
    }

    pub fn digest_algo(&self) -> Option<DigestAlgo> {
        Some(match self.code {
            "E" => DigestAlgo::Blake3_256,
            "F" => DigestAlgo::Blake2b256,
            "G" => DigestAlgo::Blake2s256,
            "H" => DigestAlgo::Sha3_256,
            "I" => DigestAlgo::Sha2_256,
            "0D" => DigestAlgo::Blake3_512,
            "0E" => DigestAlgo::Sha3_512,
            "0F" => DigestAlgo::Blake2b512,
            "0G" => DigestAlgo::Sha2_512,
            _ => return None,
        })
    }
}

macro_rules! row {
    ($code:expr, $size:expr, $kind:ident, $desc:expr) => {
        DerivationCode { code: $code, raw_size: $size, kind: MaterialKind::$kind, description: $desc }
    };
}

/// Every registered material code: one-, two- and four-character tables.
pub const MATTER_CODES: &[DerivationCode] = &[
    row!("A", 32, Seed, "Ed25519 256 bit random seed"),
    row!("B", 32, PublicKeyNonTransferable, "Ed25519 non-transferable verification key"),
    row!("C", 32, EncryptionKey, "X25519 public encryption key"),
    row!("D", 32, PublicKey, "Ed25519 verification key"),
    row!("E", 32, Digest, "Blake3-256 digest"),
    row!("F", 32, Digest, "Blake2b-256 digest"),
    row!("G", 32, Digest, "Blake2s-256 digest"),
    row!("H", 32, Digest, "SHA3-256 digest"),
    row!("I", 32, Digest, "SHA2-256 digest"),
    row!("J", 32, Seed, "ECDSA secp256k1 seed"),
    row!("K", 56, Seed, "Ed448 seed"),
    row!("L", 56, EncryptionKey, "X448 public encryption key"),
    row!("0A", 16, Seed, "128 bit random seed"),
    row!("0B", 64, Signature, "Ed25519 signature"),
    row!("0C", 64, Signature, "ECDSA secp256k1 signature"),
    row!("0D", 64, Digest, "Blake3-512 digest"),
    row!("0E", 64, Digest, "SHA3-512 digest"),
    row!("0F", 64, Digest, "Blake2b-512 digest"),
    row!("0G", 64, Digest, "SHA2-512 digest"),
    row!("1AAA", 33, PublicKeyNonTransferable, "ECDSA secp256k1 non-transferable verification key"),
    row!("1AAB", 33, PublicKey, "ECDSA secp256k1 verification key"),
    row!("1AAC", 57, PublicKeyNonTransferable, "Ed448 non-transferable verification key"),
    row!("1AAD", 57, PublicKey, "Ed448 verification key"),
    row!("1AAE", 114, Signature, "Ed448 signature"),
];

/// Well known codes by name.
pub mod codes {
    pub const ED25519_SEED: &str = "A";
    pub const ED25519N: &str = "B";
    pub const X25519: &str = "C";
    pub const ED25519: &str = "D";
    pub const BLAKE3_256: &str = "E";
    pub const BLAKE2B_256: &str = "F";
    pub const BLAKE2S_256: &str = "G";
    pub const SHA3_256: &str = "H";
    pub const SHA2_256: &str = "I";
    pub const SALT_128: &str = "0A";
    pub const ED25519_SIG: &str = "0B";
    pub const BLAKE3_512: &str = "0D";
    pub const ED448N: &str = "1AAC";
    pub const ED448: &str = "1AAD";
    pub const ED448_SIG: &str = "1AAE";
}

pub fn lookup(code: &str) -> Option<&'static DerivationCode> {
    MATTER_CODES.iter().find(|c| c.code == code)
}

/// Number of code characters selected by the first character, if any.
fn code_length_for(selector: u8) -> Result<usize, MatterError> {
    match selector {
        b'0' => Ok(2),
        b'1' => Ok(4),
        b'A'..=b'Z' | b'a'..=b'z' => Ok(1),
        _ => Err(MatterError::UnknownSelector(selector as char)),
    }
}

/// Raw bytes tagged with their derivation code.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matter {
    code: &'static str,
    raw: Vec<u8>,
}

impl Matter {
    pub fn new(code: &str, raw: impl Into<Vec<u8>>) -> Result<Self, MatterError> {
        let row = lookup(code).ok_or_else(|| MatterError::UnknownCode(code.to_string()))?;
        let raw = raw.into();
        if raw.len() != row.raw_size {
            return Err(MatterError::RawLengthMismatch { expected: row.raw_size, actual: raw.len() });
        }
        Ok(Self { code: row.code, raw })
    }

    pub fn code(&self) -> &'static str {
        self.code
    }

    pub fn derivation(&self) -> &'static DerivationCode {
        lookup(self.code).expect("constructed from a registered code")
    }

    pub fn kind(&self) -> MaterialKind {
        self.derivation().kind
    }

    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    /// Qualified Base64 text form.
    pub fn qb64(&self) -> String {
        let mut out = String::with_capacity(self.derivation().qualified_b64_length());
        out.push_str(self.code);
        out.push_str(&URL_SAFE_NO_PAD.encode(&self.raw));
        out
    }

    /// Qualified binary form: the text form decoded as one Base64 block.
    pub fn qb2(&self) -> Vec<u8> {
        let text = self.qb64().replace('-', "+").replace('_', "/");
        STANDARD.decode(text).expect("qualified text is always whole Base64 quadlets")
    }

    /// Parse exactly one item occupying the whole of `text`.
    pub fn from_qb64(text: &str) -> Result<Self, MatterError> {
        let (matter, used) = Self::parse(text)?;
        if used != text.len() {
            return Err(MatterError::LengthMismatch { expected: used, actual: text.len() });
        }
        Ok(matter)
    }

    /// Parse one item from the front of `text`, returning it and the
    /// number of characters consumed.
    pub fn parse(text: &str) -> Result<(Self, usize), MatterError> {
        let bytes = text.as_bytes();
        let first = *bytes.first().ok_or(MatterError::Truncated)?;
        let code_len = code_length_for(first)?;
        if bytes.len() < code_len {
            return Err(MatterError::Truncated);
        }
        let code = &text[..code_len];
        let row = lookup(code).ok_or_else(|| {
            if code_len == 1 {
                MatterError::UnknownSelector(first as char)
            } else {
                MatterError::UnknownCode(code.to_string())
            }
        })?;
        let total = row.qualified_b64_length();
        if bytes.len() < total {
            return Err(MatterError::Truncated);
        }
        let body = &text[code_len..total];
        if let Some(bad) = body.bytes().find(|c| b64_index(*c).is_none()) {
            return Err(MatterError::NonBase64(bad as char));
        }
        let raw = URL_SAFE_NO_PAD.decode(body).map_err(|_| MatterError::NonCanonical)?;
        if raw.len() != row.raw_size {
            return Err(MatterError::LengthMismatch { expected: row.raw_size, actual: raw.len() });
        }
        Ok((Self { code: row.code, raw }, total))
    }
}

impl fmt::Debug for Matter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matter({})", self.qb64())
    }
}

impl fmt::Display for Matter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.qb64())
    }
}

impl FromStr for Matter {
    type Err = MatterError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_qb64(s)
    }
}

impl Serialize for Matter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.qb64())
    }
}

impl<'de> Deserialize<'de> for Matter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::from_qb64(&text).map_err(serde::de::Error::custom)
    }
}

/// Signature schemes usable in indexed attached signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigScheme {
    Ed25519,
    EcdsaSecp256k1,
    Ed448,
}

impl SigScheme {
    pub fn code(self) -> &'static str {
        match self {
            SigScheme::Ed25519 => "A",
            SigScheme::EcdsaSecp256k1 => "B",
            SigScheme::Ed448 => "0A",
        }
    }

    pub fn raw_size(self) -> usize {
        match self {
            SigScheme::Ed448 => 114,
            _ => 64,
        }
    }

    /// Characters used by the index after the scheme code.
    fn index_width(self) -> usize {
        match self {
            SigScheme::Ed448 => 2,
            _ => 1,
        }
    }

    pub fn qualified_b64_length(self) -> usize {
        self.code().len() + self.index_width() + (self.raw_size() * 4 + 2) / 3
    }

    pub fn from_code(code: &str) -> Result<Self, MatterError> {
        match code {
            "A" => Ok(SigScheme::Ed25519),
            "B" => Ok(SigScheme::EcdsaSecp256k1),
            "0A" => Ok(SigScheme::Ed448),
            other => Err(MatterError::UnknownScheme(other.to_string())),
        }
    }
}

/// Largest index an attached signature may carry.
pub const MAX_SIG_INDEX: u32 = 63;

/// A signature tagged with the offset of its signing key in the current
/// key list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexedSignature {
    scheme: SigSchemeOrd,
    index: u32,
    raw: Vec<u8>,
}

// Ordering wrapper so signatures sort by (scheme, index, bytes).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct SigSchemeOrd(u8);

impl SigSchemeOrd {
    fn of(s: SigScheme) -> Self {
        Self(match s {
            SigScheme::Ed25519 => 0,
            SigScheme::EcdsaSecp256k1 => 1,
            SigScheme::Ed448 => 2,
        })
    }

    fn scheme(self) -> SigScheme {
        match self.0 {
            0 => SigScheme::Ed25519,
            1 => SigScheme::EcdsaSecp256k1,
            _ => SigScheme::Ed448,
        }
    }
}

impl IndexedSignature {
    pub fn new(scheme: SigScheme, index: u32, raw: impl Into<Vec<u8>>) -> Result<Self, MatterError> {
        if index > MAX_SIG_INDEX {
            return Err(MatterError::IndexOutOfRange(index));
        }
        let raw = raw.into();
        if raw.len() != scheme.raw_size() {
            return Err(MatterError::RawLengthMismatch { expected: scheme.raw_size(), actual: raw.len() });
        }
        Ok(Self { scheme: SigSchemeOrd::of(scheme), index, raw })
    }

    pub fn scheme(&self) -> SigScheme {
        self.scheme.scheme()
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    pub fn qb64(&self) -> String {
        let scheme = self.scheme();
        let mut out = String::with_capacity(scheme.qualified_b64_length());
        out.push_str(scheme.code());
        out.push_str(&int_to_b64(self.index, scheme.index_width()));
        out.push_str(&URL_SAFE_NO_PAD.encode(&self.raw));
        out
    }

    pub fn from_qb64(text: &str) -> Result<Self, MatterError> {
        let (sig, used) = Self::parse(text)?;
        if used != text.len() {
            return Err(MatterError::LengthMismatch { expected: used, actual: text.len() });
        }
        Ok(sig)
    }

    /// Parse one indexed signature from the front of `text`.
    pub fn parse(text: &str) -> Result<(Self, usize), MatterError> {
        let bytes = text.as_bytes();
        let first = *bytes.first().ok_or(MatterError::Truncated)?;
        let code_len = match first {
            b'0' => 2,
            b'A'..=b'Z' | b'a'..=b'z' => 1,
            other => return Err(MatterError::UnknownSelector(other as char)),
        };
        if bytes.len() < code_len {
            return Err(MatterError::Truncated);
        }
        let scheme = SigScheme::from_code(&text[..code_len])?;
        let total = scheme.qualified_b64_length();
        if bytes.len() < total {
            return Err(MatterError::Truncated);
        }
        let idx_end = code_len + scheme.index_width();
        let index = b64_to_int(&text[code_len..idx_end])?;
        if index > MAX_SIG_INDEX {
            return Err(MatterError::IndexOutOfRange(index));
        }
        let body = &text[idx_end..total];
        if let Some(bad) = body.bytes().find(|c| b64_index(*c).is_none()) {
            return Err(MatterError::NonBase64(bad as char));
        }
        let raw = URL_SAFE_NO_PAD.decode(body).map_err(|_| MatterError::NonCanonical)?;
        Ok((Self { scheme: SigSchemeOrd::of(scheme), index, raw }, total))
    }
}

impl fmt::Debug for IndexedSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexedSignature({:?}, {})", self.scheme(), self.index)
    }
}

impl Serialize for IndexedSignature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.qb64())
    }
}

impl<'de> Deserialize<'de> for IndexedSignature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::from_qb64(&text).map_err(serde::de::Error::custom)
    }
}

/// What a count code counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountKind {
    AttachedSignatures,
    ReceiptCouplets,
}

pub const MAX_COUNT: u32 = 4095;

/// Count of attached items that follows a serialized event, making the
/// message self-framing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CountCode {
    pub kind: CountKind,
    pub count: u32,
}

impl CountCode {
    pub const LENGTH: usize = 4;

    pub fn new(kind: CountKind, count: u32) -> Result<Self, MatterError> {
        if count > MAX_COUNT {
            return Err(MatterError::CountOutOfRange(count));
        }
        Ok(Self { kind, count })
    }

    /// Text-domain form: `-A` followed by two positional Base64 digits.
    pub fn qb64(&self) -> String {
        format!("-A{}", int_to_b64(self.count, 2))
    }

    /// Parse a count code from the front of `text`. The kind comes from
    /// the parsing context since both tables share the `-A` selector.
    pub fn parse(text: &str, kind: CountKind) -> Result<Self, MatterError> {
        let head = text.get(..Self::LENGTH).ok_or(MatterError::Truncated)?;
        let bytes = head.as_bytes();
        if bytes[0] != b'-' {
            return Err(MatterError::UnknownSelector(bytes[0] as char));
        }
        match bytes[1] {
            b'A' => {}
            b'B' => return Err(MatterError::UnsupportedDomain),
            other => return Err(MatterError::UnknownCode(format!("-{}", other as char))),
        }
        let count = b64_to_int(&head[2..])?;
        Ok(Self { kind, count })
    }
}

pub fn encode(material: &Matter) -> String {
    material.qb64()
}

pub fn decode(text: &str) -> Result<Matter, MatterError> {
    Matter::from_qb64(text)
}

pub fn encode_indexed(sig: &IndexedSignature) -> String {
    sig.qb64()
}

pub fn decode_indexed(text: &str) -> Result<IndexedSignature, MatterError> {
    IndexedSignature::from_qb64(text)
}

pub fn encode_count(count: &CountCode) -> String {
    count.qb64()
}

pub fn decode_count(text: &str, kind: CountKind) -> Result<CountCode, MatterError> {
    if text.len() != CountCode::LENGTH {
        return Err(MatterError::LengthMismatch { expected: CountCode::LENGTH, actual: text.len() });
    }
    CountCode::parse(text, kind)
}
