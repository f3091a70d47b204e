//! Digest and signature primitives behind the registered codes.

use blake2::{Blake2b512, Blake2s256, Digest as _};
use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};

use crate::error::IdentifierError;
use crate::matter::{codes, lookup, DigestAlgo, IndexedSignature, Matter, MaterialKind, SigScheme};

type Blake2b256 = blake2::Blake2b<blake2::digest::consts::U32>;

/// Digest `data` under a registered digest code.
pub fn digest(code: &str, data: &[u8]) -> Result<Matter, IdentifierError> {
    let algo = lookup(code)
        .and_then(|row| row.digest_algo())
        .ok_or_else(|| IdentifierError::UnregisteredDigestCode(code.to_string()))?;
    let raw: Vec<u8> = match algo {
        DigestAlgo::Blake3_256 => blake3::hash(data).as_bytes().to_vec(),
        DigestAlgo::Blake3_512 => {
            let mut out = vec![0u8; 64];
            blake3::Hasher::new().update(data).finalize_xof().fill(&mut out);
            out
        }
        DigestAlgo::Blake2b256 => Blake2b256::digest(data).to_vec(),
        DigestAlgo::Blake2b512 => Blake2b512::digest(data).to_vec(),
        DigestAlgo::Blake2s256 => Blake2s256::digest(data).to_vec(),
        DigestAlgo::Sha3_256 => sha3::Sha3_256::digest(data).to_vec(),
        DigestAlgo::Sha3_512 => sha3::Sha3_512::digest(data).to_vec(),
        DigestAlgo::Sha2_256 => sha2::Sha256::digest(data).to_vec(),
        DigestAlgo::Sha2_512 => sha2::Sha512::digest(data).to_vec(),
    };
    Ok(Matter::new(code, raw)?)
}

/// True when `digest` is the digest of `data` under its own code.
pub fn digest_matches(digest_value: &Matter, data: &[u8]) -> bool {
    digest(digest_value.code(), data).map(|d| &d == digest_value).unwrap_or(false)
}

/// Verify a raw signature against a qualified verification key.
/// Only Ed25519 keys are verifiable; anything else fails closed.
pub fn verify(key: &Matter, data: &[u8], sig: &[u8]) -> bool {
    if !matches!(key.code(), codes::ED25519 | codes::ED25519N) {
        return false;
    }
    let Ok(bytes) = <[u8; 32]>::try_from(key.raw()) else { return false };
    let Ok(vk) = VerifyingKey::from_bytes(&bytes) else { return false };
    let Ok(sig) = ed25519_dalek::Signature::from_slice(sig) else { return false };
    vk.verify(data, &sig).is_ok()
}

/// Verify an indexed signature against the key it points at.
pub fn verify_indexed(keys: &[Matter], data: &[u8], sig: &IndexedSignature) -> bool {
    sig.scheme() == SigScheme::Ed25519
        && keys.get(sig.index() as usize).is_some_and(|k| verify(k, data, sig.raw()))
}

/// An Ed25519 signing key pair.
#[derive(Clone)]
pub struct Signer {
    key: SigningKey,
    transferable: bool,
}

impl Signer {
    pub fn from_seed(seed: [u8; 32], transferable: bool) -> Self {
        Self { key: SigningKey::from_bytes(&seed), transferable }
    }

    /// Build from a qualified `A`-coded seed.
    pub fn from_qualified_seed(seed: &Matter, transferable: bool) -> Result<Self, IdentifierError> {
        if seed.code() != codes::ED25519_SEED {
            return Err(IdentifierError::InvalidSeed(format!("expected an Ed25519 seed, got {}", seed.code())));
        }
        let bytes: [u8; 32] = seed.raw().try_into().expect("A codes are 32 bytes");
        Ok(Self::from_seed(bytes, transferable))
    }

    pub fn seed(&self) -> Matter {
        Matter::new(codes::ED25519_SEED, self.key.to_bytes().to_vec()).expect("32 byte seed")
    }

    pub fn transferable(&self) -> bool {
        self.transferable
    }

    /// Qualified public key: `D` when transferable, `B` otherwise.
    pub fn verfer(&self) -> Matter {
        let code = if self.transferable { codes::ED25519 } else { codes::ED25519N };
        Matter::new(code, self.key.verifying_key().to_bytes().to_vec()).expect("32 byte key")
    }

    pub fn sign_raw(&self, data: &[u8]) -> [u8; 64] {
        self.key.sign(data).to_bytes()
    }

    /// Qualified `0B` signature.
    pub fn sign(&self, data: &[u8]) -> Matter {
        Matter::new(codes::ED25519_SIG, self.sign_raw(data).to_vec()).expect("64 byte signature")
    }

    pub fn sign_indexed(&self, data: &[u8], index: u32) -> IndexedSignature {
        IndexedSignature::new(SigScheme::Ed25519, index, self.sign_raw(data).to_vec())
            .expect("index bounded by caller")
    }
}

impl std::fmt::Debug for Signer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Signer({})", self.verfer())
    }
}

pub fn is_signing_key(m: &Matter) -> bool {
    matches!(m.kind(), MaterialKind::PublicKey | MaterialKind::PublicKeyNonTransferable)
}
