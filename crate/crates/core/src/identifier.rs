//! Self-certifying identifier prefixes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::crypto::{self, Signer};
use crate::error::IdentifierError;
use crate::event::{Element, EventBody, Inception, KeyEvent, LocationSeal, SerialKind, extract_serialize};
use crate::matter::{codes, lookup, Matter, MaterialKind};
use crate::threshold::SigningThreshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrefixClass {
    Basic,
    SelfAddressing,
    SelfSigning,
}

/// A qualified identifier prefix. Its class follows from its code.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix(Matter);

impl Prefix {
    pub fn new(matter: Matter) -> Result<Self, IdentifierError> {
        match matter.kind() {
            MaterialKind::PublicKey | MaterialKind::PublicKeyNonTransferable | MaterialKind::Digest => {}
            MaterialKind::Signature if matter.code() == codes::ED25519_SIG => {}
            _ => return Err(IdentifierError::NotAPrefix(matter.code().to_string())),
        }
        Ok(Self(matter))
    }

    pub fn from_qb64(text: &str) -> Result<Self, IdentifierError> {
        Self::new(Matter::from_qb64(text)?)
    }

    pub fn class(&self) -> PrefixClass {
        match self.0.kind() {
            MaterialKind::Digest => PrefixClass::SelfAddressing,
            MaterialKind::Signature => PrefixClass::SelfSigning,
            _ => PrefixClass::Basic,
        }
    }

    /// False only for basic prefixes using a non-transferable key code.
    pub fn transferable(&self) -> bool {
        self.0.kind() != MaterialKind::PublicKeyNonTransferable
    }

    pub fn matter(&self) -> &Matter {
        &self.0
    }

    pub fn qb64(&self) -> String {
        self.0.qb64()
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prefix({})", self.qb64())
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.qb64())
    }
}

impl FromStr for Prefix {
    type Err = IdentifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_qb64(s)
    }
}

impl Serialize for Prefix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.qb64())
    }
}

impl<'de> Deserialize<'de> for Prefix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::from_qb64(&text).map_err(serde::de::Error::custom)
    }
}

/// Inception data from which a prefix is derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InceptionSeed {
    pub sith: SigningThreshold,
    pub keys: Vec<Matter>,
    pub next: Option<Matter>,
    pub toad: u64,
    pub witnesses: Vec<Prefix>,
    pub config: Vec<String>,
    pub delegator: Option<LocationSeal>,
}

impl InceptionSeed {
    /// Single key, threshold 1, no witnesses.
    pub fn single(key: Matter, next: Option<Matter>) -> Self {
        Self {
            sith: SigningThreshold::Count(1),
            keys: vec![key],
            next,
            toad: 0,
            witnesses: Vec::new(),
            config: Vec::new(),
            delegator: None,
        }
    }

    pub fn validate(&self) -> Result<(), IdentifierError> {
        let bad = |s: String| Err(IdentifierError::InvalidSeed(s));
        if self.keys.is_empty() {
            return bad("no signing keys".into());
        }
        if let Some(k) = self.keys.iter().find(|k| !crypto::is_signing_key(k)) {
            return Err(IdentifierError::NotASigningKey(k.code().to_string()));
        }
        if let Err(e) = self.sith.validate_for(self.keys.len()) {
            return bad(e.to_string());
        }
        if let Some(n) = &self.next {
            if n.kind() != MaterialKind::Digest {
                return bad(format!("next commitment has non-digest code {}", n.code()));
            }
        }
        if let Some(w) = self.witnesses.iter().find(|w| w.transferable()) {
            return bad(format!("witness {w} is transferable"));
        }
        if self.witnesses.iter().collect::<BTreeSet<_>>().len() != self.witnesses.len() {
            return bad("duplicate witness".into());
        }
        check_toad(self.toad, self.witnesses.len()).map_err(IdentifierError::InvalidSeed)
    }

    fn ilk(&self) -> &'static str {
        if self.delegator.is_some() { "dip" } else { "icp" }
    }

    /// Extracted inception elements with `prefix_text` in the prefix slot.
    pub fn elements(&self, prefix_text: &str) -> Vec<Element> {
        let mut els = vec![
            Element::Text(prefix_text.to_string()),
            Element::Text("0".into()),
            Element::Text(self.ilk().into()),
            self.sith.element(),
            Element::texts(self.keys.iter().map(Matter::qb64)),
            Element::Text(self.next.as_ref().map(Matter::qb64).unwrap_or_default()),
            Element::Text(format!("{:x}", self.toad)),
            Element::texts(self.witnesses.iter().map(Prefix::qb64)),
            Element::texts(self.config.iter().cloned()),
        ];
        if let Some(da) = &self.delegator {
            els.push(da.element());
        }
        els
    }

    fn placeholder_input(&self, length: usize) -> Vec<u8> {
        extract_serialize(&self.elements(&"#".repeat(length)))
    }

    /// The inception event (`icp` or `dip`) for this seed under `prefix`.
    pub fn event(&self, prefix: Prefix, kind: SerialKind) -> KeyEvent {
        KeyEvent {
            kind,
            prefix,
            sn: 0,
            prior: None,
            body: EventBody::Inception(Inception {
                sith: self.sith.clone(),
                keys: self.keys.clone(),
                next: self.next.clone(),
                toad: self.toad,
                witnesses: self.witnesses.clone(),
                config: self.config.clone(),
                delegator: self.delegator.clone(),
            }),
        }
    }

    /// Recover the seed carried by an inception event.
    pub fn from_event(event: &KeyEvent) -> Option<Self> {
        match &event.body {
            EventBody::Inception(b) => Some(Self {
                sith: b.sith.clone(),
                keys: b.keys.clone(),
                next: b.next.clone(),
                toad: b.toad,
                witnesses: b.witnesses.clone(),
                config: b.config.clone(),
                delegator: b.delegator.clone(),
            }),
            _ => None,
        }
    }
}

/// Tally rule: zero without witnesses, otherwise between 1 and N.
pub fn check_toad(toad: u64, witnesses: usize) -> Result<(), String> {
    let ok = if witnesses == 0 { toad == 0 } else { toad >= 1 && toad as usize <= witnesses };
    if ok { Ok(()) } else { Err(format!("tally {toad} invalid for {witnesses} witnesses")) }
}

pub fn derive_basic(key: &Matter, transferable: bool) -> Result<Prefix, IdentifierError> {
    let code = match key.code() {
        codes::ED25519 | codes::ED25519N => {
            if transferable { codes::ED25519 } else { codes::ED25519N }
        }
        "1AAA" | "1AAB" => {
            if transferable { "1AAB" } else { "1AAA" }
        }
        codes::ED448 | codes::ED448N => {
            if transferable { codes::ED448 } else { codes::ED448N }
        }
        other => return Err(IdentifierError::NotASigningKey(other.to_string())),
    };
    Prefix::new(Matter::new(code, key.raw().to_vec())?)
}

pub fn derive_self_addressing(seed: &InceptionSeed, digest_code: &str) -> Result<Prefix, IdentifierError> {
    let row = lookup(digest_code)
        .filter(|r| r.kind == MaterialKind::Digest)
        .ok_or_else(|| IdentifierError::UnregisteredDigestCode(digest_code.to_string()))?;
    seed.validate()?;
    Prefix::new(crypto::digest(digest_code, &seed.placeholder_input(row.qualified_b64_length()))?)
}

pub fn derive_self_signing(seed: &InceptionSeed, signer: &Signer) -> Result<Prefix, IdentifierError> {
    seed.validate()?;
    if seed.keys.len() != 1 {
        return Err(IdentifierError::NotSingleKey);
    }
    if seed.keys[0].raw() != signer.verfer().raw() {
        return Err(IdentifierError::KeyMismatch);
    }
    let length = lookup(codes::ED25519_SIG).expect("registered").qualified_b64_length();
    Prefix::new(signer.sign(&seed.placeholder_input(length)))
}

/// True iff re-deriving from `seed` by the prefix's class reproduces it.
pub fn verify_prefix(prefix: &Prefix, seed: &InceptionSeed) -> bool {
    if seed.validate().is_err() {
        return false;
    }
    match prefix.class() {
        PrefixClass::Basic => {
            let single = seed.keys.len() == 1 && seed.delegator.is_none();
            let abandoned_ok = prefix.transferable() || seed.next.is_none();
            single
                && abandoned_ok
                && derive_basic(&seed.keys[0], prefix.transferable()).is_ok_and(|p| &p == prefix)
        }
        PrefixClass::SelfAddressing => {
            derive_self_addressing(seed, prefix.matter().code()).is_ok_and(|p| &p == prefix)
        }
        PrefixClass::SelfSigning => {
            let length = prefix.matter().derivation().qualified_b64_length();
            seed.keys.len() == 1
                && crypto::verify(&seed.keys[0], &seed.placeholder_input(length), prefix.matter().raw())
        }
    }
}
