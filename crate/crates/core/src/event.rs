//! Key events, seals and receipts with their wire forms.
//!
//! A complete event serializes as an ordered mapping whose first field is
//! the version string, so the encoding and size can be sniffed from the
//! first few bytes. Field creation order is fixed per ilk. Extracted
//! element sets (next-key commitments, prefix derivation input) use a
//! separate encoding-independent form: the UTF-8 text of every value
//! concatenated in a depth-first walk.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto;
use crate::error::{EventError, IdentifierError};
use crate::identifier::Prefix;
use crate::matter::{CountCode, CountKind, IndexedSignature, Matter};
use crate::threshold::SigningThreshold;

pub const PROTOCOL: &str = "KERI";
pub const VERSION_MAJOR: u8 = 1;
pub const VERSION_MINOR: u8 = 0;
pub const VERSION_STRING_LEN: usize = 17;
pub const MAX_EVENT_SIZE: usize = 0xff_ffff;
/// Separator between a serialized event and its attachments.
pub const SEPARATOR: &[u8] = b"\r\n\r\n";

/// Trait recognised in inception configuration: only establishment
/// events may follow.
pub const TRAIT_EST_ONLY: &str = "EstOnly";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SerialKind {
    #[default]
    Json,
    Cbor,
    Mgpk,
}

impl SerialKind {
    pub fn token(self) -> &'static str {
        match self {
            Self::Json => "JSON",
            Self::Cbor => "CBOR",
            Self::Mgpk => "MGPK",
        }
    }

    pub fn from_token(token: &str) -> Result<Self, EventError> {
        match token {
            "JSON" => Ok(Self::Json),
            "CBOR" => Ok(Self::Cbor),
            "MGPK" => Ok(Self::Mgpk),
            other => Err(EventError::UnknownKind(other.to_string())),
        }
    }
}

/// `KERI10JSON0000fd_`: protocol, hex major and minor version, encoding
/// and the hex byte size of the whole serialized event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VersionString {
    pub major: u8,
    pub minor: u8,
    pub kind: SerialKind,
    pub size: usize,
}

impl VersionString {
    pub fn new(kind: SerialKind, size: usize) -> Self {
        Self { major: VERSION_MAJOR, minor: VERSION_MINOR, kind, size }
    }

    pub fn parse(text: &str) -> Result<Self, EventError> {
        let bad = || EventError::BadVersionString(text.to_string());
        if text.len() != VERSION_STRING_LEN || !text.is_ascii() || !text.starts_with(PROTOCOL) || !text.ends_with('_') {
            return Err(bad());
        }
        let hex = |s: &str| usize::from_str_radix(s, 16).map_err(|_| bad());
        let major = hex(&text[4..5])? as u8;
        let minor = hex(&text[5..6])? as u8;
        let kind = SerialKind::from_token(&text[6..10]).map_err(|_| bad())?;
        if !text[10..16].bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            return Err(bad());
        }
        let size = hex(&text[10..16])?;
        Ok(Self { major, minor, kind, size })
    }
}

impl fmt::Display for VersionString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{PROTOCOL}{:x}{:x}{}{:06x}_", self.major, self.minor, self.kind.token(), self.size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ilk {
    Icp,
    Rot,
    Ixn,
    Dip,
    Drt,
    Rcpt,
    Vrct,
}

impl Ilk {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Icp => "icp",
            Self::Rot => "rot",
            Self::Ixn => "ixn",
            Self::Dip => "dip",
            Self::Drt => "drt",
            Self::Rcpt => "rcpt",
            Self::Vrct => "vrct",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "icp" => Self::Icp,
            "rot" => Self::Rot,
            "ixn" => Self::Ixn,
            "dip" => Self::Dip,
            "drt" => Self::Drt,
            "rcpt" => Self::Rcpt,
            "vrct" => Self::Vrct,
            _ => return None,
        })
    }

    pub fn is_establishment(self) -> bool {
        matches!(self, Self::Icp | Self::Rot | Self::Dip | Self::Drt)
    }
}

impl fmt::Display for Ilk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn hex_sn(sn: u64) -> String {
    format!("{sn:x}")
}

fn parse_hex_sn(text: &str) -> Result<u64, EventError> {
    let canonical = !text.is_empty()
        && text.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        && (text == "0" || !text.starts_with('0'));
    if !canonical {
        return Err(EventError::MalformedBody(format!("bad hex number {text:?}")));
    }
    u64::from_str_radix(text, 16).map_err(|_| EventError::MalformedBody(format!("number {text:?} too large")))
}

mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::hex_sn(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_hex_sn(&text).map_err(serde::de::Error::custom)
    }
}

/// Digest of external data anchored in an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigestSeal {
    pub d: Matter,
}

/// Merkle tree root anchored in an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootSeal {
    pub rd: Matter,
}

/// Reference to a complete event of some log by its digest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSeal {
    #[serde(rename = "i")]
    pub prefix: Prefix,
    #[serde(rename = "s", with = "hex_u64")]
    pub sn: u64,
    #[serde(rename = "d")]
    pub digest: Matter,
}

/// Location of an event: prefix, sequence number, ilk and prior digest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationSeal {
    #[serde(rename = "i")]
    pub prefix: Prefix,
    #[serde(rename = "s", with = "hex_u64")]
    pub sn: u64,
    #[serde(rename = "t")]
    pub ilk: String,
    #[serde(rename = "p")]
    pub prior: Matter,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seal {
    Location(LocationSeal),
    Event(EventSeal),
    Root(RootSeal),
    Digest(DigestSeal),
}

impl Seal {
    pub fn element(&self) -> Element {
        let t = |s: String| Element::Text(s);
        Element::List(match self {
            Seal::Digest(s) => vec![t(s.d.qb64())],
            Seal::Root(s) => vec![t(s.rd.qb64())],
            Seal::Event(s) => vec![t(s.prefix.qb64()), t(hex_sn(s.sn)), t(s.digest.qb64())],
            Seal::Location(s) => vec![t(s.prefix.qb64()), t(hex_sn(s.sn)), t(s.ilk.clone()), t(s.prior.qb64())],
        })
    }
}

impl LocationSeal {
    pub fn element(&self) -> Element {
        Seal::Location(self.clone()).element()
    }
}

/// An element of an extracted data set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    Text(String),
    List(Vec<Element>),
}

impl Element {
    pub fn texts<I: IntoIterator<Item = String>>(items: I) -> Self {
        Element::List(items.into_iter().map(Element::Text).collect())
    }
}

/// Concatenate the UTF-8 text of every element, depth first.
pub fn extract_serialize(elements: &[Element]) -> Vec<u8> {
    fn walk(e: &Element, out: &mut Vec<u8>) {
        match e {
            Element::Text(s) => out.extend_from_slice(s.as_bytes()),
            Element::List(items) => items.iter().for_each(|i| walk(i, out)),
        }
    }
    let mut out = Vec::new();
    elements.iter().for_each(|e| walk(e, &mut out));
    out
}

/// Commitment to the next threshold and key list.
pub fn next_digest(sith: &SigningThreshold, keys: &[Matter], code: &str) -> Result<Matter, IdentifierError> {
    let data = extract_serialize(&[sith.element(), Element::texts(keys.iter().map(Matter::qb64))]);
    crypto::digest(code, &data)
}

/// Body shared by `icp` and `dip`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inception {
    pub sith: SigningThreshold,
    pub keys: Vec<Matter>,
    pub next: Option<Matter>,
    pub toad: u64,
    pub witnesses: Vec<Prefix>,
    pub config: Vec<String>,
    /// Location of the delegating event; present only for `dip`.
    pub delegator: Option<LocationSeal>,
}

/// Body shared by `rot` and `drt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rotation {
    pub sith: SigningThreshold,
    pub keys: Vec<Matter>,
    pub next: Option<Matter>,
    pub toad: u64,
    pub cuts: Vec<Prefix>,
    pub adds: Vec<Prefix>,
    pub seals: Vec<Seal>,
    /// Location of the delegating event; present only for `drt`.
    pub delegator: Option<LocationSeal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventBody {
    Inception(Inception),
    Rotation(Rotation),
    Interaction { seals: Vec<Seal> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyEvent {
    pub kind: SerialKind,
    pub prefix: Prefix,
    pub sn: u64,
    pub prior: Option<Matter>,
    pub body: EventBody,
}

/// Establishment data common to all four establishment ilks.
#[derive(Debug, Clone, Copy)]
pub struct EstablishmentView<'a> {
    pub sith: &'a SigningThreshold,
    pub keys: &'a [Matter],
    pub next: Option<&'a Matter>,
    pub toad: u64,
    pub delegator: Option<&'a LocationSeal>,
}

impl KeyEvent {
    pub fn ilk(&self) -> Ilk {
        match &self.body {
            EventBody::Inception(b) if b.delegator.is_some() => Ilk::Dip,
            EventBody::Inception(_) => Ilk::Icp,
            EventBody::Rotation(b) if b.delegator.is_some() => Ilk::Drt,
            EventBody::Rotation(_) => Ilk::Rot,
            EventBody::Interaction { .. } => Ilk::Ixn,
        }
    }

    pub fn is_establishment(&self) -> bool {
        self.ilk().is_establishment()
    }

    pub fn establishment(&self) -> Option<EstablishmentView<'_>> {
        match &self.body {
            EventBody::Inception(b) => Some(EstablishmentView {
                sith: &b.sith,
                keys: &b.keys,
                next: b.next.as_ref(),
                toad: b.toad,
                delegator: b.delegator.as_ref(),
            }),
            EventBody::Rotation(b) => Some(EstablishmentView {
                sith: &b.sith,
                keys: &b.keys,
                next: b.next.as_ref(),
                toad: b.toad,
                delegator: b.delegator.as_ref(),
            }),
            EventBody::Interaction { .. } => None,
        }
    }

    pub fn seals(&self) -> &[Seal] {
        match &self.body {
            EventBody::Rotation(b) => &b.seals,
            EventBody::Interaction { seals } => seals,
            EventBody::Inception(_) => &[],
        }
    }

    pub fn delegator_seal(&self) -> Option<&LocationSeal> {
        self.establishment().and_then(|e| e.delegator)
    }

    /// Location seal pointing at this event.
    pub fn location_seal(&self) -> Option<LocationSeal> {
        Some(LocationSeal {
            prefix: self.prefix.clone(),
            sn: self.sn,
            ilk: self.ilk().as_str().to_string(),
            prior: self.prior.clone()?,
        })
    }

    pub fn serialize(&self) -> Result<Vec<u8>, EventError> {
        self.validate_shape()?;
        encode_sized(self.kind, |v| self.to_wire(v))
    }

    /// Decode exactly one event occupying all of `bytes`.
    pub fn deserialize(bytes: &[u8]) -> Result<Self, EventError> {
        match Message::deserialize(bytes)? {
            Message::Event(e) => Ok(e),
            other => Err(EventError::MalformedBody(format!("expected a key event, found {}", other.ilk()))),
        }
    }

    pub fn digest(&self, code: &str) -> Result<Matter, EventError> {
        Ok(crypto::digest(code, &self.serialize()?)?)
    }

    fn validate_shape(&self) -> Result<(), EventError> {
        let ilk = self.ilk();
        let inception = matches!(ilk, Ilk::Icp | Ilk::Dip);
        if inception && (self.sn != 0 || self.prior.is_some()) {
            return Err(EventError::MalformedBody(format!("{ilk} must be sn 0 without prior digest")));
        }
        if !inception && (self.sn == 0 || self.prior.is_none()) {
            return Err(EventError::FieldMissing { ilk: ilk.as_str(), field: "p" });
        }
        Ok(())
    }

    fn to_wire(&self, v: String) -> Wire {
        let mut w = Wire {
            v,
            i: self.prefix.qb64(),
            s: hex_sn(self.sn),
            p: self.prior.clone(),
            t: self.ilk().as_str().to_string(),
            ..Wire::default()
        };
        match &self.body {
            EventBody::Inception(b) => {
                w.kt = Some(b.sith.clone());
                w.k = Some(b.keys.clone());
                w.n = Some(b.next.as_ref().map(Matter::qb64).unwrap_or_default());
                w.wt = Some(hex_sn(b.toad));
                w.w = Some(b.witnesses.clone());
                w.c = Some(b.config.clone());
                w.da = b.delegator.clone();
            }
            EventBody::Rotation(b) => {
                w.kt = Some(b.sith.clone());
                w.k = Some(b.keys.clone());
                w.n = Some(b.next.as_ref().map(Matter::qb64).unwrap_or_default());
                w.wt = Some(hex_sn(b.toad));
                w.wr = Some(b.cuts.clone());
                w.wa = Some(b.adds.clone());
                w.a = Some(b.seals.clone());
                w.da = b.delegator.clone();
            }
            EventBody::Interaction { seals } => w.a = Some(seals.clone()),
        }
        w
    }

    fn from_wire(kind: SerialKind, w: Wire) -> Result<Self, EventError> {
        let ilk = Ilk::parse(&w.t).ok_or_else(|| EventError::MalformedBody(format!("unknown ilk {:?}", w.t)))?;
        let name = ilk.as_str();
        let missing = |field| EventError::FieldMissing { ilk: name, field };
        let prefix = Prefix::from_qb64(&w.i)?;
        let sn = parse_hex_sn(&w.s)?;
        let next = match w.n.as_deref() {
            None => None,
            Some("") => Some(None),
            Some(text) => Some(Some(Matter::from_qb64(text)?)),
        };
        let toad = w.wt.as_deref().map(parse_hex_sn).transpose()?;
        let body = match ilk {
            Ilk::Icp | Ilk::Dip => {
                if ilk == Ilk::Dip && w.da.is_none() {
                    return Err(missing("da"));
                }
                if ilk == Ilk::Icp && w.da.is_some() {
                    return Err(EventError::MalformedBody("icp carries a delegator seal".into()));
                }
                EventBody::Inception(Inception {
                    sith: w.kt.ok_or_else(|| missing("kt"))?,
                    keys: w.k.ok_or_else(|| missing("k"))?,
                    next: next.ok_or_else(|| missing("n"))?,
                    toad: toad.ok_or_else(|| missing("wt"))?,
                    witnesses: w.w.ok_or_else(|| missing("w"))?,
                    config: w.c.ok_or_else(|| missing("c"))?,
                    delegator: w.da,
                })
            }
            Ilk::Rot | Ilk::Drt => {
                if ilk == Ilk::Drt && w.da.is_none() {
                    return Err(missing("da"));
                }
                if ilk == Ilk::Rot && w.da.is_some() {
                    return Err(EventError::MalformedBody("rot carries a delegator seal".into()));
                }
                EventBody::Rotation(Rotation {
                    sith: w.kt.ok_or_else(|| missing("kt"))?,
                    keys: w.k.ok_or_else(|| missing("k"))?,
                    next: next.ok_or_else(|| missing("n"))?,
                    toad: toad.ok_or_else(|| missing("wt"))?,
                    cuts: w.wr.ok_or_else(|| missing("wr"))?,
                    adds: w.wa.ok_or_else(|| missing("wa"))?,
                    seals: w.a.ok_or_else(|| missing("a"))?,
                    delegator: w.da,
                })
            }
            Ilk::Ixn => EventBody::Interaction { seals: w.a.ok_or_else(|| missing("a"))? },
            Ilk::Rcpt | Ilk::Vrct => unreachable!("receipts dispatched by Message"),
        };
        let event = KeyEvent { kind, prefix, sn, prior: w.p, body };
        event.validate_shape()?;
        Ok(event)
    }
}

/// Attached witness receipt: non-transferable witness prefix plus its
/// signature over the receipted event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Couplet {
    pub witness: Prefix,
    pub sig: Matter,
}

impl Couplet {
    pub fn qb64(&self) -> String {
        format!("{}{}", self.witness.qb64(), self.sig.qb64())
    }

    /// Check the signature against the key embedded in the witness prefix.
    pub fn verify(&self, event_bytes: &[u8]) -> bool {
        !self.witness.transferable()
            && crypto::is_signing_key(self.witness.matter())
            && crypto::verify(self.witness.matter(), event_bytes, self.sig.raw())
    }
}

/// Multi-receipt from non-transferable witnesses (`rcpt`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReceipt {
    pub kind: SerialKind,
    pub prefix: Prefix,
    pub sn: u64,
    pub digest: Matter,
    pub couplets: Vec<Couplet>,
}

/// Receipt from a validator with a transferable prefix (`vrct`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorReceipt {
    pub kind: SerialKind,
    pub prefix: Prefix,
    pub sn: u64,
    pub digest: Matter,
    pub seal: EventSeal,
    pub sigs: Vec<IndexedSignature>,
}

impl WitnessReceipt {
    pub fn serialize(&self) -> Result<Vec<u8>, EventError> {
        encode_sized(self.kind, |v| Wire {
            v,
            i: self.prefix.qb64(),
            s: hex_sn(self.sn),
            t: Ilk::Rcpt.as_str().into(),
            d: Some(self.digest.clone()),
            ..Wire::default()
        })
    }
}

impl ValidatorReceipt {
    pub fn serialize(&self) -> Result<Vec<u8>, EventError> {
        encode_sized(self.kind, |v| Wire {
            v,
            i: self.prefix.qb64(),
            s: hex_sn(self.sn),
            t: Ilk::Vrct.as_str().into(),
            d: Some(self.digest.clone()),
            a: Some(vec![Seal::Event(self.seal.clone())]),
            ..Wire::default()
        })
    }
}

/// Any message that can appear in a framed stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Event(KeyEvent),
    Receipt(WitnessReceipt),
    ValidatorReceipt(ValidatorReceipt),
}

impl Message {
    pub fn ilk(&self) -> Ilk {
        match self {
            Message::Event(e) => e.ilk(),
            Message::Receipt(_) => Ilk::Rcpt,
            Message::ValidatorReceipt(_) => Ilk::Vrct,
        }
    }

    /// Decode exactly one message occupying all of `bytes`.
    pub fn deserialize(bytes: &[u8]) -> Result<Self, EventError> {
        let version = sniff(bytes)?;
        if version.size != bytes.len() {
            return Err(EventError::SizeMismatch { declared: version.size, actual: bytes.len() });
        }
        let wire: Wire = match version.kind {
            SerialKind::Json => serde_json::from_slice(bytes).map_err(|e| EventError::MalformedBody(e.to_string()))?,
            SerialKind::Cbor => ciborium::from_reader(bytes).map_err(|e| EventError::MalformedBody(e.to_string()))?,
            SerialKind::Mgpk => rmp_serde::from_slice(bytes).map_err(|e| EventError::MalformedBody(e.to_string()))?,
        };
        if VersionString::parse(&wire.v)? != version {
            return Err(EventError::BadVersionString(wire.v));
        }
        let message = match wire.t.as_str() {
            "rcpt" => Message::Receipt(WitnessReceipt {
                kind: version.kind,
                prefix: Prefix::from_qb64(&wire.i)?,
                sn: parse_hex_sn(&wire.s)?,
                digest: wire.d.ok_or(EventError::FieldMissing { ilk: "rcpt", field: "d" })?,
                couplets: Vec::new(),
            }),
            "vrct" => {
                let seal = match wire.a.as_deref() {
                    Some([Seal::Event(seal)]) => seal.clone(),
                    _ => return Err(EventError::FieldMissing { ilk: "vrct", field: "a" }),
                };
                Message::ValidatorReceipt(ValidatorReceipt {
                    kind: version.kind,
                    prefix: Prefix::from_qb64(&wire.i)?,
                    sn: parse_hex_sn(&wire.s)?,
                    digest: wire.d.ok_or(EventError::FieldMissing { ilk: "vrct", field: "d" })?,
                    seal,
                    sigs: Vec::new(),
                })
            }
            _ => Message::Event(KeyEvent::from_wire(version.kind, wire)?),
        };
        // the canonical re-encoding must reproduce the received bytes
        let again = match &message {
            Message::Event(e) => e.serialize()?,
            Message::Receipt(r) => r.serialize()?,
            Message::ValidatorReceipt(r) => r.serialize()?,
        };
        if again != bytes {
            return Err(EventError::MalformedBody("non-canonical serialization".into()));
        }
        Ok(message)
    }
}

/// Locate and parse the version string near the start of a serialized
/// message.
pub fn sniff(bytes: &[u8]) -> Result<VersionString, EventError> {
    let window = &bytes[..bytes.len().min(12 + VERSION_STRING_LEN)];
    let start = window
        .windows(PROTOCOL.len())
        .position(|w| w == PROTOCOL.as_bytes())
        .ok_or_else(|| EventError::BadVersionString("no version string found".into()))?;
    let end = start + VERSION_STRING_LEN;
    let text = bytes
        .get(start..end)
        .and_then(|b| std::str::from_utf8(b).ok())
        .ok_or_else(|| EventError::BadVersionString("truncated version string".into()))?;
    VersionString::parse(text)
}

fn encode_wire(kind: SerialKind, wire: &Wire) -> Result<Vec<u8>, EventError> {
    let malformed = |e: String| EventError::MalformedBody(e);
    match kind {
        SerialKind::Json => serde_json::to_vec(wire).map_err(|e| malformed(e.to_string())),
        SerialKind::Cbor => {
            let mut out = Vec::new();
            ciborium::into_writer(wire, &mut out).map_err(|e| malformed(e.to_string()))?;
            Ok(out)
        }
        SerialKind::Mgpk => rmp_serde::to_vec_named(wire).map_err(|e| malformed(e.to_string())),
    }
}

/// Serialize twice: once to learn the size, once with the size filled in.
fn encode_sized(kind: SerialKind, build: impl Fn(String) -> Wire) -> Result<Vec<u8>, EventError> {
    let probe = encode_wire(kind, &build(VersionString::new(kind, 0).to_string()))?;
    if probe.len() > MAX_EVENT_SIZE {
        return Err(EventError::MalformedBody(format!("event of {} bytes too large", probe.len())));
    }
    let out = encode_wire(kind, &build(VersionString::new(kind, probe.len()).to_string()))?;
    debug_assert_eq!(out.len(), probe.len());
    Ok(out)
}

/// Wire form. Field order here is the canonical creation order; each ilk
/// uses the subset it needs.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    v: String,
    i: String,
    s: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Matter>,
    t: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<Matter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kt: Option<SigningThreshold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<Vec<Matter>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<Prefix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wr: Option<Vec<Prefix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wa: Option<Vec<Prefix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Seal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    da: Option<LocationSeal>,
}

/// One parsed unit of a framed stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Framed {
    pub message: Message,
    /// Serialized message bytes exactly as received.
    pub raw: Vec<u8>,
    pub sigs: Vec<IndexedSignature>,
    pub couplets: Vec<Couplet>,
}

impl Framed {
    pub fn event(&self) -> Option<&KeyEvent> {
        match &self.message {
            Message::Event(e) => Some(e),
            _ => None,
        }
    }
}

/// Serialized event, separator, signature count and the signatures.
pub fn frame(event_bytes: &[u8], sigs: &[IndexedSignature]) -> Result<Vec<u8>, EventError> {
    let mut out = Vec::with_capacity(event_bytes.len() + 8 + sigs.len() * 88);
    out.extend_from_slice(event_bytes);
    out.extend_from_slice(SEPARATOR);
    out.extend_from_slice(CountCode::new(CountKind::AttachedSignatures, sigs.len() as u32)?.qb64().as_bytes());
    for sig in sigs {
        out.extend_from_slice(sig.qb64().as_bytes());
    }
    Ok(out)
}

/// [`frame`] followed by a receipt couplet group.
pub fn frame_with_couplets(
    event_bytes: &[u8],
    sigs: &[IndexedSignature],
    couplets: &[Couplet],
) -> Result<Vec<u8>, EventError> {
    let mut out = frame(event_bytes, sigs)?;
    push_couplets(&mut out, couplets)?;
    Ok(out)
}

fn push_couplets(out: &mut Vec<u8>, couplets: &[Couplet]) -> Result<(), EventError> {
    out.extend_from_slice(CountCode::new(CountKind::ReceiptCouplets, couplets.len() as u32)?.qb64().as_bytes());
    for c in couplets {
        out.extend_from_slice(c.qb64().as_bytes());
    }
    Ok(())
}

/// Witness receipt message with its couplets attached.
pub fn frame_receipt(receipt: &WitnessReceipt) -> Result<Vec<u8>, EventError> {
    let mut out = receipt.serialize()?;
    out.extend_from_slice(SEPARATOR);
    push_couplets(&mut out, &receipt.couplets)?;
    Ok(out)
}

pub fn frame_validator_receipt(receipt: &ValidatorReceipt) -> Result<Vec<u8>, EventError> {
    frame(&receipt.serialize()?, &receipt.sigs)
}

/// Inverse of [`frame`] for a stream holding exactly one event.
pub fn unframe(stream: &[u8]) -> Result<(KeyEvent, Vec<IndexedSignature>), EventError> {
    let (framed, used) = parse_one(stream)?;
    if used != stream.len() {
        return Err(EventError::SizeMismatch { declared: used, actual: stream.len() });
    }
    match framed.message {
        Message::Event(e) => Ok((e, framed.sigs)),
        other => Err(EventError::MalformedBody(format!("expected a key event, found {}", other.ilk()))),
    }
}

/// Parse every framed message in `stream`.
pub fn parse_stream(stream: &[u8]) -> Result<Vec<Framed>, EventError> {
    let mut out = Vec::new();
    let mut rest = stream;
    while !rest.is_empty() {
        if rest[0].is_ascii_whitespace() {
            rest = &rest[1..];
            continue;
        }
        let (framed, used) = parse_one(rest)?;
        out.push(framed);
        rest = &rest[used..];
    }
    Ok(out)
}

fn ascii_at(stream: &[u8], at: usize) -> &str {
    let end = stream[at..].iter().position(|b| !b.is_ascii()).map_or(stream.len(), |p| at + p);
    std::str::from_utf8(&stream[at..end]).expect("ascii prefix")
}

fn read_group<T>(
    stream: &[u8],
    at: &mut usize,
    kind: CountKind,
    item: impl Fn(&str) -> Result<(T, usize), EventError>,
) -> Result<Vec<T>, EventError> {
    let text = ascii_at(stream, *at);
    let count = CountCode::parse(text, kind)?.count as usize;
    let mut pos = CountCode::LENGTH;
    let mut items = Vec::with_capacity(count);
    for found in 0..count {
        let (value, used) = item(&text[pos..]).map_err(|_| EventError::CountMismatch { declared: count, found })?;
        items.push(value);
        pos += used;
    }
    *at += pos;
    Ok(items)
}

fn parse_couplet(text: &str) -> Result<(Couplet, usize), EventError> {
    let (witness, a) = Matter::parse(text)?;
    let (sig, b) = Matter::parse(&text[a..])?;
    Ok((Couplet { witness: Prefix::new(witness)?, sig }, a + b))
}

/// Parse one framed message from the front of `stream`.
pub fn parse_one(stream: &[u8]) -> Result<(Framed, usize), EventError> {
    let version = sniff(stream)?;
    let raw = stream
        .get(..version.size)
        .ok_or(EventError::SizeMismatch { declared: version.size, actual: stream.len() })?;
    let message = Message::deserialize(raw)?;
    let mut at = version.size;
    if stream.get(at..at + SEPARATOR.len()) != Some(SEPARATOR) {
        return Err(EventError::MissingSeparator);
    }
    at += SEPARATOR.len();
    let mut sigs = Vec::new();
    let mut couplets = Vec::new();
    match message {
        Message::Receipt(_) => {
            couplets = read_group(stream, &mut at, CountKind::ReceiptCouplets, parse_couplet)?;
        }
        _ => {
            sigs = read_group(stream, &mut at, CountKind::AttachedSignatures, |t| {
                Ok(IndexedSignature::parse(t)?)
            })?;
            if stream.get(at) == Some(&b'-') {
                couplets = read_group(stream, &mut at, CountKind::ReceiptCouplets, parse_couplet)?;
            }
        }
    }
    let message = match message {
        Message::Receipt(mut r) => {
            r.couplets = couplets.clone();
            Message::Receipt(r)
        }
        Message::ValidatorReceipt(mut r) => {
            r.sigs = sigs.clone();
            Message::ValidatorReceipt(r)
        }
        m => m,
    };
    Ok((Framed { message, raw: raw.to_vec(), sigs, couplets }, at))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefix() -> Prefix {
        Prefix::from_qb64(&format!("E{}", "A".repeat(43))).unwrap()
    }

    fn key(b: u8) -> Matter {
        Matter::new("D", vec![b; 32]).unwrap()
    }

    pub(crate) fn sample_icp(kind: SerialKind) -> KeyEvent {
        KeyEvent {
            kind,
            prefix: prefix(),
            sn: 0,
            prior: None,
            body: EventBody::Inception(Inception {
                sith: SigningThreshold::Count(1),
                keys: vec![key(1)],
                next: Some(next_digest(&SigningThreshold::Count(1), &[key(2)], "E").unwrap()),
                toad: 0,
                witnesses: vec![],
                config: vec![],
                delegator: None,
            }),
        }
    }

    #[test]
    fn version_string_form() {
        let v = VersionString::new(SerialKind::Cbor, 0x1c2);
        assert_eq!(v.to_string(), "KERI10CBOR0001c2_");
        assert_eq!(VersionString::parse("KERI10CBOR0001c2_").unwrap(), v);
        assert!(VersionString::parse("KERI10CBOR0001c2").is_err());
        assert!(VersionString::parse("KERI10XXXX0001c2_").is_err());
        assert!(VersionString::parse("KERI10JSON0001C2_").is_err());
    }

    #[test]
    fn json_starts_with_version() {
        let bytes = sample_icp(SerialKind::Json).serialize().unwrap();
        assert!(bytes.starts_with(b"{\"v\":\"KERI10JSON"));
        assert_eq!(sniff(&bytes).unwrap().size, bytes.len());
        assert!(!bytes.contains(&b' '));
    }

    #[test]
    fn every_kind_round_trips() {
        for kind in [SerialKind::Json, SerialKind::Cbor, SerialKind::Mgpk] {
            let e = sample_icp(kind);
            let bytes = e.serialize().unwrap();
            assert_eq!(sniff(&bytes).unwrap().kind, kind);
            assert_eq!(KeyEvent::deserialize(&bytes).unwrap(), e);
        }
    }

    #[test]
    fn kinds_differ_in_bytes() {
        let j = sample_icp(SerialKind::Json).serialize().unwrap();
        let c = sample_icp(SerialKind::Cbor).serialize().unwrap();
        assert_ne!(j, c);
    }

    #[test]
    fn corrupted_size_is_detected() {
        let mut bytes = sample_icp(SerialKind::Json).serialize().unwrap();
        // version string sits at offset 6; size digits at 16..22
        bytes[21] = if bytes[21] == b'0' { b'1' } else { b'0' };
        assert!(matches!(KeyEvent::deserialize(&bytes), Err(EventError::SizeMismatch { .. })));
        let bytes = sample_icp(SerialKind::Json).serialize().unwrap();
        assert!(KeyEvent::deserialize(&bytes[..bytes.len() - 5]).is_err());
        assert!(matches!(KeyEvent::deserialize(&bytes[..10]), Err(EventError::BadVersionString(_))));
    }

    #[test]
    fn extracted_form() {
        let els = [Element::Text("2".into()), Element::texts(["Da".to_string(), "Db".to_string()])];
        assert_eq!(extract_serialize(&els), b"2DaDb");
        assert!(extract_serialize(&[]).is_empty());
    }

    #[test]
    fn frame_and_unframe() {
        let e = sample_icp(SerialKind::Json);
        let bytes = e.serialize().unwrap();
        let sig = IndexedSignature::new(crate::matter::SigScheme::Ed25519, 0, vec![5u8; 64]).unwrap();
        let framed = frame(&bytes, std::slice::from_ref(&sig)).unwrap();
        let text = String::from_utf8(framed.clone()).unwrap();
        assert!(text.contains("\r\n\r\n-AAB"));
        let (back, sigs) = unframe(&framed).unwrap();
        assert_eq!(back, e);
        assert_eq!(sigs, vec![sig]);
        let empty = frame(&bytes, &[]).unwrap();
        assert!(String::from_utf8(empty.clone()).unwrap().ends_with("-AAA"));
        assert_eq!(unframe(&empty).unwrap().1, vec![]);
    }

    #[test]
    fn frame_errors() {
        let bytes = sample_icp(SerialKind::Json).serialize().unwrap();
        let mut no_sep = bytes.clone();
        no_sep.extend_from_slice(b"-AAA");
        assert_eq!(unframe(&no_sep), Err(EventError::MissingSeparator));
        let mut short = frame(&bytes, &[]).unwrap();
        short.truncate(short.len() - 1);
        short.extend_from_slice(b"B");
        assert_eq!(unframe(&short), Err(EventError::CountMismatch { declared: 1, found: 0 }));
    }

    #[test]
    fn seals_round_trip_untagged() {
        let seals = vec![
            Seal::Digest(DigestSeal { d: crypto::digest("E", b"x").unwrap() }),
            Seal::Root(RootSeal { rd: crypto::digest("E", b"y").unwrap() }),
            Seal::Event(EventSeal { prefix: prefix(), sn: 3, digest: crypto::digest("E", b"z").unwrap() }),
            Seal::Location(LocationSeal {
                prefix: prefix(),
                sn: 4,
                ilk: "ixn".into(),
                prior: crypto::digest("E", b"w").unwrap(),
            }),
        ];
        for kind in [SerialKind::Json, SerialKind::Cbor, SerialKind::Mgpk] {
            let e = KeyEvent {
                kind,
                prefix: prefix(),
                sn: 1,
                prior: Some(crypto::digest("E", b"p").unwrap()),
                body: EventBody::Interaction { seals: seals.clone() },
            };
            assert_eq!(KeyEvent::deserialize(&e.serialize().unwrap()).unwrap(), e);
        }
    }
}
