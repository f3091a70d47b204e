use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatterError {
    #[error("unknown derivation code {0:?}")]
    UnknownCode(String),
    #[error("unknown selector character {0:?}")]
    UnknownSelector(char),
    #[error("raw material has {actual} bytes, code requires {expected}")]
    RawLengthMismatch { expected: usize, actual: usize },
    #[error("input truncated")]
    Truncated,
    #[error("non-Base64 character {0:?}")]
    NonBase64(char),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-canonical Base64 encoding")]
    NonCanonical,
    #[error("signature index {0} out of range")]
    IndexOutOfRange(u32),
    #[error("unknown signature scheme {0:?}")]
    UnknownScheme(String),
    #[error("count {0} out of range")]
    CountOutOfRange(u32),
    #[error("binary domain count codes are not supported in text streams")]
    UnsupportedDomain,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThresholdError {
    #[error("signer index {index} out of range for {keys} keys")]
    IndexOutOfRange { index: usize, keys: usize },
    #[error("invalid threshold: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentifierError {
    #[error("material with code {0} is not a signing key")]
    NotASigningKey(String),
    #[error("code {0} is not a registered digest code")]
    UnregisteredDigestCode(String),
    #[error("private key does not match the seed's public key")]
    KeyMismatch,
    #[error("self-signing derivation requires exactly one key")]
    NotSingleKey,
    #[error("invalid inception seed: {0}")]
    InvalidSeed(String),
    #[error("code {0} cannot form an identifier prefix")]
    NotAPrefix(String),
    #[error(transparent)]
    Matter(#[from] MatterError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("bad version string: {0}")]
    BadVersionString(String),
    #[error("declared size {declared} but {actual} bytes available")]
    SizeMismatch { declared: usize, actual: usize },
    #[error("malformed event body: {0}")]
    MalformedBody(String),
    #[error("unknown serialization kind {0:?}")]
    UnknownKind(String),
    #[error("field {field} missing for ilk {ilk}")]
    FieldMissing { ilk: &'static str, field: &'static str },
    #[error("missing CRLF CRLF separator after event")]
    MissingSeparator,
    #[error("count code declares {declared} attachments but stream holds {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error(transparent)]
    Matter(#[from] MatterError),
    #[error(transparent)]
    Identifier(#[from] IdentifierError),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
    #[error("no event at {prefix} sn {sn}")]
    UnknownEvent { prefix: String, sn: u64 },
    #[error("no log for prefix {0}")]
    UnknownPrefix(String),
    #[error("corrupt log for {prefix} at sn {sn}: {reason}")]
    CorruptLog { prefix: String, sn: u64, reason: String },
    #[error(transparent)]
    Event(#[from] EventError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid script at line {line}: {reason}")]
    ScriptInvalid { line: usize, reason: String },
    #[error("scenario failed: {0}")]
    Failed(String),
}

/// Why the key state engine refused an event.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("event could not be serialized: {0}")]
    Malformed(String),
    #[error("a signature does not verify")]
    BadSignature,
    #[error("verified signatures do not meet the signing threshold")]
    ThresholdUnmet,
    #[error("keys do not match the committed next-key digest")]
    PreRotationMismatch,
    #[error("prior event digest does not match")]
    PriorDigestMismatch,
    #[error("identifier only allows establishment events")]
    EstOnlyViolation,
    #[error("identifier has been abandoned")]
    AbandonedIdentifier,
    #[error("event extends a disputed branch")]
    DisputedBranch,
    #[error("delegating event not found")]
    DelegatingEventNotFound,
    #[error("delegating event does not seal this event")]
    SealMismatch,
    #[error("delegator keys were not rotated after the superseded delegation")]
    StaleDelegatorAuthority,
    #[error("delegation does not match the identifier")]
    DelegationMismatch,
    #[error("prefix does not match its inception data")]
    InvalidPrefix,
    #[error("invalid inception: {0}")]
    InvalidInception(String),
    #[error("invalid signing threshold: {0}")]
    InvalidThreshold(String),
    #[error("invalid witness change: {0}")]
    WitnessSet(String),
    #[error("first event of a prefix must be an inception")]
    NotInception,
}
