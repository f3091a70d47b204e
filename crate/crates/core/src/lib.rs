//! Key event receipt infrastructure kernel: qualified material codec,
//! self-certifying prefixes, key events, the key state engine, event
//! logs, agreement calculus and a deterministic network simulator.

pub mod controller;
pub mod crypto;
pub mod engine;
pub mod error;
pub mod event;
pub mod identifier;
pub mod kace;
pub mod logs;
pub mod matter;
pub mod netsim;
pub mod threshold;

pub use error::{EventError, IdentifierError, LogError, MatterError, Rejection, SimError, ThresholdError};
pub use event::{KeyEvent, SerialKind};
pub use identifier::Prefix;
pub use matter::{IndexedSignature, Matter};
pub use threshold::SigningThreshold;
