//! Keystore directory: one JSON record per alias holding seed material
//! and key history, plus the alias's KEL as a framed-text file.
//!
//! Seeds are stored qualified: `0A` seeds (16 bytes) are stretched to an
//! Ed25519 seed with Argon2id under fixed public parameters, `A` seeds
//! (32 bytes) are used as is.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use argon2::{Algorithm, Argon2, Params, Version};
use keri_core::controller::{Controller, SignedEvent};
use keri_core::crypto::{self, Signer};
use keri_core::engine::EVENT_DIGEST;
use keri_core::logs::Kerl;
use keri_core::matter::codes;
use keri_core::{Matter, SerialKind, SigningThreshold};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ARGON2_MEMORY_KIB: u32 = 4096;
pub const ARGON2_PASSES: u32 = 3;
pub const ARGON2_LANES: u32 = 1;
pub const ARGON2_SALT: &[u8] = b"keri-seed-stretch";

/// Stretch a 128-bit seed to an Ed25519 seed.
pub fn stretch(seed: &[u8]) -> Result<[u8; 32], CliError> {
    let params = Params::new(ARGON2_MEMORY_KIB, ARGON2_PASSES, ARGON2_LANES, Some(32))
        .map_err(|e| CliError::Keystore(format!("argon2 parameters: {e}")))?;
    let mut out = [0u8; 32];
    Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
        .hash_password_into(seed, ARGON2_SALT, &mut out)
        .map_err(|e| CliError::Keystore(format!("argon2: {e}")))?;
    Ok(out)
}

pub fn signer_from(seed: &Matter) -> Result<Signer, CliError> {
    match seed.code() {
        codes::SALT_128 => Ok(Signer::from_seed(stretch(seed.raw())?, true)),
        codes::ED25519_SEED => Ok(Signer::from_qualified_seed(seed, true)?),
        other => Err(CliError::Keystore(format!("unsupported seed code {other}"))),
    }
}

/// Where new seeds come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySource {
    Random,
    /// Derived from alias and a counter; for reproducible test vectors.
    Counter,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Establishment {
    pub sn: u64,
    /// Position of the first key of this establishment in the key sequence.
    pub first_index: u64,
    pub keys: Vec<Matter>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Record {
    pub alias: String,
    pub prefix: String,
    /// Serialization token, e.g. `JSON`.
    pub kind: String,
    pub current: Vec<Matter>,
    pub next: Vec<Matter>,
    pub next_sith: u64,
    pub delegator: Option<String>,
    pub counter: u64,
    pub history: Vec<Establishment>,
}

pub struct Keystore {
    dir: PathBuf,
    source: KeySource,
}

impl Keystore {
    pub fn open(dir: &Path, source: KeySource) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), source })
    }

    fn record_path(&self, alias: &str) -> PathBuf {
        self.dir.join(format!("{alias}.json"))
    }

    pub fn kel_path(&self, alias: &str) -> PathBuf {
        self.dir.join(format!("{alias}.kel"))
    }

    pub fn exists(&self, alias: &str) -> bool {
        self.record_path(alias).exists()
    }

    pub fn load(&self, alias: &str) -> Result<Record, CliError> {
        let path = self.record_path(alias);
        if !path.exists() {
            return Err(CliError::AliasMissing(alias.into()));
        }
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Keystore(format!("record {alias}: {e}")))
    }

    pub fn save(&self, record: &Record) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(record).map_err(|e| CliError::Keystore(e.to_string()))?;
        let tmp = self.dir.join(format!(".{}.json.tmp", record.alias));
        let mut opts = OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        std::os::unix::fs::OpenOptionsExt::mode(&mut opts, 0o600);
        let mut f = opts.open(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(tmp, self.record_path(&record.alias))?;
        Ok(())
    }

    /// Fresh `0A` seed for `alias`, advancing its counter.
    pub fn new_seed(&self, alias: &str, counter: &mut u64) -> Matter {
        let mut raw = [0u8; 16];
        match self.source {
            KeySource::Random => rand::rngs::OsRng.fill_bytes(&mut raw),
            KeySource::Counter => {
                let input = format!("keri-test-key/{alias}/{counter}");
                let d = crypto::digest(EVENT_DIGEST, input.as_bytes()).expect("registered digest");
                raw.copy_from_slice(&d.raw()[..16]);
            }
        }
        *counter += 1;
        Matter::new(codes::SALT_128, raw.to_vec()).expect("16 byte seed")
    }

    pub fn new_seeds(&self, alias: &str, counter: &mut u64, n: usize) -> Vec<Matter> {
        (0..n).map(|_| self.new_seed(alias, counter)).collect()
    }

    pub fn append_kel(&self, alias: &str, event: &SignedEvent) -> Result<(), CliError> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.kel_path(alias))?;
        f.write_all(&event.framed()?)?;
        f.write_all(b"\n")?;
        f.sync_data()?;
        Ok(())
    }

    /// Import the KEL of `alias`, preceded by its delegators', into `kerl`.
    pub fn import_chain(&self, alias: &str, kerl: &mut Kerl) -> Result<(), CliError> {
        let record = self.load(alias)?;
        if let Some(parent) = &record.delegator {
            self.import_chain(parent, kerl)?;
        }
        let bytes = fs::read(self.kel_path(alias))?;
        let outcome = kerl.import(&bytes)?;
        if let Some(e) = outcome.error {
            return Err(CliError::Parse(format!("{}: {e}", self.kel_path(alias).display())));
        }
        Ok(())
    }

    /// Rebuild the controller for `alias` from its stored keys and the
    /// verified state of its log.
    pub fn controller(&self, record: &Record) -> Result<Controller, CliError> {
        let mut kerl = Kerl::new();
        self.import_chain(&record.alias, &mut kerl)?;
        let prefix = keri_core::Prefix::from_qb64(&record.prefix)?;
        let state = kerl
            .state(&prefix)
            .cloned()
            .ok_or_else(|| CliError::Verify(format!("log of {} does not verify", record.alias)))?;
        let signers = record.current.iter().map(signer_from).collect::<Result<Vec<_>, _>>()?;
        let next = record.next.iter().map(signer_from).collect::<Result<Vec<_>, _>>()?;
        let kind = SerialKind::from_token(&record.kind)?;
        Ok(Controller::resume(signers, next, SigningThreshold::Count(record.next_sith), state, kind)?)
    }
}

/// Record the establishment in `ctl`'s current state.
pub fn note_establishment(record: &mut Record, ctl: &Controller) {
    let state = ctl.state();
    record.history.push(Establishment { sn: state.sn, first_index: state.first_key_index, keys: state.keys.clone() });
}
