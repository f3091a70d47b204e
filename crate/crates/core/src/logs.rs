//! Event logs: the receipted key event log (KERL) of first-seen events,
//! the duplicitous event log (DEL), export/import in framed text form and
//! replay verification.
//!
//! Every mutation is recorded as an entry in an append-only journal. The
//! trunk and disputed views are derived from the key state engine, which
//! is fed in journal order.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::Serialize;

use crate::crypto;
use crate::engine::{verify_inception, verify_next, Disposition, Engine, EscrowConfig, KeyState, Report, EVENT_DIGEST};
use crate::error::{EventError, LogError};
use crate::event::{self, Couplet, Framed, Ilk, KeyEvent, Message, ValidatorReceipt, WitnessReceipt};
use crate::identifier::Prefix;
use crate::matter::{IndexedSignature, Matter};

/// Source of first-seen timestamps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clock {
    System,
    /// Deterministic: one microsecond per tick after the given instant.
    Logical { start: DateTime<Utc>, ticks: i64 },
}

impl Clock {
    pub fn logical() -> Self {
        Clock::Logical { start: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(), ticks: 0 }
    }

    fn now(&mut self) -> String {
        let t = match self {
            Clock::System => Utc::now(),
            Clock::Logical { start, ticks } => {
                *ticks += 1;
                *start + Duration::microseconds(*ticks)
            }
        };
        t.format("%Y-%m-%dT%H:%M:%S%.6f+00:00").to_string()
    }
}

#[derive(Debug, Clone)]
pub struct LogConfig {
    pub clock: Clock,
    /// Hold receipts for events not yet seen instead of failing.
    pub receipt_escrow: bool,
    /// This store belongs to a validator acting as its own witness (direct
    /// mode): its own acceptance counts as one receipt.
    pub ersatz_witness: bool,
    pub escrow: EscrowConfig,
}

impl Default for LogConfig {
    fn default() -> Self {
        Self { clock: Clock::System, receipt_escrow: false, ersatz_witness: false, escrow: EscrowConfig::default() }
    }
}

/// One stored version of an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventVersion {
    pub raw: Vec<u8>,
    pub digest: Matter,
    pub sigs: Vec<IndexedSignature>,
}

/// A witness receipt that does not match the stored event it names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InconsistentReceipt {
    pub prefix: Prefix,
    pub sn: u64,
    pub digest: Matter,
    pub couplet: Couplet,
}

/// Duplicitous event log.
#[derive(Debug, Clone, Default)]
pub struct Del {
    /// Two or more verifiable versions per location.
    pub events: BTreeMap<(Prefix, u64), Vec<EventVersion>>,
    /// Inconsistent receipts per witness.
    pub receipts: BTreeMap<Prefix, Vec<InconsistentReceipt>>,
}

impl Del {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.receipts.is_empty()
    }

    fn add_version(&mut self, prefix: &Prefix, sn: u64, v: EventVersion) {
        let versions = self.events.entry((prefix.clone(), sn)).or_default();
        if !versions.iter().any(|x| x.digest == v.digest) {
            versions.push(v);
        }
    }
}

/// A disputed event with its accountability label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisputedRecord {
    pub prefix: Prefix,
    pub sn: u64,
    pub ilk: Ilk,
    pub digest: Matter,
    pub receipts: usize,
    pub accountable: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
enum Entry {
    Event { prefix: String, sn: u64, digest: String, first_seen: String, framed: String, disposition: String },
    Couplet { digest: String, couplet: String },
    ValidatorReceipt { digest: String, framed: String },
    Duplicity { prefix: String, sn: u64, digest: String },
    InconsistentReceipt { prefix: String, sn: u64, digest: String, couplet: String },
    Accountability { digest: String, receipts: usize, accountable: bool },
}

/// Plain-file layout: one directory per prefix holding write-once event
/// files named by fixed-width hex sn and digest, plus a journal file
/// recording ingestion order.
#[derive(Debug, Clone)]
struct DirBackend {
    root: PathBuf,
}

impl DirBackend {
    fn event_path(&self, prefix: &Prefix, sn: u64, digest: &Matter) -> PathBuf {
        self.root.join(prefix.qb64()).join(format!("{sn:016x}.{}", digest.qb64()))
    }

    fn journal(&self) -> PathBuf {
        self.root.join("journal")
    }

    fn append_line(&self, line: &str) -> Result<(), LogError> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.journal())?;
        writeln!(f, "{line}")?;
        f.sync_data()?;
        Ok(())
    }

    fn write_event(&self, prefix: &Prefix, sn: u64, digest: &Matter, framed: &[u8], first_seen: &str) -> Result<(), LogError> {
        let path = self.event_path(prefix, sn, digest);
        fs::create_dir_all(path.parent().expect("has parent"))?;
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path)?;
        f.write_all(framed)?;
        f.sync_data()?;
        self.append_line(&format!("evt {} {sn:016x} {} {first_seen}", prefix.qb64(), digest.qb64()))
    }
}

#[derive(Debug, Clone)]
pub struct Kerl {
    engine: Engine,
    config: LogConfig,
    journal: Vec<Entry>,
    first_seen: BTreeMap<Matter, String>,
    couplets: BTreeMap<Matter, Vec<Couplet>>,
    validator_receipts: BTreeMap<Matter, Vec<ValidatorReceipt>>,
    accountable: BTreeMap<Matter, (usize, bool)>,
    pending_receipts: Vec<WitnessReceipt>,
    del: Del,
    backend: Option<DirBackend>,
    /// First-seen time to reuse while replaying a stored journal.
    replay_time: Option<String>,
}

impl Default for Kerl {
    fn default() -> Self {
        Self::with_config(LogConfig::default())
    }
}

/// Result of importing a framed stream.
#[derive(Debug, Default)]
pub struct ImportOutcome {
    pub reports: Vec<Report>,
    pub receipts: usize,
    /// Parse failure that stopped the import, if any.
    pub error: Option<EventError>,
}

impl Kerl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_config(config: LogConfig) -> Self {
        Self {
            engine: Engine::with_escrow(config.escrow),
            config,
            journal: Vec::new(),
            first_seen: BTreeMap::new(),
            couplets: BTreeMap::new(),
            validator_receipts: BTreeMap::new(),
            accountable: BTreeMap::new(),
            pending_receipts: Vec::new(),
            del: Del::default(),
            backend: None,
            replay_time: None,
        }
    }

    /// Open or create a directory-backed store, replaying whatever it
    /// already holds. Any stored event that no longer verifies is an error.
    pub fn open(dir: impl AsRef<Path>, config: LogConfig) -> Result<Self, LogError> {
        let root = dir.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let mut store = Self::with_config(config);
        let backend = DirBackend { root };
        if backend.journal().exists() {
            let text = fs::read_to_string(backend.journal())?;
            for line in text.lines().filter(|l| !l.is_empty()) {
                store.replay_line(&backend, line)?;
            }
        }
        store.backend = Some(backend);
        Ok(store)
    }

    fn replay_line(&mut self, backend: &DirBackend, line: &str) -> Result<(), LogError> {
        let parts: Vec<&str> = line.split(' ').collect();
        let corrupt = |prefix: &str, sn: &str, reason: String| LogError::CorruptLog {
            prefix: prefix.to_string(),
            sn: u64::from_str_radix(sn, 16).unwrap_or(0),
            reason,
        };
        match parts.as_slice() {
            ["evt", prefix, sn, digest, first_seen] => {
                let path = backend.root.join(prefix).join(format!("{sn}.{digest}"));
                let bytes = fs::read(&path)?;
                let (event, sigs) = event::unframe(&bytes).map_err(|e| corrupt(prefix, sn, e.to_string()))?;
                let got = event.digest(EVENT_DIGEST).map_err(|e| corrupt(prefix, sn, e.to_string()))?;
                if got.qb64() != *digest {
                    return Err(corrupt(prefix, sn, "stored event does not match its digest".into()));
                }
                self.replay_time = Some(first_seen.to_string());
                let reports = self.append(&event, &sigs)?;
                if !reports[0].disposition.accepted() {
                    return Err(corrupt(prefix, sn, format!("stored event {}", reports[0].disposition)));
                }
                Ok(())
            }
            ["rct", prefix, sn, digest, couplet] => {
                let (m, used) = Matter::parse(couplet).map_err(|e| corrupt(prefix, sn, e.to_string()))?;
                let sig = Matter::from_qb64(&couplet[used..]).map_err(|e| corrupt(prefix, sn, e.to_string()))?;
                let witness = Prefix::new(m).map_err(|e| corrupt(prefix, sn, e.to_string()))?;
                let receipt = WitnessReceipt {
                    kind: Default::default(),
                    prefix: Prefix::from_qb64(prefix).map_err(|e| corrupt(prefix, sn, e.to_string()))?,
                    sn: u64::from_str_radix(sn, 16).map_err(|e| corrupt(prefix, sn, e.to_string()))?,
                    digest: Matter::from_qb64(digest).map_err(|e| corrupt(prefix, sn, e.to_string()))?,
                    couplets: vec![Couplet { witness, sig }],
                };
                self.ingest_receipt(&receipt)?;
                Ok(())
            }
            _ => Err(LogError::CorruptLog { prefix: String::new(), sn: 0, reason: format!("bad journal line {line:?}") }),
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn state(&self, prefix: &Prefix) -> Option<&KeyState> {
        self.engine.state(prefix)
    }

    pub fn del(&self) -> &Del {
        &self.del
    }

    pub fn first_seen(&self, digest: &Matter) -> Option<&str> {
        self.first_seen.get(digest).map(String::as_str)
    }

    pub fn couplets(&self, digest: &Matter) -> &[Couplet] {
        self.couplets.get(digest).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn validator_receipts(&self, digest: &Matter) -> &[ValidatorReceipt] {
        self.validator_receipts.get(digest).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn journal_len(&self) -> usize {
        self.journal.len()
    }

    /// Digest over the first `n` journal entries.
    pub fn journal_digest(&self, n: usize) -> Matter {
        let mut data = Vec::new();
        for e in &self.journal[..n.min(self.journal.len())] {
            data.extend(serde_json::to_vec(e).expect("entry serializes"));
            data.push(b'\n');
        }
        crypto::digest(EVENT_DIGEST, &data).expect("registered digest")
    }

    fn push(&mut self, entry: Entry) {
        self.journal.push(entry);
    }

    /// Verify and store an event under the first-seen rule.
    pub fn append(&mut self, event: &KeyEvent, sigs: &[IndexedSignature]) -> Result<Vec<Report>, LogError> {
        let reports = self.engine.process(event, sigs);
        for report in &reports {
            match &report.disposition {
                Disposition::AcceptedFirstSeen | Disposition::SupersedingRecovery { .. } => {
                    self.record_accepted(report)?;
                }
                Disposition::Duplicitous => self.record_duplicity(report, event, sigs)?,
                _ => {}
            }
        }
        if reports.iter().any(|r| r.disposition.accepted()) {
            self.retry_pending()?;
        }
        Ok(reports)
    }

    fn record_accepted(&mut self, report: &Report) -> Result<(), LogError> {
        let kever = self.engine.kever(&report.prefix).expect("accepted event has a log");
        let rec = &kever.trunk[report.sn as usize];
        let framed = event::frame(&rec.raw, &rec.sigs)?;
        let first_seen = match self.replay_time.take() {
            Some(t) => t,
            None => self.config.clock.now(),
        };
        if let Some(b) = &self.backend {
            b.write_event(&report.prefix, report.sn, &report.digest, &framed, &first_seen)?;
        }
        self.first_seen.insert(report.digest.clone(), first_seen.clone());
        self.push(Entry::Event {
            prefix: report.prefix.qb64(),
            sn: report.sn,
            digest: report.digest.qb64(),
            first_seen,
            framed: String::from_utf8_lossy(&framed).into_owned(),
            disposition: report.disposition.to_string(),
        });
        if let Disposition::SupersedingRecovery { .. } = report.disposition {
            self.label_disputed(&report.prefix);
        }
        Ok(())
    }

    /// Accountability of freshly disputed events, fixed now from the
    /// receipts present.
    fn label_disputed(&mut self, prefix: &Prefix) {
        let kever = self.engine.kever(prefix).expect("log exists");
        let branch = kever.disputed.last().expect("branch just created");
        let mut labels = Vec::new();
        for a in &branch.events {
            let mut receipts = self.couplets(&a.digest).len() + self.validator_receipts(&a.digest).len();
            if self.config.ersatz_witness {
                receipts += 1;
            }
            let threshold = a.state.toad.max(1) as usize;
            labels.push((a.digest.clone(), receipts, receipts >= threshold));
        }
        for (digest, receipts, accountable) in labels {
            self.accountable.insert(digest.clone(), (receipts, accountable));
            self.push(Entry::Accountability { digest: digest.qb64(), receipts, accountable });
        }
    }

    fn record_duplicity(&mut self, report: &Report, event: &KeyEvent, sigs: &[IndexedSignature]) -> Result<(), LogError> {
        let kever = self.engine.kever(&report.prefix).expect("log exists");
        let first = &kever.trunk[report.sn as usize];
        let original = EventVersion { raw: first.raw.clone(), digest: first.digest.clone(), sigs: first.sigs.clone() };
        let alternate = EventVersion { raw: event.serialize()?, digest: report.digest.clone(), sigs: sigs.to_vec() };
        self.del.add_version(&report.prefix, report.sn, original);
        self.del.add_version(&report.prefix, report.sn, alternate);
        self.push(Entry::Duplicity { prefix: report.prefix.qb64(), sn: report.sn, digest: report.digest.qb64() });
        Ok(())
    }

    /// Stored event at a location, trunk first, then disputed branches.
    fn find(&self, prefix: &Prefix, sn: u64, digest: &Matter) -> Option<(&crate::engine::Accepted, Option<&KeyState>)> {
        let kever = self.engine.kever(prefix)?;
        let prev = |k: u64| k.checked_sub(1).and_then(|p| kever.trunk.get(p as usize)).map(|a| &a.state);
        if let Some(a) = kever.trunk.get(sn as usize).filter(|a| &a.digest == digest) {
            return Some((a, prev(sn)));
        }
        kever.disputed.iter().flat_map(|b| &b.events).find(|a| &a.digest == digest).map(|a| (a, prev(sn)))
    }

    /// Add verified couplets from a witness receipt. Returns the couplet
    /// count now held for the event.
    pub fn ingest_receipt(&mut self, receipt: &WitnessReceipt) -> Result<usize, LogError> {
        let Some((rec, before)) = self.find(&receipt.prefix, receipt.sn, &receipt.digest) else {
            let known_location = self
                .engine
                .kever(&receipt.prefix)
                .is_some_and(|k| k.trunk.len() as u64 > receipt.sn);
            if known_location {
                return self.inconsistent_receipt(receipt);
            }
            if self.config.receipt_escrow {
                if !self.pending_receipts.contains(receipt) {
                    self.pending_receipts.push(receipt.clone());
                }
                return Ok(0);
            }
            return Err(LogError::UnknownEvent { prefix: receipt.prefix.qb64(), sn: receipt.sn });
        };
        // designated witnesses: those of the event, plus those it pruned
        let mut designated = rec.state.witnesses.clone();
        if let Some(b) = before {
            designated.extend(b.witnesses.iter().cloned());
        }
        let raw = rec.raw.clone();
        let digest = rec.digest.clone();
        let mut added = Vec::new();
        for c in &receipt.couplets {
            let held = self.couplets.get(&digest).is_some_and(|v| v.iter().any(|x| x.witness == c.witness));
            if designated.contains(&c.witness) && !held && !added.iter().any(|x: &Couplet| x.witness == c.witness) && c.verify(&raw) {
                added.push(c.clone());
            }
        }
        for c in added {
            if let Some(b) = &self.backend {
                b.append_line(&format!("rct {} {:016x} {} {}", receipt.prefix.qb64(), receipt.sn, digest.qb64(), c.qb64()))?;
            }
            self.push(Entry::Couplet { digest: digest.qb64(), couplet: c.qb64() });
            self.couplets.entry(digest.clone()).or_default().push(c);
        }
        Ok(self.couplets(&digest).len())
    }

    fn inconsistent_receipt(&mut self, receipt: &WitnessReceipt) -> Result<usize, LogError> {
        for c in &receipt.couplets {
            let entry = InconsistentReceipt {
                prefix: receipt.prefix.clone(),
                sn: receipt.sn,
                digest: receipt.digest.clone(),
                couplet: c.clone(),
            };
            let list = self.del.receipts.entry(c.witness.clone()).or_default();
            if !list.contains(&entry) {
                list.push(entry);
                self.journal.push(Entry::InconsistentReceipt {
                    prefix: receipt.prefix.qb64(),
                    sn: receipt.sn,
                    digest: receipt.digest.qb64(),
                    couplet: c.qb64(),
                });
            }
        }
        let kever = self.engine.kever(&receipt.prefix).expect("known location");
        Ok(self.couplets(&kever.trunk[receipt.sn as usize].digest).len())
    }

    fn retry_pending(&mut self) -> Result<(), LogError> {
        let pending = std::mem::take(&mut self.pending_receipts);
        for r in pending {
            let ready = self.find(&r.prefix, r.sn, &r.digest).is_some()
                || self.engine.kever(&r.prefix).is_some_and(|k| k.trunk.len() as u64 > r.sn);
            if ready {
                self.ingest_receipt(&r)?;
            } else {
                self.pending_receipts.push(r);
            }
        }
        Ok(())
    }

    /// Store a validator receipt after checking its signatures against the
    /// validator's establishment event named by the seal. Returns the
    /// number of validator receipts held for the event.
    pub fn ingest_validator_receipt(&mut self, receipt: &ValidatorReceipt) -> Result<usize, LogError> {
        let unknown = || LogError::UnknownEvent { prefix: receipt.prefix.qb64(), sn: receipt.sn };
        let (rec, _) = self.find(&receipt.prefix, receipt.sn, &receipt.digest).ok_or_else(unknown)?;
        let raw = rec.raw.clone();
        let digest = rec.digest.clone();
        let seal = &receipt.seal;
        let validator = self
            .engine
            .kever(&seal.prefix)
            .and_then(|k| k.trunk.get(seal.sn as usize))
            .filter(|a| a.digest == seal.digest && a.event.is_establishment())
            .ok_or_else(|| LogError::UnknownEvent { prefix: seal.prefix.qb64(), sn: seal.sn })?;
        let keys = &validator.state.keys;
        let verified: Vec<usize> = receipt
            .sigs
            .iter()
            .filter(|s| crypto::verify_indexed(keys, &raw, s))
            .map(|s| s.index() as usize)
            .collect();
        let ok = verified.len() == receipt.sigs.len()
            && validator.state.sith.satisfies(keys.len(), verified).unwrap_or(false);
        let list = self.validator_receipts.entry(digest.clone()).or_default();
        if ok && !list.iter().any(|r| r.seal.prefix == seal.prefix) {
            list.push(receipt.clone());
            let framed = event::frame_validator_receipt(receipt)?;
            self.push(Entry::ValidatorReceipt { digest: digest.qb64(), framed: String::from_utf8_lossy(&framed).into_owned() });
        }
        Ok(self.validator_receipts(&digest).len())
    }

    /// Disputed events of `prefix` with accountability labels.
    pub fn disputed(&self, prefix: &Prefix) -> Vec<DisputedRecord> {
        let Some(kever) = self.engine.kever(prefix) else { return vec![] };
        kever
            .disputed
            .iter()
            .flat_map(|b| &b.events)
            .map(|a| {
                let (receipts, accountable) = self.accountable.get(&a.digest).copied().unwrap_or((0, false));
                DisputedRecord { prefix: prefix.clone(), sn: a.event.sn, ilk: a.event.ilk(), digest: a.digest.clone(), receipts, accountable }
            })
            .collect()
    }

    /// Trunk events of `prefix` with controller signatures and receipt
    /// couplets, as a framed stream.
    pub fn export(&self, prefix: &Prefix) -> Result<Vec<u8>, LogError> {
        let kever = self.engine.kever(prefix).ok_or_else(|| LogError::UnknownPrefix(prefix.qb64()))?;
        let mut out = Vec::new();
        for a in &kever.trunk {
            out.extend(event::frame_with_couplets(&a.raw, &a.sigs, self.couplets(&a.digest))?);
        }
        Ok(out)
    }

    /// Re-verify and store everything in a framed stream. Stops at the
    /// first unparseable message; earlier messages stay imported.
    pub fn import(&mut self, stream: &[u8]) -> Result<ImportOutcome, LogError> {
        let mut outcome = ImportOutcome::default();
        let mut rest = stream;
        while let Some(start) = rest.iter().position(|b| !b.is_ascii_whitespace()) {
            rest = &rest[start..];
            let (framed, used) = match event::parse_one(rest) {
                Ok(v) => v,
                Err(e) => {
                    outcome.error = Some(e);
                    break;
                }
            };
            rest = &rest[used..];
            self.ingest_framed(framed, &mut outcome)?;
        }
        Ok(outcome)
    }

    fn ingest_framed(&mut self, framed: Framed, outcome: &mut ImportOutcome) -> Result<(), LogError> {
        match framed.message {
            Message::Event(e) => {
                let reports = self.append(&e, &framed.sigs)?;
                if !framed.couplets.is_empty() {
                    let receipt = WitnessReceipt {
                        kind: e.kind,
                        prefix: e.prefix.clone(),
                        sn: e.sn,
                        digest: reports[0].digest.clone(),
                        couplets: framed.couplets,
                    };
                    if self.find(&e.prefix, e.sn, &receipt.digest).is_some() {
                        outcome.receipts += receipt.couplets.len();
                        self.ingest_receipt(&receipt)?;
                    }
                }
                outcome.reports.extend(reports);
            }
            Message::Receipt(r) => {
                outcome.receipts += r.couplets.len();
                match self.ingest_receipt(&r) {
                    Ok(_) | Err(LogError::UnknownEvent { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            Message::ValidatorReceipt(r) => match self.ingest_validator_receipt(&r) {
                Ok(_) | Err(LogError::UnknownEvent { .. }) => {}
                Err(e) => return Err(e),
            },
        }
        Ok(())
    }

    /// Rebuild key state for `prefix` from the stored events alone and
    /// check it equals the live state.
    pub fn replay_verify(&self, prefix: &Prefix) -> Result<KeyState, LogError> {
        let live = self.state(prefix).ok_or_else(|| LogError::UnknownPrefix(prefix.qb64()))?;
        let mut engine = Engine::new();
        for entry in &self.journal {
            let Entry::Event { prefix: p, sn, framed, .. } = entry else { continue };
            let corrupt = |reason: String| LogError::CorruptLog { prefix: p.clone(), sn: *sn, reason };
            let (event, sigs) = event::unframe(framed.as_bytes()).map_err(|e| corrupt(e.to_string()))?;
            let d = engine.process_one(&event, &sigs);
            if !d.accepted() {
                return Err(corrupt(format!("stored event {d}")));
            }
        }
        let replayed = engine.state(prefix).cloned().ok_or_else(|| LogError::UnknownPrefix(prefix.qb64()))?;
        if &replayed != live {
            return Err(LogError::CorruptLog { prefix: prefix.qb64(), sn: live.sn, reason: "replayed state differs".into() });
        }
        Ok(replayed)
    }

    /// Whether every stored duplicity proof re-verifies: each version
    /// parses, sits at the recorded location, verifies against the key
    /// state before it, and the versions differ.
    pub fn verify_del(&self) -> bool {
        self.del.events.iter().all(|((prefix, sn), versions)| {
            let Some(kever) = self.engine.kever(prefix) else { return false };
            let before = sn.checked_sub(1).map(|k| &kever.trunk[k as usize].state);
            let distinct = versions.iter().map(|v| &v.digest).collect::<std::collections::BTreeSet<_>>().len();
            versions.len() >= 2
                && distinct == versions.len()
                && versions.iter().all(|v| {
                    let Ok(e) = KeyEvent::deserialize(&v.raw) else { return false };
                    let verified = match before {
                        None => verify_inception(&e, &v.raw, &v.sigs).is_ok(),
                        Some(s) => verify_next(s, &e, &v.raw, &v.sigs).is_ok(),
                    };
                    &e.prefix == prefix && e.sn == *sn && verified
                })
        })
    }

    #[cfg(test)]
    fn tamper_event(&mut self, index: usize, byte: usize) {
        let mut seen = 0;
        for entry in &mut self.journal {
            if let Entry::Event { framed, .. } = entry {
                if seen == index {
                    let mut bytes = framed.clone().into_bytes();
                    bytes[byte] ^= 0x01;
                    *framed = String::from_utf8(bytes).expect("ascii flip");
                    return;
                }
                seen += 1;
            }
        }
    }
}

/// Read every framed message in a file.
pub fn read_framed(path: &Path) -> Result<Vec<Framed>, LogError> {
    let mut bytes = Vec::new();
    std::io::Read::read_to_end(&mut File::open(path)?, &mut bytes)?;
    Ok(event::parse_stream(&bytes)?)
}
