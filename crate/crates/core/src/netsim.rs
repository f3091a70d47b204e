//! Deterministic in-memory simulation of controllers, witnesses and
//! validators.
//!
//! Every node owns a [`Kerl`] with a logical clock, keys come from a
//! ChaCha stream seeded by the scenario, and the scheduler is the script
//! itself, so a (seed, script) pair always yields the same transcript.
//! Transcripts carry prefixes, digests and dispositions; never seeds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::controller::{Controller, KeyPlan, SignedEvent};
use crate::crypto::{self, Signer};
use crate::engine::{build_rotation, verify_inception, verify_next, Disposition, RotationSpec, EVENT_DIGEST};
use crate::error::SimError;
use crate::event::{next_digest, Couplet, DigestSeal, EventSeal, KeyEvent, Seal, SerialKind, ValidatorReceipt, WitnessReceipt};
use crate::identifier::{derive_basic, Prefix};
use crate::kace::{judge, AgreementRecord, Judgment, WitnessPolicy};
use crate::logs::{Clock, Kerl, LogConfig};
use crate::matter::{IndexedSignature, Matter};
use crate::threshold::SigningThreshold;

/// Passes after which round-robin dissemination counts as non-terminating.
pub const MAX_PASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Controller,
    Witness,
    Watcher,
    Juror,
    Judge,
    Validator,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "controller" => Role::Controller,
            "witness" => Role::Witness,
            "watcher" => Role::Watcher,
            "juror" => Role::Juror,
            "judge" => Role::Judge,
            "validator" => Role::Validator,
            _ => return Err(format!("unknown role {s}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultMode {
    Honest,
    /// Never answers.
    Unresponsive,
    /// Receipts every version it is shown.
    Dishonest,
}

impl FromStr for FaultMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "honest" => FaultMode::Honest,
            "unresponsive" => FaultMode::Unresponsive,
            "dishonest" => FaultMode::Dishonest,
            _ => return Err(format!("unknown fault mode {s}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Validators receipt controller events themselves.
    Direct,
    /// Witnesses receipt; validators only observe.
    Indirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Icp,
    Rot,
    Ixn,
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "icp" => EventKind::Icp,
            "rot" => EventKind::Rot,
            "ixn" => EventKind::Ixn,
            _ => return Err(format!("unknown event kind {s}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assertion {
    Sufficient { label: String, tally: Option<u64> },
    Insufficient { label: String, tally: Option<u64> },
    Agreement { label: String, size: usize },
    Exchanges { label: String, max: usize },
    Full { label: String },
    Trunk { node: String, controller: String, ilks: Vec<String> },
    Disputed { node: String, controller: String, sns: Vec<u64> },
    Accountable { node: String, controller: String, sns: Vec<u64> },
    Duplicity { node: String, controller: String, sn: u64 },
    NoDuplicity { node: String },
    Disposition { node: String, label: String, starts_with: String },
    ValidatorReceipts { label: String, count: usize },
    Converged { controller: String },
    Safe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Seed(u64),
    Mode(Mode),
    Tally(u64),
    Node { name: String, role: Role, mode: FaultMode },
    Event { label: String, controller: String, kind: EventKind },
    Forge { label: String, controller: String, kind: EventKind },
    Compromise { controller: String, all: bool },
    Deliver { label: String, targets: Vec<String> },
    Drop { target: String },
    RoundRobin { label: String },
    Gossip { label: String },
    Assert(Assertion),
}

/// A parsed scenario: one action per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub actions: Vec<(usize, Action)>,
}

fn num<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("expected a number, got {s}"))
}

fn nums(words: &[&str]) -> Result<Vec<u64>, String> {
    if words == ["none"] {
        return Ok(vec![]);
    }
    words.iter().map(|w| num(w)).collect()
}

fn parse_assert(w: &[&str]) -> Result<Assertion, String> {
    let s = |i: usize| w[i].to_string();
    let arity = |n: usize| if w.len() < n { Err(format!("ASSERT {} needs {} arguments", w[0], n - 1)) } else { Ok(()) };
    arity(1)?;
    Ok(match w[0] {
        "sufficient" | "insufficient" => {
            arity(2)?;
            let tally = w.get(2).map(|t| num(t)).transpose()?;
            if w[0] == "sufficient" {
                Assertion::Sufficient { label: s(1), tally }
            } else {
                Assertion::Insufficient { label: s(1), tally }
            }
        }
        "agreement" => {
            arity(3)?;
            Assertion::Agreement { label: s(1), size: num(w[2])? }
        }
        "exchanges" => {
            arity(4)?;
            if w[2] != "<=" {
                return Err("expected ASSERT exchanges <label> <= <n>".into());
            }
            Assertion::Exchanges { label: s(1), max: num(w[3])? }
        }
        "full" => {
            arity(2)?;
            Assertion::Full { label: s(1) }
        }
        "trunk" => {
            arity(4)?;
            Assertion::Trunk { node: s(1), controller: s(2), ilks: w[3..].iter().map(|x| x.to_string()).collect() }
        }
        "disputed" | "accountable" => {
            arity(4)?;
            let sns = nums(&w[3..])?;
            if w[0] == "disputed" {
                Assertion::Disputed { node: s(1), controller: s(2), sns }
            } else {
                Assertion::Accountable { node: s(1), controller: s(2), sns }
            }
        }
        "duplicity" => {
            arity(4)?;
            Assertion::Duplicity { node: s(1), controller: s(2), sn: num(w[3])? }
        }
        "no-duplicity" => {
            arity(2)?;
            Assertion::NoDuplicity { node: s(1) }
        }
        "disposition" => {
            arity(4)?;
            Assertion::Disposition { node: s(1), label: s(2), starts_with: w[3..].join(" ") }
        }
        "vrct" => {
            arity(3)?;
            Assertion::ValidatorReceipts { label: s(1), count: num(w[2])? }
        }
        "converged" => {
            arity(2)?;
            Assertion::Converged { controller: s(1) }
        }
        "safe" => Assertion::Safe,
        other => return Err(format!("unknown assertion {other}")),
    })
}

fn parse_line(words: &[&str]) -> Result<Action, String> {
    let need = |n: usize| if words.len() < n { Err(format!("{} needs {} arguments", words[0], n - 1)) } else { Ok(()) };
    Ok(match words[0] {
        "SEED" => {
            need(2)?;
            Action::Seed(num(words[1])?)
        }
        "MODE" => {
            need(2)?;
            Action::Mode(match words[1] {
                "direct" => Mode::Direct,
                "indirect" => Mode::Indirect,
                m => return Err(format!("unknown mode {m}")),
            })
        }
        "TALLY" => {
            need(2)?;
            Action::Tally(num(words[1])?)
        }
        "NODE" => {
            need(3)?;
            let mode = words.get(3).map(|m| m.parse()).transpose()?.unwrap_or(FaultMode::Honest);
            Action::Node { name: words[1].into(), role: words[2].parse()?, mode }
        }
        "EVENT" | "FORGE" => {
            need(4)?;
            let (label, controller, kind) = (words[1].to_string(), words[2].to_string(), words[3].parse()?);
            if words[0] == "EVENT" {
                Action::Event { label, controller, kind }
            } else {
                Action::Forge { label, controller, kind }
            }
        }
        "COMPROMISE" => {
            need(2)?;
            let all = match words.get(2).copied() {
                None | Some("signing") => false,
                Some("all") => true,
                Some(s) => return Err(format!("unknown compromise scope {s}")),
            };
            Action::Compromise { controller: words[1].into(), all }
        }
        "DELIVER" => {
            need(3)?;
            Action::Deliver { label: words[1].into(), targets: words[2].split(',').map(String::from).collect() }
        }
        "DROP" => {
            need(2)?;
            Action::Drop { target: words[1].into() }
        }
        "ROUNDROBIN" => {
            need(2)?;
            Action::RoundRobin { label: words[1].into() }
        }
        "GOSSIP" => {
            need(2)?;
            Action::Gossip { label: words[1].into() }
        }
        "ASSERT" => {
            need(2)?;
            Action::Assert(parse_assert(&words[1..])?)
        }
        other => return Err(format!("unknown action {other}")),
    })
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut actions = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let action = parse_line(&words).map_err(|reason| SimError::ScriptInvalid { line: i + 1, reason })?;
            actions.push((i + 1, action));
        }
        Ok(Self { actions })
    }
}

/// A created event with the bookkeeping needed to judge agreement on it.
#[derive(Debug, Clone)]
pub struct Created {
    pub controller: String,
    pub forged: bool,
    pub event: KeyEvent,
    pub raw: Vec<u8>,
    pub sigs: Vec<IndexedSignature>,
    pub digest: Matter,
    pub policy: WitnessPolicy,
    pub previous: Option<WitnessPolicy>,
}

#[derive(Debug, Clone)]
struct Attacker {
    ctl: Controller,
    kerl: Kerl,
    all: bool,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub name: String,
    pub role: Role,
    pub mode: FaultMode,
    pub kerl: Kerl,
    prefix: Option<Prefix>,
    signer: Option<Signer>,
    ctl: Option<Controller>,
    attacker: Option<Attacker>,
    /// Versions this node has receipted, per location.
    signed: BTreeMap<(Prefix, u64), BTreeSet<Matter>>,
}

impl Node {
    pub fn prefix(&self) -> Option<&Prefix> {
        self.prefix.as_ref()
    }

    /// Whether this node still pushes receipts for `digest`. Disputed
    /// events that were not accountable when superseded are dropped from
    /// dissemination.
    pub fn pushes(&self, prefix: &Prefix, digest: &Matter) -> bool {
        !self.kerl.disputed(prefix).iter().any(|r| &r.digest == digest && !r.accountable)
    }

    /// Couplets held for `digest`, answered regardless of push policy.
    pub fn pull(&self, digest: &Matter) -> Vec<Couplet> {
        self.kerl.couplets(digest).to_vec()
    }

    pub fn signed_versions(&self) -> &BTreeMap<(Prefix, u64), BTreeSet<Matter>> {
        &self.signed
    }
}

/// Result of a scripted run.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub transcript: Vec<String>,
    /// Each ASSERT line with its result.
    pub assertions: Vec<(usize, bool)>,
    pub violations: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|(_, ok)| *ok) && self.violations.is_empty()
    }

    pub fn transcript_text(&self) -> String {
        let mut s = self.transcript.join("\n");
        s.push('\n');
        s
    }
}

pub struct Sim {
    rng: ChaCha20Rng,
    mode: Mode,
    tally: Option<u64>,
    nodes: BTreeMap<String, Node>,
    order: Vec<String>,
    by_prefix: BTreeMap<Prefix, String>,
    created: BTreeMap<String, Created>,
    /// Witnesses whose receipt of each labelled version verified.
    acks: BTreeMap<String, BTreeSet<Prefix>>,
    exchanges: BTreeMap<String, usize>,
    dispositions: BTreeMap<(String, String), String>,
    drops: BTreeMap<String, usize>,
    transcript: Vec<String>,
    violations: Vec<String>,
}

fn log_config(ersatz: bool) -> LogConfig {
    LogConfig { clock: Clock::logical(), receipt_escrow: true, ersatz_witness: ersatz, ..LogConfig::default() }
}

fn short(m: &Matter) -> String {
    m.qb64().chars().take(12).collect()
}

impl Sim {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            mode: Mode::Indirect,
            tally: None,
            nodes: BTreeMap::new(),
            order: Vec::new(),
            by_prefix: BTreeMap::new(),
            created: BTreeMap::new(),
            acks: BTreeMap::new(),
            exchanges: BTreeMap::new(),
            dispositions: BTreeMap::new(),
            drops: BTreeMap::new(),
            transcript: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn log(&mut self, line: String) {
        let n = self.transcript.len();
        self.transcript.push(format!("{n:05} {line}"));
    }

    pub fn transcript(&self) -> &[String] {
        &self.transcript
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.get(name)
    }

    pub fn created(&self, label: &str) -> Option<&Created> {
        self.created.get(label)
    }

    pub fn exchanges(&self, label: &str) -> Option<usize> {
        self.exchanges.get(label).copied()
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.log(format!("mode {}", if mode == Mode::Direct { "direct" } else { "indirect" }));
    }

    pub fn set_tally(&mut self, tally: u64) {
        self.tally = Some(tally);
        self.log(format!("tally {tally}"));
    }

    fn fresh_signer(&mut self, transferable: bool) -> Signer {
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        Signer::from_seed(seed, transferable)
    }

    fn get(&self, name: &str) -> Result<&Node, SimError> {
        self.nodes.get(name).ok_or_else(|| SimError::Failed(format!("unknown node {name}")))
    }

    fn get_mut(&mut self, name: &str) -> Result<&mut Node, SimError> {
        self.nodes.get_mut(name).ok_or_else(|| SimError::Failed(format!("unknown node {name}")))
    }

    fn label(&self, label: &str) -> Result<&Created, SimError> {
        self.created.get(label).ok_or_else(|| SimError::Failed(format!("unknown event {label}")))
    }

    pub fn add_node(&mut self, name: &str, role: Role, mode: FaultMode) -> Result<(), SimError> {
        if self.nodes.contains_key(name) {
            return Err(SimError::Failed(format!("duplicate node {name}")));
        }
        let ersatz = role == Role::Validator && self.mode == Mode::Direct;
        let mut node = Node {
            name: name.into(),
            role,
            mode,
            kerl: Kerl::with_config(log_config(ersatz)),
            prefix: None,
            signer: None,
            ctl: None,
            attacker: None,
            signed: BTreeMap::new(),
        };
        match role {
            Role::Controller => {}
            Role::Validator => {
                let plan = KeyPlan::single(self.fresh_signer(true), self.fresh_signer(true));
                let (ctl, icp) = Controller::incept(plan, SerialKind::Json).map_err(|e| SimError::Failed(e.to_string()))?;
                node.kerl.append(&icp.event, &icp.sigs).map_err(|e| SimError::Failed(e.to_string()))?;
                node.prefix = Some(ctl.prefix().clone());
                node.ctl = Some(ctl);
            }
            _ => {
                let signer = self.fresh_signer(false);
                let prefix = derive_basic(&signer.verfer(), false).expect("basic prefix");
                node.prefix = Some(prefix);
                node.signer = Some(signer);
            }
        }
        let shown = node.prefix.as_ref().map(Prefix::qb64).unwrap_or_else(|| "-".into());
        if let Some(p) = &node.prefix {
            self.by_prefix.insert(p.clone(), name.into());
        }
        self.log(format!("node {name} {role:?} {mode:?} {shown}"));
        self.nodes.insert(name.into(), node);
        self.order.push(name.into());
        Ok(())
    }

    fn witness_prefixes(&self) -> Vec<Prefix> {
        self.order
            .iter()
            .filter_map(|n| self.nodes.get(n))
            .filter(|n| n.role == Role::Witness)
            .filter_map(|n| n.prefix.clone())
            .collect()
    }

    fn random_seal(&mut self) -> Seal {
        let mut bytes = [0u8; 32];
        self.rng.fill_bytes(&mut bytes);
        Seal::Digest(DigestSeal { d: crypto::digest(EVENT_DIGEST, &bytes).expect("registered digest") })
    }

    fn register(&mut self, label: &str, controller: &str, forged: bool, signed: SignedEvent) -> Result<(), SimError> {
        if self.created.contains_key(label) {
            return Err(SimError::Failed(format!("duplicate event label {label}")));
        }
        let node = self.get(controller)?;
        let store = if forged { &node.attacker.as_ref().expect("forger exists").kerl } else { &node.kerl };
        let prior_state = signed.event.sn.checked_sub(1).and_then(|sn| {
            store.engine().kever(&signed.event.prefix).and_then(|k| k.trunk.get(sn as usize)).map(|a| a.state.clone())
        });
        let raw = signed.event.serialize().map_err(|e| SimError::Failed(e.to_string()))?;
        let digest = signed.event.digest(EVENT_DIGEST).map_err(|e| SimError::Failed(e.to_string()))?;
        let (witnesses, toad) = match signed.event.establishment() {
            Some(_) => {
                let state = match &prior_state {
                    None => verify_inception(&signed.event, &raw, &signed.sigs).ok(),
                    Some(p) => verify_next(p, &signed.event, &raw, &signed.sigs).ok(),
                };
                match state {
                    Some(s) => (s.witnesses, s.toad),
                    None => prior_state.as_ref().map(|s| (s.witnesses.clone(), s.toad)).unwrap_or_default(),
                }
            }
            None => prior_state.as_ref().map(|s| (s.witnesses.clone(), s.toad)).unwrap_or_default(),
        };
        let previous = prior_state.map(|s| WitnessPolicy::new(s.witnesses, s.toad));
        self.log(format!(
            "{} {label} {controller} {} sn={} d={}",
            if forged { "forge" } else { "event" },
            signed.event.ilk().as_str(),
            signed.event.sn,
            short(&digest)
        ));
        self.created.insert(
            label.into(),
            Created {
                controller: controller.into(),
                forged,
                event: signed.event,
                raw,
                sigs: signed.sigs,
                digest,
                policy: WitnessPolicy::new(witnesses, toad),
                previous,
            },
        );
        Ok(())
    }

    /// Honest controller creates its next event.
    pub fn create(&mut self, label: &str, controller: &str, kind: EventKind) -> Result<(), SimError> {
        let fail = |e: crate::controller::ControllerError| SimError::Failed(e.to_string());
        let role = self.get(controller)?.role;
        if role != Role::Controller {
            return Err(SimError::Failed(format!("{controller} is not a controller")));
        }
        let signed = match kind {
            EventKind::Icp => {
                if self.get(controller)?.ctl.is_some() {
                    return Err(SimError::Failed(format!("{controller} already incepted")));
                }
                let witnesses = self.witness_prefixes();
                let toad = self.tally.unwrap_or(witnesses.len() as u64);
                let plan = KeyPlan {
                    witnesses,
                    toad,
                    ..KeyPlan::single(self.fresh_signer(true), self.fresh_signer(true))
                };
                let (ctl, icp) = Controller::incept(plan, SerialKind::Json).map_err(fail)?;
                let node = self.get_mut(controller)?;
                node.prefix = Some(ctl.prefix().clone());
                node.ctl = Some(ctl);
                let p = node.prefix.clone().expect("set above");
                self.by_prefix.insert(p, controller.into());
                icp
            }
            EventKind::Rot => {
                let next = self.fresh_signer(true);
                let node = self.get_mut(controller)?;
                let ctl = node.ctl.as_mut().ok_or_else(|| SimError::Failed(format!("{controller} not incepted")))?;
                ctl.rotate(vec![next], SigningThreshold::Count(1)).map_err(fail)?
            }
            EventKind::Ixn => {
                let seal = self.random_seal();
                let node = self.get_mut(controller)?;
                let ctl = node.ctl.as_mut().ok_or_else(|| SimError::Failed(format!("{controller} not incepted")))?;
                ctl.interact(vec![seal]).map_err(fail)?
            }
        };
        let node = self.get_mut(controller)?;
        node.kerl.append(&signed.event, &signed.sigs).map_err(|e| SimError::Failed(e.to_string()))?;
        self.register(label, controller, false, signed)
    }

    /// The attacker obtains the controller's current signing keys, or every
    /// key including the pre-rotated ones when `all`.
    pub fn compromise(&mut self, controller: &str, all: bool) -> Result<(), SimError> {
        let node = self.get_mut(controller)?;
        let ctl = node.ctl.clone().ok_or_else(|| SimError::Failed(format!("{controller} not incepted")))?;
        node.attacker = Some(Attacker { ctl, kerl: node.kerl.clone(), all });
        self.log(format!("compromise {controller} scope={}", if all { "all" } else { "signing" }));
        Ok(())
    }

    /// Attacker creates an event from its snapshot of the controller.
    pub fn forge(&mut self, label: &str, controller: &str, kind: EventKind) -> Result<(), SimError> {
        let fail = |e: crate::controller::ControllerError| SimError::Failed(e.to_string());
        let seal = self.random_seal();
        let next = self.fresh_signer(true);
        let node = self.get_mut(controller)?;
        let attacker = node.attacker.as_mut().ok_or_else(|| SimError::Failed(format!("{controller} not compromised")))?;
        let signed = match kind {
            EventKind::Icp => return Err(SimError::Failed("cannot forge an inception".into())),
            EventKind::Ixn => attacker.ctl.interact(vec![seal]).map_err(fail)?,
            EventKind::Rot if attacker.all => attacker.ctl.rotate(vec![next], SigningThreshold::Count(1)).map_err(fail)?,
            EventKind::Rot => {
                // only the signing keys are known: claim them as the new keys
                let state = attacker.ctl.state().clone();
                let keys: Vec<Matter> = attacker.ctl.signers().iter().map(Signer::verfer).collect();
                let sith = SigningThreshold::Count(1);
                let commit = next_digest(&sith, &[next.verfer()], EVENT_DIGEST).map_err(|e| SimError::Failed(e.to_string()))?;
                let spec = RotationSpec::keeping_witnesses(&state, sith, keys, Some(commit));
                let event = build_rotation(&state, spec, None, attacker.ctl.kind());
                let sigs = attacker.ctl.sign(&event).map_err(fail)?;
                SignedEvent { event, sigs }
            }
        };
        let _ = attacker.kerl.append(&signed.event, &signed.sigs);
        self.register(label, controller, true, signed)
    }

    pub fn drop_next(&mut self, target: &str) {
        *self.drops.entry(target.into()).or_default() += 1;
        self.log(format!("drop-next {target}"));
    }

    fn sender_store(&mut self, created: &Created) -> &mut Kerl {
        let node = self.nodes.get_mut(&created.controller).expect("creator exists");
        if created.forged {
            &mut node.attacker.as_mut().expect("forger exists").kerl
        } else {
            &mut node.kerl
        }
    }

    /// Send one labelled event, with every couplet the sender holds, to
    /// `target` and collect its answer. Returns the target's couplet.
    pub fn exchange(&mut self, label: &str, target: &str) -> Result<Option<Couplet>, SimError> {
        let created = self.label(label)?.clone();
        self.get(target)?;
        if let Some(n) = self.drops.get_mut(target).filter(|n| **n > 0) {
            *n -= 1;
            self.log(format!("deliver {label} -> {target} dropped"));
            return Ok(None);
        }
        let attached = self.sender_store(&created).couplets(&created.digest).to_vec();
        let node = self.nodes.get_mut(target).expect("checked");
        if node.mode == FaultMode::Unresponsive {
            self.log(format!("deliver {label} -> {target} rcpts={} silent", attached.len()));
            return Ok(None);
        }
        let reports = node.kerl.append(&created.event, &created.sigs).map_err(|e| SimError::Failed(e.to_string()))?;
        let disposition = reports
            .iter()
            .find(|r| r.digest == created.digest)
            .map(|r| r.disposition.clone())
            .unwrap_or(Disposition::EscrowedOutOfOrder);
        if !attached.is_empty() {
            let receipt = receipt_for(&created, attached.clone());
            let _ = node.kerl.ingest_receipt(&receipt);
        }
        let prefix = &created.event.prefix;
        let in_trunk = node
            .kerl
            .engine()
            .kever(prefix)
            .and_then(|k| k.trunk.get(created.event.sn as usize))
            .is_some_and(|a| a.digest == created.digest);
        let mut couplet = None;
        let mut vrct = None;
        match node.role {
            Role::Witness => {
                let sign = match node.mode {
                    FaultMode::Honest => in_trunk,
                    _ => true,
                };
                if sign {
                    let signer = node.signer.as_ref().expect("witness has keys");
                    let c = Couplet { witness: node.prefix.clone().expect("witness prefix"), sig: signer.sign(&created.raw) };
                    node.signed.entry((prefix.clone(), created.event.sn)).or_default().insert(created.digest.clone());
                    if in_trunk {
                        let _ = node.kerl.ingest_receipt(&receipt_for(&created, vec![c.clone()]));
                    }
                    couplet = Some(c);
                }
            }
            Role::Validator if self.mode == Mode::Direct => {
                let fresh = matches!(disposition, Disposition::AcceptedFirstSeen | Disposition::SupersedingRecovery { .. });
                if fresh && in_trunk {
                    let ctl = node.ctl.as_ref().expect("validator has keys");
                    let state = ctl.state();
                    let r = ValidatorReceipt {
                        kind: created.event.kind,
                        prefix: prefix.clone(),
                        sn: created.event.sn,
                        digest: created.digest.clone(),
                        seal: EventSeal { prefix: state.prefix.clone(), sn: state.last_est_sn, digest: state.last_est_digest.clone() },
                        sigs: ctl.sign(&created.event).map_err(|e| SimError::Failed(e.to_string()))?,
                    };
                    let own_kel = node.kerl.export(&state.prefix).map_err(|e| SimError::Failed(e.to_string()))?;
                    vrct = Some((r, own_kel));
                }
            }
            _ => {}
        }
        let held = node.kerl.couplets(&created.digest).len();
        self.dispositions.insert((target.into(), label.into()), disposition.to_string());
        self.log(format!(
            "deliver {label} -> {target} rcpts={} disposition={disposition} held={held}{}{}",
            attached.len(),
            if couplet.is_some() { " receipted" } else { "" },
            if vrct.is_some() { " vrct" } else { "" }
        ));
        if let Some(c) = &couplet {
            let store = self.sender_store(&created);
            let _ = store.ingest_receipt(&receipt_for(&created, vec![c.clone()]));
            if c.verify(&created.raw) {
                self.acks.entry(label.into()).or_default().insert(c.witness.clone());
            }
        }
        if let Some((r, kel)) = vrct {
            let store = self.sender_store(&created);
            // the validator's own log travels with its first receipt
            store.import(&kel).map_err(|e| SimError::Failed(e.to_string()))?;
            let n = store.ingest_validator_receipt(&r).map_err(|e| SimError::Failed(e.to_string()))?;
            self.log(format!("vrct {label} <- {target} held={n}"));
        }
        Ok(couplet)
    }

    pub fn deliver(&mut self, label: &str, targets: &[String]) -> Result<(), SimError> {
        let all: Vec<String>;
        let targets = if targets == ["*"] {
            let created = self.label(label)?;
            all = created.policy.witnesses.iter().filter_map(|p| self.by_prefix.get(p).cloned()).collect();
            &all[..]
        } else {
            targets
        };
        for t in targets {
            self.exchange(label, t)?;
        }
        Ok(())
    }

    fn witness_names(&self, created: &Created) -> Vec<String> {
        created.policy.witnesses.iter().filter_map(|p| self.by_prefix.get(p).cloned()).collect()
    }

    fn honest_witnesses(&self, created: &Created) -> Vec<Prefix> {
        created
            .policy
            .witnesses
            .iter()
            .filter(|p| self.by_prefix.get(*p).and_then(|n| self.nodes.get(n)).is_some_and(|n| n.mode == FaultMode::Honest))
            .cloned()
            .collect()
    }

    fn holds_all(store: &Kerl, digest: &Matter, honest: &[Prefix]) -> bool {
        let held = store.couplets(digest);
        honest.iter().all(|w| held.iter().any(|c| &c.witness == w))
    }

    /// Every honest witness of the event, and its sender, holds receipts
    /// from every honest witness.
    pub fn fully_receipted(&self, label: &str) -> bool {
        let Some(created) = self.created.get(label) else { return false };
        let honest = self.honest_witnesses(created);
        let node = &self.nodes[&created.controller];
        let store = if created.forged { &node.attacker.as_ref().expect("forger").kerl } else { &node.kerl };
        Self::holds_all(store, &created.digest, &honest)
            && honest.iter().all(|w| Self::holds_all(&self.nodes[&self.by_prefix[w]].kerl, &created.digest, &honest))
    }

    /// Controller visits its witnesses in turn, each time attaching every
    /// receipt collected so far. Witnesses already shown the full set are
    /// skipped on later passes. Returns the exchange count.
    pub fn round_robin(&mut self, label: &str) -> Result<usize, SimError> {
        let created = self.label(label)?.clone();
        let names = self.witness_names(&created);
        let mut known: BTreeMap<String, BTreeSet<Prefix>> = BTreeMap::new();
        let mut exchanges = 0;
        let mut passes = 0;
        let mut done = names.is_empty();
        'passes: for pass in 0..MAX_PASSES {
            if done {
                break;
            }
            passes = pass + 1;
            for name in &names {
                let held: BTreeSet<Prefix> =
                    self.sender_store(&created).couplets(&created.digest).iter().map(|c| c.witness.clone()).collect();
                if pass > 0 && known.get(name).is_some_and(|k| k.is_superset(&held)) {
                    continue;
                }
                let answer = self.exchange(label, name)?;
                exchanges += 1;
                let k = known.entry(name.clone()).or_default();
                k.extend(held);
                if let Some(c) = answer {
                    k.insert(c.witness);
                }
                if self.fully_receipted(label) {
                    done = true;
                    break 'passes;
                }
            }
            let size = self.agreement_size(label);
            self.log(format!("round-robin {label} pass={passes} agreement={size}"));
        }
        let size = self.agreement_size(label);
        self.log(format!("round-robin {label} exchanges={exchanges} passes={passes} agreement={size} complete={done}"));
        if !done {
            let v = format!("round-robin {label} did not terminate within {MAX_PASSES} passes");
            self.log(format!("violation: {v}"));
            self.violations.push(v);
        }
        self.exchanges.insert(label.into(), exchanges);
        Ok(exchanges)
    }

    /// Push gossip: each round every honest witness pushes its receipts
    /// for the event to one random peer. Returns the message count needed
    /// for all honest witnesses to hold every honest receipt.
    pub fn gossip(&mut self, label: &str) -> Result<usize, SimError> {
        let created = self.label(label)?.clone();
        let names = self.witness_names(&created);
        let honest: Vec<String> = names.iter().filter(|n| self.nodes[*n].mode == FaultMode::Honest).cloned().collect();
        let done = |sim: &Sim| {
            let hp = sim.honest_witnesses(&created);
            hp.iter().all(|w| Self::holds_all(&sim.nodes[&sim.by_prefix[w]].kerl, &created.digest, &hp))
        };
        let cap = 64 * names.len().max(1);
        let mut messages = 0;
        while !done(self) && messages < cap && names.len() > 1 {
            for from in &honest {
                let mut to = from;
                while to == from {
                    to = &names[self.rng.gen_range(0..names.len())];
                }
                messages += 1;
                let sender = &self.nodes[from];
                if !sender.pushes(&created.event.prefix, &created.digest) {
                    continue;
                }
                let couplets = sender.kerl.couplets(&created.digest).to_vec();
                let target = self.nodes.get_mut(to).expect("witness exists");
                if target.mode != FaultMode::Unresponsive && !couplets.is_empty() {
                    let _ = target.kerl.ingest_receipt(&receipt_for(&created, couplets));
                }
            }
        }
        let n = names.len() as f64;
        self.log(format!("gossip {label} messages={messages} n_ln_n={:.1} complete={}", n * n.ln(), done(self)));
        Ok(messages)
    }

    /// Witnesses of the labelled event whose receipts verified.
    pub fn agreement(&self, label: &str) -> Option<AgreementRecord> {
        let created = self.created.get(label)?;
        Some(AgreementRecord {
            prefix: created.event.prefix.clone(),
            sn: created.event.sn,
            digest: created.digest.clone(),
            witnesses: self.acks.get(label).cloned().unwrap_or_default(),
        })
    }

    pub fn agreement_size(&self, label: &str) -> usize {
        let Some(created) = self.created.get(label) else { return 0 };
        self.acks.get(label).map_or(0, |a| a.iter().filter(|w| created.policy.witnesses.contains(w)).count())
    }

    pub fn judge(&self, label: &str, tally: Option<u64>) -> Option<Judgment> {
        let created = self.created.get(label)?;
        let record = self.agreement(label)?;
        let mut policy = created.policy.clone();
        if let Some(t) = tally {
            policy.controller_tally = t;
        }
        Some(judge(&record, &policy, created.previous.as_ref()))
    }

    /// No honest witness holds two receipted versions at one location
    /// other than versions its own log shows as superseded by recovery.
    pub fn honest_witnesses_safe(&self) -> bool {
        self.nodes.values().filter(|n| n.role == Role::Witness && n.mode == FaultMode::Honest).all(|n| {
            n.signed.iter().all(|((prefix, _), versions)| {
                let kever = n.kerl.engine().kever(prefix);
                versions.iter().filter(|d| !kever.is_some_and(|k| k.is_disputed(d))).count() <= 1
            })
        })
    }

    /// Every honest witness's view of `controller` ends at the controller's
    /// own latest event.
    pub fn converged(&self, controller: &str) -> bool {
        let Some(state) = self.nodes.get(controller).and_then(|n| n.ctl.as_ref()).map(|c| c.state().clone()) else {
            return false;
        };
        self.nodes
            .values()
            .filter(|n| n.role == Role::Witness && n.mode == FaultMode::Honest && state.witnesses.contains(n.prefix.as_ref().expect("witness prefix")))
            .all(|n| n.kerl.state(&state.prefix).is_some_and(|s| s.digest == state.digest))
    }

    fn controller_prefix(&self, controller: &str) -> Result<Prefix, String> {
        self.nodes
            .get(controller)
            .and_then(|n| n.prefix.clone())
            .ok_or_else(|| format!("{controller} has no prefix"))
    }

    pub fn check(&self, assertion: &Assertion) -> Result<bool, String> {
        let node = |n: &str| self.nodes.get(n).ok_or_else(|| format!("unknown node {n}"));
        Ok(match assertion {
            Assertion::Sufficient { label, tally } => self.judge(label, *tally).ok_or(format!("unknown event {label}"))?.sufficient,
            Assertion::Insufficient { label, tally } => !self.judge(label, *tally).ok_or(format!("unknown event {label}"))?.sufficient,
            Assertion::Agreement { label, size } => self.agreement_size(label) == *size,
            Assertion::Exchanges { label, max } => self.exchanges.get(label).is_some_and(|e| e <= max),
            Assertion::Full { label } => self.fully_receipted(label),
            Assertion::Trunk { node: n, controller, ilks } => {
                let p = self.controller_prefix(controller)?;
                let got: Vec<&str> = node(n)?
                    .kerl
                    .engine()
                    .kever(&p)
                    .map(|k| k.trunk.iter().map(|a| a.event.ilk().as_str()).collect())
                    .unwrap_or_default();
                got == ilks.iter().map(String::as_str).collect::<Vec<_>>()
            }
            Assertion::Disputed { node: n, controller, sns } => {
                let p = self.controller_prefix(controller)?;
                node(n)?.kerl.disputed(&p).iter().map(|r| r.sn).collect::<Vec<_>>() == *sns
            }
            Assertion::Accountable { node: n, controller, sns } => {
                let p = self.controller_prefix(controller)?;
                node(n)?.kerl.disputed(&p).iter().filter(|r| r.accountable).map(|r| r.sn).collect::<Vec<_>>() == *sns
            }
            Assertion::Duplicity { node: n, controller, sn } => {
                let p = self.controller_prefix(controller)?;
                node(n)?.kerl.del().events.contains_key(&(p, *sn))
            }
            Assertion::NoDuplicity { node: n } => node(n)?.kerl.del().is_empty(),
            Assertion::Disposition { node: n, label, starts_with } => {
                node(n)?;
                self.dispositions.get(&(n.clone(), label.clone())).is_some_and(|d| d.starts_with(starts_with.as_str()))
            }
            Assertion::ValidatorReceipts { label, count } => {
                let created = self.created.get(label).ok_or(format!("unknown event {label}"))?;
                let n = &self.nodes[&created.controller];
                let store = if created.forged { &n.attacker.as_ref().expect("forger").kerl } else { &n.kerl };
                store.validator_receipts(&created.digest).len() == *count
            }
            Assertion::Converged { controller } => self.converged(controller),
            Assertion::Safe => self.honest_witnesses_safe(),
        })
    }

    fn apply(&mut self, line: usize, action: &Action) -> Result<Option<bool>, SimError> {
        let at = |e: SimError| match e {
            SimError::Failed(reason) => SimError::ScriptInvalid { line, reason },
            other => other,
        };
        match action {
            Action::Seed(_) => {}
            Action::Mode(m) => self.set_mode(*m),
            Action::Tally(t) => self.set_tally(*t),
            Action::Node { name, role, mode } => self.add_node(name, *role, *mode).map_err(at)?,
            Action::Event { label, controller, kind } => self.create(label, controller, *kind).map_err(at)?,
            Action::Forge { label, controller, kind } => self.forge(label, controller, *kind).map_err(at)?,
            Action::Compromise { controller, all } => self.compromise(controller, *all).map_err(at)?,
            Action::Deliver { label, targets } => self.deliver(label, targets).map_err(at)?,
            Action::Drop { target } => {
                self.get(target).map_err(at)?;
                self.drop_next(target)
            }
            Action::RoundRobin { label } => {
                self.round_robin(label).map_err(at)?;
            }
            Action::Gossip { label } => {
                self.gossip(label).map_err(at)?;
            }
            Action::Assert(a) => {
                let ok = self.check(a).map_err(|reason| SimError::ScriptInvalid { line, reason })?;
                self.log(format!("assert line {line} {a} {}", if ok { "pass" } else { "FAIL" }));
                return Ok(Some(ok));
            }
        }
        Ok(None)
    }

    /// Run a whole scenario from a fresh simulator.
    pub fn run(scenario: &Scenario) -> Result<Outcome, SimError> {
        let seed = scenario
            .actions
            .iter()
            .find_map(|(_, a)| if let Action::Seed(s) = a { Some(*s) } else { None })
            .unwrap_or(0);
        let mut sim = Sim::new(seed);
        sim.log(format!("seed {seed}"));
        let mut assertions = Vec::new();
        for (line, action) in &scenario.actions {
            if let Some(ok) = sim.apply(*line, action)? {
                assertions.push((*line, ok));
            }
        }
        Ok(Outcome { transcript: sim.transcript, assertions, violations: sim.violations })
    }
}

fn receipt_for(created: &Created, couplets: Vec<Couplet>) -> WitnessReceipt {
    WitnessReceipt {
        kind: created.event.kind,
        prefix: created.event.prefix.clone(),
        sn: created.event.sn,
        digest: created.digest.clone(),
        couplets,
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[u64]| if v.is_empty() { "none".to_string() } else { v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ") };
        match self {
            Assertion::Sufficient { label, .. } => write!(f, "sufficient {label}"),
            Assertion::Insufficient { label, .. } => write!(f, "insufficient {label}"),
            Assertion::Agreement { label, size } => write!(f, "agreement {label} {size}"),
            Assertion::Exchanges { label, max } => write!(f, "exchanges {label} <= {max}"),
            Assertion::Full { label } => write!(f, "full {label}"),
            Assertion::Trunk { node, controller, ilks } => write!(f, "trunk {node} {controller} {}", ilks.join(" ")),
            Assertion::Disputed { node, controller, sns } => write!(f, "disputed {node} {controller} {}", list(sns)),
            Assertion::Accountable { node, controller, sns } => write!(f, "accountable {node} {controller} {}", list(sns)),
            Assertion::Duplicity { node, controller, sn } => write!(f, "duplicity {node} {controller} {sn}"),
            Assertion::NoDuplicity { node } => write!(f, "no-duplicity {node}"),
            Assertion::Disposition { node, label, starts_with } => write!(f, "disposition {node} {label} {starts_with}"),
            Assertion::ValidatorReceipts { label, count } => write!(f, "vrct {label} {count}"),
            Assertion::Converged { controller } => write!(f, "converged {controller}"),
            Assertion::Safe => f.write_str("safe"),
        }
    }
}

/// Per-event result of indirect-mode round-robin dissemination.
#[derive(Debug, Clone)]
pub struct RoundRobinRun {
    pub exchanges: Vec<usize>,
    pub agreement: Vec<usize>,
    pub complete: Vec<bool>,
    pub transcript: Vec<String>,
}

/// One controller, `modes.len()` witnesses, an inception followed by
/// `interactions` interaction events, each disseminated round-robin.
pub fn run_round_robin(seed: u64, modes: &[FaultMode], tally: Option<u64>, interactions: usize) -> Result<RoundRobinRun, SimError> {
    let mut sim = Sim::new(seed);
    if let Some(t) = tally {
        sim.set_tally(t);
    }
    for (i, m) in modes.iter().enumerate() {
        sim.add_node(&format!("w{}", i + 1), Role::Witness, *m)?;
    }
    sim.add_node("ctl", Role::Controller, FaultMode::Honest)?;
    let mut run = RoundRobinRun { exchanges: vec![], agreement: vec![], complete: vec![], transcript: vec![] };
    for i in 0..=interactions {
        let label = format!("e{i}");
        sim.create(&label, "ctl", if i == 0 { EventKind::Icp } else { EventKind::Ixn })?;
        run.exchanges.push(sim.round_robin(&label)?);
        run.agreement.push(sim.agreement_size(&label));
        run.complete.push(sim.fully_receipted(&label));
    }
    run.transcript = sim.transcript;
    Ok(run)
}

/// Direct mode: a controller and one validator acting as its own witness.
/// Creates an inception and `rotations` rotations, each delivered once.
pub fn run_direct(seed: u64, rotations: usize) -> Result<Sim, SimError> {
    let mut sim = Sim::new(seed);
    sim.set_mode(Mode::Direct);
    sim.set_tally(0);
    sim.add_node("ctl", Role::Controller, FaultMode::Honest)?;
    sim.add_node("val", Role::Validator, FaultMode::Honest)?;
    for i in 0..=rotations {
        let label = format!("e{i}");
        sim.create(&label, "ctl", if i == 0 { EventKind::Icp } else { EventKind::Rot })?;
        sim.exchange(&label, "val")?;
    }
    Ok(sim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    /// Keys exposed after they were rotated out are used to forge an
    /// alternate past rotation.
    Dead,
    /// Current signing keys are used to forge a rotation.
    Live,
    /// Current signing keys are used for interaction events; the controller
    /// recovers with a superseding rotation.
    SigningCompromiseRecovery,
    /// The controller itself issues two versions of one event to a split
    /// witness pool.
    DuplicitousController,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// The forged event was detected or rejected by every validator holding
    /// the original.
    Protected,
    /// The controller's rotation superseded the exploited branch.
    Recovered { trunk: Vec<String>, disputed: Vec<u64>, accountable: Vec<u64> },
    /// Number of versions that reached a sufficient agreement.
    Split { sufficient_versions: usize },
    Exploited(String),
}

/// Run a canned attack scenario.
pub fn run_attack(kind: AttackKind, seed: u64) -> Result<(Verdict, Sim), SimError> {
    match kind {
        AttackKind::Dead => {
            let mut sim = Sim::new(seed);
            sim.set_tally(0);
            sim.add_node("ctl", Role::Controller, FaultMode::Honest)?;
            sim.add_node("val", Role::Validator, FaultMode::Honest)?;
            sim.create("e0", "ctl", EventKind::Icp)?;
            sim.compromise("ctl", true)?;
            sim.create("e1", "ctl", EventKind::Rot)?;
            sim.create("e2", "ctl", EventKind::Rot)?;
            for l in ["e0", "e1", "e2"] {
                sim.exchange(l, "val")?;
            }
            sim.forge("x1", "ctl", EventKind::Rot)?;
            sim.exchange("x1", "val")?;
            let p = sim.controller_prefix("ctl").map_err(SimError::Failed)?;
            let val = &sim.nodes["val"].kerl;
            let detected = val.del().events.contains_key(&(p.clone(), 1)) && val.state(&p).map(|s| s.sn) == Some(2);
            let v = if detected { Verdict::Protected } else { Verdict::Exploited("forged rotation not detected".into()) };
            Ok((v, sim))
        }
        AttackKind::Live => {
            let mut sim = Sim::new(seed);
            sim.set_tally(0);
            sim.add_node("ctl", Role::Controller, FaultMode::Honest)?;
            sim.add_node("val", Role::Validator, FaultMode::Honest)?;
            sim.create("e0", "ctl", EventKind::Icp)?;
            sim.exchange("e0", "val")?;
            sim.compromise("ctl", false)?;
            sim.forge("x1", "ctl", EventKind::Rot)?;
            sim.exchange("x1", "val")?;
            let rejected = sim.dispositions.get(&("val".into(), "x1".into())).is_some_and(|d| d.starts_with("rejected"));
            let v = if rejected { Verdict::Protected } else { Verdict::Exploited("forged rotation accepted".into()) };
            Ok((v, sim))
        }
        AttackKind::SigningCompromiseRecovery => {
            let sim = recovery_scenario(seed, 4, 3, &[3, 3, 1])?;
            let p = sim.controller_prefix("ctl").map_err(SimError::Failed)?;
            let obs = &sim.nodes["val"].kerl;
            let trunk = obs
                .engine()
                .kever(&p)
                .map(|k| k.trunk.iter().map(|a| a.event.ilk().as_str().to_string()).collect())
                .unwrap_or_default();
            let records = obs.disputed(&p);
            let v = Verdict::Recovered {
                trunk,
                disputed: records.iter().map(|r| r.sn).collect(),
                accountable: records.iter().filter(|r| r.accountable).map(|r| r.sn).collect(),
            };
            Ok((v, sim))
        }
        AttackKind::DuplicitousController => {
            let (sim, x, y) = duplicity_split(seed, 4, 0, 0b0011)?;
            let count = [x, y].iter().filter(|l| sim.judge(l, None).is_some_and(|j| j.sufficient)).count();
            Ok((Verdict::Split { sufficient_versions: count }, sim))
        }
    }
}

/// Seven fully witnessed events (icp then six ixn), then an attacker with
/// the signing keys issues interactions at sn 7, 8, ...; the i-th one is
/// receipted by the first `reach[i]` witnesses, and its receipts are then
/// shown to the validator `val`. Finally the controller rotates at sn 7
/// and round-robins the rotation, then delivers it to `val`.
pub fn recovery_scenario(seed: u64, witnesses: usize, tally: u64, reach: &[usize]) -> Result<Sim, SimError> {
    let mut sim = Sim::new(seed);
    sim.set_tally(tally);
    for i in 1..=witnesses {
        sim.add_node(&format!("w{i}"), Role::Witness, FaultMode::Honest)?;
    }
    sim.add_node("ctl", Role::Controller, FaultMode::Honest)?;
    sim.add_node("val", Role::Validator, FaultMode::Honest)?;
    for i in 0..7 {
        let l = format!("e{i}");
        sim.create(&l, "ctl", if i == 0 { EventKind::Icp } else { EventKind::Ixn })?;
        sim.round_robin(&l)?;
        sim.exchange(&l, "val")?;
    }
    sim.compromise("ctl", false)?;
    for (i, r) in reach.iter().enumerate() {
        let l = format!("x{}", 7 + i);
        sim.forge(&l, "ctl", EventKind::Ixn)?;
        let targets: Vec<String> = (1..=*r).map(|w| format!("w{w}")).collect();
        sim.deliver(&l, &targets)?;
        sim.exchange(&l, "val")?;
    }
    sim.create("r7", "ctl", EventKind::Rot)?;
    sim.round_robin("r7")?;
    sim.exchange("r7", "val")?;
    Ok(sim)
}

/// A controller with `n` witnesses, the first `f` dishonest, issues two
/// versions of its sn-1 interaction. Bit i of `to_first` sends honest
/// witness i the first version, otherwise the second; dishonest witnesses
/// are shown both. Returns the labels of the two versions.
pub fn duplicity_split(seed: u64, n: usize, f: usize, to_first: u32) -> Result<(Sim, String, String), SimError> {
    let mut sim = Sim::new(seed);
    sim.set_tally(n as u64);
    for i in 0..n {
        let mode = if i < f { FaultMode::Dishonest } else { FaultMode::Honest };
        sim.add_node(&format!("w{}", i + 1), Role::Witness, mode)?;
    }
    sim.add_node("ctl", Role::Controller, FaultMode::Honest)?;
    sim.create("e0", "ctl", EventKind::Icp)?;
    sim.round_robin("e0")?;
    sim.compromise("ctl", true)?;
    sim.create("a1", "ctl", EventKind::Ixn)?;
    sim.forge("b1", "ctl", EventKind::Ixn)?;
    for i in 0..n {
        let name = format!("w{}", i + 1);
        if i < f {
            sim.exchange("a1", &name)?;
            sim.exchange("b1", &name)?;
        } else if to_first >> (i - f) & 1 == 1 {
            sim.exchange("a1", &name)?;
        } else {
            sim.exchange("b1", &name)?;
        }
    }
    Ok((sim, "a1".into(), "b1".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_unknown_actions() {
        let err = Scenario::parse("SEED 1\nFLY away\n").unwrap_err();
        assert!(matches!(err, SimError::ScriptInvalid { line: 2, .. }));
        assert!(Scenario::parse("ASSERT exchanges e0 < 3").is_err());
        assert!(Scenario::parse("NODE w1 witness sleepy").is_err());
    }

    #[test]
    fn round_robin_four_honest() {
        let run = run_round_robin(1, &[FaultMode::Honest; 4], None, 1).unwrap();
        assert_eq!(run.exchanges, vec![7, 7]);
        assert!(run.complete.iter().all(|c| *c));
        assert_eq!(run.agreement, vec![4, 4]);
    }

    #[test]
    fn round_robin_with_unresponsive() {
        use FaultMode::*;
        let run = run_round_robin(2, &[Honest, Honest, Honest, Unresponsive], Some(3), 0).unwrap();
        assert_eq!(run.agreement, vec![3]);
        assert!(run.exchanges[0] <= 8);
        let run = run_round_robin(2, &[Honest, Unresponsive, Honest, Unresponsive], Some(3), 0).unwrap();
        assert_eq!(run.agreement, vec![2]);
        assert!(run.transcript.iter().any(|l| l.contains("agreement=2")));
    }

    #[test]
    fn direct_mode_doubly_receipted() {
        let mut sim = run_direct(3, 2).unwrap();
        let ctl = &sim.nodes["ctl"].kerl;
        let val = &sim.nodes["val"].kerl;
        let p = sim.controller_prefix("ctl").unwrap();
        let digests = |k: &Kerl| k.engine().kever(&p).unwrap().trunk.iter().map(|a| a.digest.clone()).collect::<Vec<_>>();
        assert_eq!(digests(ctl), digests(val));
        assert_eq!(digests(ctl).len(), 3);
        for d in digests(ctl) {
            assert_eq!(ctl.validator_receipts(&d).len(), 1);
        }
        // redelivery: duplicate, no second receipt
        sim.exchange("e1", "val").unwrap();
        assert!(sim.check(&Assertion::Disposition { node: "val".into(), label: "e1".into(), starts_with: "duplicate-identical".into() }).unwrap());
        assert!(sim.check(&Assertion::ValidatorReceipts { label: "e1".into(), count: 1 }).unwrap());
    }

    #[test]
    fn dead_and_live_attacks_are_stopped() {
        let (v, sim) = run_attack(AttackKind::Dead, 4).unwrap();
        assert_eq!(v, Verdict::Protected);
        assert!(sim.nodes["val"].kerl.verify_del());
        assert_eq!(run_attack(AttackKind::Live, 4).unwrap().0, Verdict::Protected);
    }

    #[test]
    fn recovery_labels() {
        let (v, sim) = run_attack(AttackKind::SigningCompromiseRecovery, 5).unwrap();
        let mut trunk = vec!["icp".to_string()];
        trunk.extend(std::iter::repeat_n("ixn".to_string(), 6));
        trunk.push("rot".into());
        assert_eq!(v, Verdict::Recovered { trunk, disputed: vec![7, 8, 9], accountable: vec![7, 8] });
        assert!(sim.converged("ctl"));
        assert!(sim.honest_witnesses_safe());
    }

    #[test]
    fn disputed_unaccountable_receipts_stop_spreading() {
        let sim = recovery_scenario(6, 4, 3, &[3, 3, 1]).unwrap();
        let w1 = &sim.nodes["w1"];
        let x9 = sim.created("x9").unwrap();
        let x7 = sim.created("x7").unwrap();
        let p = &x9.event.prefix;
        // w1 saw x9 but no one else receipted it
        assert!(!w1.pushes(p, &x9.digest));
        assert!(!w1.pull(&x9.digest).is_empty());
        // w3 held all three receipts of x7 when it was superseded
        assert!(sim.nodes["w3"].pushes(p, &x7.digest));
    }

    #[test]
    fn duplicity_split_verdicts() {
        let (v, _) = run_attack(AttackKind::DuplicitousController, 7).unwrap();
        assert_eq!(v, Verdict::Split { sufficient_versions: 0 });
        let (sim, a, b) = duplicity_split(7, 4, 0, 0b0011).unwrap();
        assert!(sim.judge(&a, Some(2)).unwrap().sufficient);
        assert!(sim.judge(&b, Some(2)).unwrap().sufficient);
        assert!(sim.honest_witnesses_safe());
    }

    #[test]
    fn scripted_runs_are_deterministic() {
        let text = "SEED 9\nTALLY 2\nNODE w1 witness\nNODE w2 witness\nNODE w3 witness unresponsive\nNODE c controller\n\
                    EVENT e0 c icp\nROUNDROBIN e0\nEVENT e1 c ixn\nGOSSIP e1\nDELIVER e1 *\nASSERT sufficient e1\nASSERT safe\n";
        let s = Scenario::parse(text).unwrap();
        let a = Sim::run(&s).unwrap();
        let b = Sim::run(&s).unwrap();
        assert_eq!(a.transcript_text(), b.transcript_text());
        assert!(a.passed(), "{}", a.transcript_text());
    }

    #[test]
    fn transcripts_carry_no_seed_material() {
        let sim = recovery_scenario(21, 4, 3, &[3, 3, 1]).unwrap();
        let text = sim.transcript().join("\n");
        let mut seeds = Vec::new();
        for node in sim.nodes.values() {
            seeds.extend(node.signer.iter().map(|s| s.seed().qb64()));
            for ctl in node.ctl.iter().chain(node.attacker.as_ref().map(|a| &a.ctl)) {
                seeds.extend(ctl.signers().iter().chain(ctl.next_signers()).map(|s| s.seed().qb64()));
            }
        }
        assert_eq!(seeds.len(), 10);
        assert!(seeds.iter().all(|s| !text.contains(s.as_str())));
    }
}
