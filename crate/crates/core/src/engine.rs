//! Key state engine: verifies events against the current key state of
//! their prefix and advances it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::crypto;
use crate::error::{EventError, Rejection};
use crate::event::{
    next_digest, EventBody, EventSeal, Ilk, KeyEvent, LocationSeal, Rotation, Seal, SerialKind, TRAIT_EST_ONLY,
};
use crate::identifier::{self, check_toad, InceptionSeed, Prefix, PrefixClass};
use crate::matter::{codes, IndexedSignature, Matter};
use crate::threshold::SigningThreshold;

/// Digest code used for event digests and prior-event references.
pub const EVENT_DIGEST: &str = codes::BLAKE3_256;
pub const DEFAULT_ESCROW_CAPACITY: usize = 1024;

/// Verified control authority of one prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyState {
    pub prefix: Prefix,
    pub sn: u64,
    pub digest: Matter,
    pub ilk: Ilk,
    pub last_est_sn: u64,
    pub last_est_digest: Matter,
    pub sith: SigningThreshold,
    pub keys: Vec<Matter>,
    pub next: Option<Matter>,
    pub toad: u64,
    pub witnesses: Vec<Prefix>,
    pub config: Vec<String>,
    pub delegator: Option<Prefix>,
    /// Position of the first current key in the full key sequence.
    pub first_key_index: u64,
}

impl KeyState {
    pub fn abandoned(&self) -> bool {
        self.next.is_none()
    }

    pub fn est_only(&self) -> bool {
        self.config.iter().any(|c| c == TRAIT_EST_ONLY)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Disposition {
    AcceptedFirstSeen,
    DuplicateIdentical,
    /// A verifiable alternate version of an accepted event. State unchanged.
    Duplicitous,
    /// A rotation replaced the trunk from its location; the listed
    /// sequence numbers moved to a disputed branch.
    SupersedingRecovery { disputed: Vec<u64> },
    EscrowedOutOfOrder,
    EscrowedPartialSig,
    Rejected(Rejection),
}

impl Disposition {
    pub fn accepted(&self) -> bool {
        matches!(self, Self::AcceptedFirstSeen | Self::SupersedingRecovery { .. })
    }
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AcceptedFirstSeen => f.write_str("accepted-first-seen"),
            Self::DuplicateIdentical => f.write_str("duplicate-identical"),
            Self::Duplicitous => f.write_str("duplicitous"),
            Self::SupersedingRecovery { disputed } => write!(f, "superseding-recovery {disputed:?}"),
            Self::EscrowedOutOfOrder => f.write_str("escrowed-out-of-order"),
            Self::EscrowedPartialSig => f.write_str("escrowed-partial-sig"),
            Self::Rejected(r) => write!(f, "rejected: {r}"),
        }
    }
}

/// Outcome for one event, either the one submitted or one drained from
/// escrow as a consequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub prefix: Prefix,
    pub sn: u64,
    pub ilk: Ilk,
    pub digest: Matter,
    pub disposition: Disposition,
}

/// An accepted event with the state it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accepted {
    pub event: KeyEvent,
    pub raw: Vec<u8>,
    pub digest: Matter,
    pub sigs: Vec<IndexedSignature>,
    pub state: KeyState,
    /// For delegated establishment events: latest establishment sn of the
    /// delegator as of the delegating event.
    pub delegator_authority: Option<u64>,
}

/// Events cut from the trunk by a superseding rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisputedBranch {
    pub sn: u64,
    pub superseded_by: Matter,
    pub events: Vec<Accepted>,
}

#[derive(Debug, Clone, Default)]
pub struct Kever {
    pub trunk: Vec<Accepted>,
    pub disputed: Vec<DisputedBranch>,
}

impl Kever {
    pub fn state(&self) -> &KeyState {
        &self.trunk.last().expect("kever holds its inception").state
    }

    pub fn is_disputed(&self, digest: &Matter) -> bool {
        self.disputed.iter().flat_map(|b| &b.events).any(|a| &a.digest == digest)
    }

    /// The establishment subsequence of the trunk.
    pub fn establishments(&self) -> impl Iterator<Item = &Accepted> {
        self.trunk.iter().filter(|a| a.event.is_establishment())
    }
}

#[derive(Debug, Clone)]
struct Escrowed {
    event: KeyEvent,
    digest: Matter,
    sigs: Vec<IndexedSignature>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscrowConfig {
    pub out_of_order: usize,
    pub partial_sig: usize,
}

impl Default for EscrowConfig {
    fn default() -> Self {
        Self { out_of_order: DEFAULT_ESCROW_CAPACITY, partial_sig: DEFAULT_ESCROW_CAPACITY }
    }
}

/// Lookup of delegating events in delegator logs.
pub trait DelegatorView {
    /// Trunk event at `(prefix, sn)` and the delegator's latest
    /// establishment sn as of that event.
    fn trunk_event(&self, prefix: &Prefix, sn: u64) -> Option<(&KeyEvent, u64)>;
}

#[derive(Debug, Clone, Default)]
struct SigCheck {
    verified: BTreeSet<usize>,
    bad: usize,
}

fn check_sigs(keys: &[Matter], raw: &[u8], sigs: &[IndexedSignature]) -> SigCheck {
    let mut out = SigCheck::default();
    for sig in sigs {
        if crypto::verify_indexed(keys, raw, sig) {
            out.verified.insert(sig.index() as usize);
        } else {
            out.bad += 1;
        }
    }
    out
}

fn require_sigs(
    sith: &SigningThreshold,
    keys: &[Matter],
    raw: &[u8],
    sigs: &[IndexedSignature],
    implicit: Option<usize>,
) -> Result<(), Rejection> {
    let mut check = check_sigs(keys, raw, sigs);
    check.verified.extend(implicit);
    if check.bad > 0 {
        return Err(Rejection::BadSignature);
    }
    match sith.satisfies(keys.len(), check.verified.iter().copied()) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Rejection::ThresholdUnmet),
        Err(_) => Err(Rejection::BadSignature),
    }
}

/// Verify an inception event on its own and produce the initial state.
pub fn verify_inception(event: &KeyEvent, raw: &[u8], sigs: &[IndexedSignature]) -> Result<KeyState, Rejection> {
    let EventBody::Inception(body) = &event.body else { return Err(Rejection::NotInception) };
    let seed = InceptionSeed::from_event(event).expect("inception body");
    seed.validate().map_err(|e| Rejection::InvalidInception(e.to_string()))?;
    if !identifier::verify_prefix(&event.prefix, &seed) {
        return Err(Rejection::InvalidPrefix);
    }
    // a self-signing prefix is itself a signature by the only key
    let implicit = (event.prefix.class() == PrefixClass::SelfSigning).then_some(0);
    require_sigs(&body.sith, &body.keys, raw, sigs, implicit)?;
    let digest = crypto::digest(EVENT_DIGEST, raw).expect("registered digest");
    Ok(KeyState {
        prefix: event.prefix.clone(),
        sn: 0,
        digest: digest.clone(),
        ilk: event.ilk(),
        last_est_sn: 0,
        last_est_digest: digest,
        sith: body.sith.clone(),
        keys: body.keys.clone(),
        next: body.next.clone(),
        toad: body.toad,
        witnesses: body.witnesses.clone(),
        config: body.config.clone(),
        delegator: body.delegator.as_ref().map(|d| d.prefix.clone()),
        first_key_index: 0,
    })
}

/// Witness set after pruning `cuts` and grafting `adds`.
pub fn rotate_witnesses(old: &[Prefix], cuts: &[Prefix], adds: &[Prefix], toad: u64) -> Result<Vec<Prefix>, Rejection> {
    let bad = |s: String| Err(Rejection::WitnessSet(s));
    let unique = |list: &[Prefix]| list.iter().collect::<BTreeSet<_>>().len() == list.len();
    if !unique(cuts) || !unique(adds) {
        return bad("duplicate entries".into());
    }
    if let Some(c) = cuts.iter().find(|c| !old.contains(c)) {
        return bad(format!("cut {c} is not a current witness"));
    }
    if let Some(a) = adds.iter().find(|a| old.contains(a) && !cuts.contains(a)) {
        return bad(format!("added {a} is already a witness"));
    }
    if let Some(a) = adds.iter().find(|a| cuts.contains(a)) {
        return bad(format!("{a} both cut and added"));
    }
    if let Some(a) = adds.iter().find(|a| a.transferable()) {
        return bad(format!("witness {a} is transferable"));
    }
    let mut next: Vec<Prefix> = old.iter().filter(|w| !cuts.contains(w)).cloned().collect();
    next.extend(adds.iter().cloned());
    check_toad(toad, next.len()).map_err(Rejection::WitnessSet)?;
    Ok(next)
}

fn check_prior(state: &KeyState, event: &KeyEvent) -> Result<(), Rejection> {
    if event.sn != state.sn + 1 || event.prior.as_ref() != Some(&state.digest) {
        return Err(Rejection::PriorDigestMismatch);
    }
    Ok(())
}

fn check_delegation_kind(state: &KeyState, event: &KeyEvent) -> Result<(), Rejection> {
    match (&state.delegator, event.delegator_seal()) {
        (None, None) => Ok(()),
        (Some(d), Some(seal)) if d == &seal.prefix => Ok(()),
        _ => Err(Rejection::DelegationMismatch),
    }
}

/// Verify a rotation against the state it follows and produce the new
/// state. Delegation anchoring is checked separately.
pub fn verify_rotation(
    state: &KeyState,
    event: &KeyEvent,
    raw: &[u8],
    sigs: &[IndexedSignature],
) -> Result<KeyState, Rejection> {
    let EventBody::Rotation(body) = &event.body else { return Err(Rejection::NotInception) };
    check_prior(state, event)?;
    let Some(committed) = &state.next else { return Err(Rejection::AbandonedIdentifier) };
    check_delegation_kind(state, event)?;
    body.sith.validate_for(body.keys.len()).map_err(|e| Rejection::InvalidThreshold(e.to_string()))?;
    if body.keys.iter().any(|k| !crypto::is_signing_key(k)) {
        return Err(Rejection::PreRotationMismatch);
    }
    match next_digest(&body.sith, &body.keys, committed.code()) {
        Ok(d) if &d == committed => {}
        _ => return Err(Rejection::PreRotationMismatch),
    }
    if let Some(n) = &body.next {
        if crypto::digest(n.code(), b"").is_err() {
            return Err(Rejection::InvalidThreshold(format!("next commitment code {}", n.code())));
        }
    }
    let witnesses = rotate_witnesses(&state.witnesses, &body.cuts, &body.adds, body.toad)?;
    require_sigs(&body.sith, &body.keys, raw, sigs, None)?;
    let digest = crypto::digest(EVENT_DIGEST, raw).expect("registered digest");
    Ok(KeyState {
        prefix: state.prefix.clone(),
        sn: event.sn,
        digest: digest.clone(),
        ilk: event.ilk(),
        last_est_sn: event.sn,
        last_est_digest: digest,
        sith: body.sith.clone(),
        keys: body.keys.clone(),
        next: body.next.clone(),
        toad: body.toad,
        witnesses,
        config: state.config.clone(),
        delegator: state.delegator.clone(),
        first_key_index: state.first_key_index + state.keys.len() as u64,
    })
}

pub fn verify_interaction(
    state: &KeyState,
    event: &KeyEvent,
    raw: &[u8],
    sigs: &[IndexedSignature],
) -> Result<KeyState, Rejection> {
    check_prior(state, event)?;
    if state.abandoned() {
        return Err(Rejection::AbandonedIdentifier);
    }
    if state.est_only() {
        return Err(Rejection::EstOnlyViolation);
    }
    require_sigs(&state.sith, &state.keys, raw, sigs, None)?;
    Ok(KeyState {
        sn: event.sn,
        digest: crypto::digest(EVENT_DIGEST, raw).expect("registered digest"),
        ilk: Ilk::Ixn,
        ..state.clone()
    })
}

/// Verify any non-inception event against the state it follows.
pub fn verify_next(
    state: &KeyState,
    event: &KeyEvent,
    raw: &[u8],
    sigs: &[IndexedSignature],
) -> Result<KeyState, Rejection> {
    match event.body {
        EventBody::Inception(_) => Err(Rejection::PriorDigestMismatch),
        EventBody::Rotation(_) => verify_rotation(state, event, raw, sigs),
        EventBody::Interaction { .. } => verify_interaction(state, event, raw, sigs),
    }
}

/// Locate the delegating event named by `event`'s delegator seal and check
/// that it seals `event`. Returns the delegator's authority sn.
pub fn verify_delegation(event: &KeyEvent, raw: &[u8], view: &impl DelegatorView) -> Result<u64, Rejection> {
    let seal = event.delegator_seal().ok_or(Rejection::DelegationMismatch)?;
    if seal.prefix == event.prefix {
        return Err(Rejection::DelegationMismatch);
    }
    let (delegating, authority) =
        view.trunk_event(&seal.prefix, seal.sn).ok_or(Rejection::DelegatingEventNotFound)?;
    if delegating.ilk().as_str() != seal.ilk || delegating.prior.as_ref() != Some(&seal.prior) {
        return Err(Rejection::DelegatingEventNotFound);
    }
    let sealed = delegating.seals().iter().any(|s| {
        matches!(s, Seal::Event(es)
            if es.prefix == event.prefix && es.sn == event.sn && crypto::digest_matches(&es.digest, raw))
    });
    if !sealed {
        return Err(Rejection::SealMismatch);
    }
    Ok(authority)
}

#[derive(Debug, Clone, Default)]
pub struct Engine {
    kevers: BTreeMap<Prefix, Kever>,
    out_of_order: VecDeque<Escrowed>,
    partial_sig: VecDeque<Escrowed>,
    config: EscrowConfig,
}

impl DelegatorView for Engine {
    fn trunk_event(&self, prefix: &Prefix, sn: u64) -> Option<(&KeyEvent, u64)> {
        let rec = self.kevers.get(prefix)?.trunk.get(sn as usize)?;
        Some((&rec.event, rec.state.last_est_sn))
    }
}

enum Decision {
    Done(Disposition),
    Accept { state: KeyState, authority: Option<u64> },
    Supersede { state: KeyState, authority: Option<u64> },
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_escrow(config: EscrowConfig) -> Self {
        Self { config, ..Self::default() }
    }

    pub fn state(&self, prefix: &Prefix) -> Option<&KeyState> {
        self.kevers.get(prefix).map(Kever::state)
    }

    pub fn kever(&self, prefix: &Prefix) -> Option<&Kever> {
        self.kevers.get(prefix)
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &Prefix> {
        self.kevers.keys()
    }

    pub fn out_of_order_len(&self) -> usize {
        self.out_of_order.len()
    }

    pub fn partial_sig_len(&self) -> usize {
        self.partial_sig.len()
    }

    /// Disposition of the submitted event alone.
    pub fn process_one(&mut self, event: &KeyEvent, sigs: &[IndexedSignature]) -> Disposition {
        self.process(event, sigs).swap_remove(0).disposition
    }

    /// Process one event. The first report is for `event`; any further
    /// reports are for escrowed events it released, in order.
    pub fn process(&mut self, event: &KeyEvent, sigs: &[IndexedSignature]) -> Vec<Report> {
        let mut reports = Vec::new();
        self.process_inner(event.clone(), sigs.to_vec(), &mut reports);
        reports
    }

    fn process_inner(&mut self, event: KeyEvent, mut sigs: Vec<IndexedSignature>, reports: &mut Vec<Report>) {
        let raw = match event.serialize() {
            Ok(raw) => raw,
            Err(e) => {
                reports.push(Report {
                    prefix: event.prefix.clone(),
                    sn: event.sn,
                    ilk: event.ilk(),
                    digest: crypto::digest(EVENT_DIGEST, b"").expect("registered"),
                    disposition: Disposition::Rejected(Rejection::Malformed(e.to_string())),
                });
                return;
            }
        };
        let digest = crypto::digest(EVENT_DIGEST, &raw).expect("registered digest");
        if let Some(pos) = self.partial_sig.iter().position(|e| e.digest == digest) {
            let held = self.partial_sig.remove(pos).expect("position valid");
            for s in held.sigs {
                if !sigs.contains(&s) {
                    sigs.push(s);
                }
            }
        }
        let decision = self.decide(&event, &raw, &digest, &sigs);
        let disposition = match decision {
            Decision::Done(d) => d,
            Decision::Accept { state, authority } => {
                let kever = self.kevers.entry(event.prefix.clone()).or_default();
                kever.trunk.push(Accepted {
                    event: event.clone(),
                    raw,
                    digest: digest.clone(),
                    sigs,
                    state,
                    delegator_authority: authority,
                });
                Disposition::AcceptedFirstSeen
            }
            Decision::Supersede { state, authority } => {
                let kever = self.kevers.get_mut(&event.prefix).expect("existing log");
                let cut = kever.trunk.split_off(event.sn as usize);
                let disputed = cut.iter().map(|a| a.event.sn).collect();
                kever.disputed.push(DisputedBranch { sn: event.sn, superseded_by: digest.clone(), events: cut });
                kever.trunk.push(Accepted {
                    event: event.clone(),
                    raw,
                    digest: digest.clone(),
                    sigs,
                    state,
                    delegator_authority: authority,
                });
                Disposition::SupersedingRecovery { disputed }
            }
        };
        let accepted = disposition.accepted();
        reports.push(Report { prefix: event.prefix.clone(), sn: event.sn, ilk: event.ilk(), digest, disposition });
        if accepted {
            self.drain(&event.prefix, reports);
        }
    }

    fn drain(&mut self, prefix: &Prefix, reports: &mut Vec<Report>) {
        loop {
            let next_sn = match self.state(prefix) {
                Some(s) => s.sn + 1,
                None => return,
            };
            let Some(pos) = self.out_of_order.iter().position(|e| &e.event.prefix == prefix && e.event.sn == next_sn)
            else {
                return;
            };
            let held = self.out_of_order.remove(pos).expect("position valid");
            // a released event may itself release the next one
            self.process_inner(held.event, held.sigs, reports);
            if !reports.last().is_some_and(|r| r.disposition.accepted()) {
                // other versions at the same sn may still be waiting
                if !self.out_of_order.iter().any(|e| &e.event.prefix == prefix && e.event.sn == next_sn) {
                    return;
                }
            }
        }
    }

    fn escrow_out_of_order(&mut self, event: &KeyEvent, raw: &[u8], digest: &Matter, sigs: &[IndexedSignature]) -> Decision {
        // only what can be checked now: a rotation carries its own keys
        if let Some(est) = event.establishment() {
            if let Err(r) = require_sigs(est.sith, est.keys, raw, sigs, None) {
                return Decision::Done(Disposition::Rejected(r));
            }
        } else if sigs.is_empty() {
            return Decision::Done(Disposition::Rejected(Rejection::ThresholdUnmet));
        }
        if !self.out_of_order.iter().any(|e| &e.digest == digest) {
            self.out_of_order.push_back(Escrowed { event: event.clone(), digest: digest.clone(), sigs: sigs.to_vec() });
            while self.out_of_order.len() > self.config.out_of_order {
                self.out_of_order.pop_front();
            }
        }
        Decision::Done(Disposition::EscrowedOutOfOrder)
    }

    /// Threshold unmet: hold the event if some signatures verified and
    /// none failed.
    fn escrow_partial(&mut self, event: &KeyEvent, raw: &[u8], digest: &Matter, sigs: &[IndexedSignature], keys: &[Matter]) -> Decision {
        let check = check_sigs(keys, raw, sigs);
        if check.bad > 0 || check.verified.is_empty() {
            return Decision::Done(Disposition::Rejected(Rejection::ThresholdUnmet));
        }
        self.partial_sig.push_back(Escrowed { event: event.clone(), digest: digest.clone(), sigs: sigs.to_vec() });
        while self.partial_sig.len() > self.config.partial_sig {
            self.partial_sig.pop_front();
        }
        Decision::Done(Disposition::EscrowedPartialSig)
    }

    fn verify_full(&self, base: Option<&KeyState>, event: &KeyEvent, raw: &[u8], sigs: &[IndexedSignature]) -> Result<(KeyState, Option<u64>), Rejection> {
        let state = match base {
            None => verify_inception(event, raw, sigs)?,
            Some(s) => verify_next(s, event, raw, sigs)?,
        };
        let authority = match event.delegator_seal() {
            Some(_) => Some(verify_delegation(event, raw, self)?),
            None => None,
        };
        Ok((state, authority))
    }

    fn decide(&mut self, event: &KeyEvent, raw: &[u8], digest: &Matter, sigs: &[IndexedSignature]) -> Decision {
        let reject = |r| Decision::Done(Disposition::Rejected(r));
        let Some(kever) = self.kevers.get(&event.prefix) else {
            if event.sn != 0 {
                return self.escrow_out_of_order(event, raw, digest, sigs);
            }
            return match self.verify_full(None, event, raw, sigs) {
                Ok((state, authority)) => Decision::Accept { state, authority },
                Err(Rejection::ThresholdUnmet) => {
                    let keys = event.establishment().map(|e| e.keys.to_vec()).unwrap_or_default();
                    self.escrow_partial(event, raw, digest, sigs, &keys)
                }
                Err(r) => reject(r),
            };
        };
        let state = kever.state().clone();
        if event.sn <= state.sn {
            return self.decide_existing(event, raw, digest, sigs);
        }
        if kever.is_disputed(digest) || event.prior.as_ref().is_some_and(|p| kever.is_disputed(p)) {
            return reject(Rejection::DisputedBranch);
        }
        if state.abandoned() {
            return reject(Rejection::AbandonedIdentifier);
        }
        if event.sn > state.sn + 1 {
            return self.escrow_out_of_order(event, raw, digest, sigs);
        }
        match self.verify_full(Some(&state), event, raw, sigs) {
            Ok((state, authority)) => Decision::Accept { state, authority },
            Err(Rejection::ThresholdUnmet) => {
                let keys = event.establishment().map(|e| e.keys.to_vec()).unwrap_or(state.keys);
                self.escrow_partial(event, raw, digest, sigs, &keys)
            }
            Err(r) => reject(r),
        }
    }

    fn decide_existing(&self, event: &KeyEvent, raw: &[u8], digest: &Matter, sigs: &[IndexedSignature]) -> Decision {
        let reject = |r| Decision::Done(Disposition::Rejected(r));
        let kever = &self.kevers[&event.prefix];
        let sn = event.sn as usize;
        if &kever.trunk[sn].digest == digest {
            return Decision::Done(Disposition::DuplicateIdentical);
        }
        if kever.is_disputed(digest) || event.prior.as_ref().is_some_and(|p| kever.is_disputed(p)) {
            return reject(Rejection::DisputedBranch);
        }
        let base = sn.checked_sub(1).map(|k| &kever.trunk[k].state);
        let verified = self.verify_full(base, event, raw, sigs);
        let branch = &kever.trunk[sn..];
        let rotation = matches!(event.ilk(), Ilk::Rot | Ilk::Drt);
        if rotation && !branch.iter().any(|a| a.event.is_establishment()) {
            // rotation over interactions: recovery
            return match verified {
                Ok((state, authority)) => Decision::Supersede { state, authority },
                Err(r) => reject(r),
            };
        }
        if event.ilk() == Ilk::Drt && branch[0].event.ilk() == Ilk::Drt {
            let (state, authority) = match verified {
                Ok(v) => v,
                Err(r) => return reject(r),
            };
            let superseded = branch.iter().filter_map(|a| a.delegator_authority).max();
            return match (authority, superseded) {
                (Some(new), Some(old)) if new > old => Decision::Supersede { state, authority },
                _ => reject(Rejection::StaleDelegatorAuthority),
            };
        }
        match verified {
            Ok(_) => Decision::Done(Disposition::Duplicitous),
            Err(r) => reject(r),
        }
    }
}

/// Establishment data for a new rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSpec {
    pub sith: SigningThreshold,
    pub keys: Vec<Matter>,
    pub next: Option<Matter>,
    pub toad: u64,
    pub cuts: Vec<Prefix>,
    pub adds: Vec<Prefix>,
    pub seals: Vec<Seal>,
}

impl RotationSpec {
    /// Same witnesses and tally as `state`.
    pub fn keeping_witnesses(state: &KeyState, sith: SigningThreshold, keys: Vec<Matter>, next: Option<Matter>) -> Self {
        Self { sith, keys, next, toad: state.toad, cuts: vec![], adds: vec![], seals: vec![] }
    }
}

/// Unsigned rotation following `state`.
pub fn build_rotation(state: &KeyState, spec: RotationSpec, delegator: Option<LocationSeal>, kind: SerialKind) -> KeyEvent {
    KeyEvent {
        kind,
        prefix: state.prefix.clone(),
        sn: state.sn + 1,
        prior: Some(state.digest.clone()),
        body: EventBody::Rotation(Rotation {
            sith: spec.sith,
            keys: spec.keys,
            next: spec.next,
            toad: spec.toad,
            cuts: spec.cuts,
            adds: spec.adds,
            seals: spec.seals,
            delegator,
        }),
    }
}

/// Unsigned interaction following `state`.
pub fn build_interaction(state: &KeyState, seals: Vec<Seal>, kind: SerialKind) -> KeyEvent {
    KeyEvent {
        kind,
        prefix: state.prefix.clone(),
        sn: state.sn + 1,
        prior: Some(state.digest.clone()),
        body: EventBody::Interaction { seals },
    }
}

/// What the delegator does in the delegating event.
#[derive(Debug, Clone)]
pub enum DelegatingKind {
    Interaction,
    Rotation(RotationSpec),
}

/// An event to be delegated.
#[derive(Debug, Clone)]
pub enum Delegated {
    /// A new delegated identifier; the seed's delegator field is filled in.
    Inception { seed: InceptionSeed, digest_code: &'static str },
    Rotation { state: KeyState, spec: RotationSpec },
}

/// Build a delegating event and the events it delegates so that each pair
/// cross-anchors: the delegated events carry the delegating event's
/// location and the delegating event seals each delegated event's digest.
pub fn generate_delegation(
    delegator: &KeyState,
    kind: DelegatingKind,
    delegated: Vec<Delegated>,
    serial: SerialKind,
) -> Result<(KeyEvent, Vec<KeyEvent>), EventError> {
    // partial delegating event: prefix, sn, ilk and prior digest are fixed
    let mut delegating = match kind {
        DelegatingKind::Interaction => build_interaction(delegator, vec![], serial),
        DelegatingKind::Rotation(spec) => build_rotation(delegator, spec, None, serial),
    };
    let location = delegating.location_seal().expect("delegating event follows an existing state");
    let mut out = Vec::with_capacity(delegated.len());
    for d in delegated {
        let event = match d {
            Delegated::Inception { mut seed, digest_code } => {
                seed.delegator = Some(location.clone());
                let prefix = identifier::derive_self_addressing(&seed, digest_code)?;
                seed.event(prefix, serial)
            }
            Delegated::Rotation { state, spec } => build_rotation(&state, spec, Some(location.clone()), serial),
        };
        let digest = event.digest(EVENT_DIGEST)?;
        let seal = Seal::Event(EventSeal { prefix: event.prefix.clone(), sn: event.sn, digest });
        match &mut delegating.body {
            EventBody::Interaction { seals } => seals.push(seal),
            EventBody::Rotation(r) => r.seals.push(seal),
            EventBody::Inception(_) => unreachable!("delegating events are never inceptions"),
        }
        out.push(event);
    }
    Ok((delegating, out))
}

pub fn generate_delegation_pair(
    delegator: &KeyState,
    kind: DelegatingKind,
    delegated: Delegated,
    serial: SerialKind,
) -> Result<(KeyEvent, KeyEvent), EventError> {
    let (delegating, mut events) = generate_delegation(delegator, kind, vec![delegated], serial)?;
    Ok((delegating, events.remove(0)))
}
