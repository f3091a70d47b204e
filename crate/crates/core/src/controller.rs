//! Controller-side event creation: holds signing keys and the pre-rotated
//! next keys, builds and signs events, and tracks its own key state.

use crate::crypto::Signer;
use crate::engine::{
    build_interaction, build_rotation, generate_delegation_pair, verify_inception, verify_next, Delegated,
    DelegatingKind, KeyState, RotationSpec, EVENT_DIGEST,
};
use crate::error::{EventError, IdentifierError, Rejection};
use crate::event::{self, next_digest, KeyEvent, Seal, SerialKind};
use crate::identifier::{derive_self_addressing, InceptionSeed, Prefix};
use crate::matter::{IndexedSignature, Matter};
use crate::threshold::SigningThreshold;

#[derive(Debug, thiserror::Error)]
pub enum ControllerError {
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Identifier(#[from] IdentifierError),
    #[error("own event failed verification: {0}")]
    Rejected(#[from] Rejection),
    #[error("identifier has been abandoned")]
    Abandoned,
    #[error("too many keys for indexed signatures")]
    TooManyKeys,
    #[error("stored keys do not match the key state")]
    KeyMismatch,
}

/// An event with its attached controller signatures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedEvent {
    pub event: KeyEvent,
    pub sigs: Vec<IndexedSignature>,
}

impl SignedEvent {
    pub fn framed(&self) -> Result<Vec<u8>, EventError> {
        event::frame(&self.event.serialize()?, &self.sigs)
    }
}

/// Initial key configuration of a new identifier.
#[derive(Debug, Clone)]
pub struct KeyPlan {
    pub signers: Vec<Signer>,
    pub sith: SigningThreshold,
    pub next: Vec<Signer>,
    pub next_sith: SigningThreshold,
    pub witnesses: Vec<Prefix>,
    pub toad: u64,
    pub config: Vec<String>,
}

impl KeyPlan {
    /// Threshold 1 over one key, one pre-rotated key, no witnesses.
    pub fn single(signer: Signer, next: Signer) -> Self {
        Self {
            signers: vec![signer],
            sith: SigningThreshold::Count(1),
            next: vec![next],
            next_sith: SigningThreshold::Count(1),
            witnesses: vec![],
            toad: 0,
            config: vec![],
        }
    }

    fn seed(&self) -> Result<InceptionSeed, ControllerError> {
        Ok(InceptionSeed {
            sith: self.sith.clone(),
            keys: self.signers.iter().map(Signer::verfer).collect(),
            next: commitment(&self.next_sith, &self.next)?,
            toad: self.toad,
            witnesses: self.witnesses.clone(),
            config: self.config.clone(),
            delegator: None,
        })
    }
}

fn commitment(sith: &SigningThreshold, next: &[Signer]) -> Result<Option<Matter>, ControllerError> {
    if next.is_empty() {
        return Ok(None);
    }
    let keys: Vec<Matter> = next.iter().map(Signer::verfer).collect();
    Ok(Some(next_digest(sith, &keys, EVENT_DIGEST)?))
}

fn sign_all(signers: &[Signer], raw: &[u8]) -> Result<Vec<IndexedSignature>, ControllerError> {
    if signers.len() > 64 {
        return Err(ControllerError::TooManyKeys);
    }
    Ok(signers.iter().enumerate().map(|(i, s)| s.sign_indexed(raw, i as u32)).collect())
}

#[derive(Debug, Clone)]
pub struct Controller {
    signers: Vec<Signer>,
    next: Vec<Signer>,
    next_sith: SigningThreshold,
    state: KeyState,
    kind: SerialKind,
}

impl Controller {
    /// Create a self-addressing identifier and its signed inception.
    pub fn incept(plan: KeyPlan, kind: SerialKind) -> Result<(Self, SignedEvent), ControllerError> {
        let seed = plan.seed()?;
        let prefix = derive_self_addressing(&seed, EVENT_DIGEST)?;
        let event = seed.event(prefix, kind);
        let raw = event.serialize()?;
        let sigs = sign_all(&plan.signers, &raw)?;
        let state = verify_inception(&event, &raw, &sigs)?;
        let me = Self { signers: plan.signers, next: plan.next, next_sith: plan.next_sith, state, kind };
        Ok((me, SignedEvent { event, sigs }))
    }

    /// Rebuild a controller from stored keys and a verified key state.
    pub fn resume(
        signers: Vec<Signer>,
        next: Vec<Signer>,
        next_sith: SigningThreshold,
        state: KeyState,
        kind: SerialKind,
    ) -> Result<Self, ControllerError> {
        let keys: Vec<Matter> = signers.iter().map(Signer::verfer).collect();
        if keys != state.keys || commitment(&next_sith, &next)? != state.next {
            return Err(ControllerError::KeyMismatch);
        }
        Ok(Self { signers, next, next_sith, state, kind })
    }

    pub fn prefix(&self) -> &Prefix {
        &self.state.prefix
    }

    pub fn state(&self) -> &KeyState {
        &self.state
    }

    pub fn kind(&self) -> SerialKind {
        self.kind
    }

    pub fn signers(&self) -> &[Signer] {
        &self.signers
    }

    /// Sign `event` with every current key.
    pub fn sign(&self, event: &KeyEvent) -> Result<Vec<IndexedSignature>, ControllerError> {
        sign_all(&self.signers, &event.serialize()?)
    }

    fn advance(&mut self, event: KeyEvent, signers: &[Signer]) -> Result<SignedEvent, ControllerError> {
        let raw = event.serialize()?;
        let sigs = sign_all(signers, &raw)?;
        self.state = verify_next(&self.state, &event, &raw, &sigs)?;
        Ok(SignedEvent { event, sigs })
    }

    fn rotation_spec(&self, new_next: &[Signer], new_next_sith: &SigningThreshold, seals: Vec<Seal>) -> Result<RotationSpec, ControllerError> {
        if self.state.abandoned() {
            return Err(ControllerError::Abandoned);
        }
        Ok(RotationSpec {
            seals,
            ..RotationSpec::keeping_witnesses(
                &self.state,
                self.next_sith.clone(),
                self.next.iter().map(Signer::verfer).collect(),
                commitment(new_next_sith, new_next)?,
            )
        })
    }

    fn promote(&mut self, new_next: Vec<Signer>, new_next_sith: SigningThreshold) {
        self.signers = std::mem::replace(&mut self.next, new_next);
        self.next_sith = new_next_sith;
    }

    /// Rotate to the pre-rotated keys and commit to `new_next`. An empty
    /// `new_next` abandons the identifier.
    pub fn rotate(&mut self, new_next: Vec<Signer>, new_next_sith: SigningThreshold) -> Result<SignedEvent, ControllerError> {
        self.rotate_with(new_next, new_next_sith, |spec| spec)
    }

    /// Rotation with caller adjustments (witness changes, seals).
    pub fn rotate_with(
        &mut self,
        new_next: Vec<Signer>,
        new_next_sith: SigningThreshold,
        adjust: impl FnOnce(RotationSpec) -> RotationSpec,
    ) -> Result<SignedEvent, ControllerError> {
        let spec = adjust(self.rotation_spec(&new_next, &new_next_sith, vec![])?);
        let event = build_rotation(&self.state, spec, None, self.kind);
        let next_signers = self.next.clone();
        let signed = self.advance(event, &next_signers)?;
        self.promote(new_next, new_next_sith);
        Ok(signed)
    }

    pub fn interact(&mut self, seals: Vec<Seal>) -> Result<SignedEvent, ControllerError> {
        if self.state.abandoned() {
            return Err(ControllerError::Abandoned);
        }
        let event = build_interaction(&self.state, seals, self.kind);
        let signers = self.signers.clone();
        self.advance(event, &signers)
    }

    /// Delegate a new identifier. The delegating event is an interaction,
    /// or a rotation when `rotate_to` gives the delegator's next commitment.
    pub fn delegate(
        &mut self,
        plan: KeyPlan,
        rotate_to: Option<(Vec<Signer>, SigningThreshold)>,
    ) -> Result<(Controller, SignedEvent, SignedEvent), ControllerError> {
        let seed = plan.seed()?;
        let delegated = Delegated::Inception { seed, digest_code: EVENT_DIGEST };
        let (delegating, dip) = self.delegating_pair(delegated, rotate_to)?;
        let raw = dip.serialize()?;
        let sigs = sign_all(&plan.signers, &raw)?;
        let state = verify_inception(&dip, &raw, &sigs)?;
        let child = Controller { signers: plan.signers, next: plan.next, next_sith: plan.next_sith, state, kind: self.kind };
        Ok((child, delegating, SignedEvent { event: dip, sigs }))
    }

    /// Rotate a delegated identifier, anchored by a new event of
    /// `delegator`.
    pub fn delegated_rotate(
        &mut self,
        delegator: &mut Controller,
        new_next: Vec<Signer>,
        new_next_sith: SigningThreshold,
        delegator_rotate_to: Option<(Vec<Signer>, SigningThreshold)>,
    ) -> Result<(SignedEvent, SignedEvent), ControllerError> {
        let spec = self.rotation_spec(&new_next, &new_next_sith, vec![])?;
        let delegated = Delegated::Rotation { state: self.state.clone(), spec };
        let (delegating, drt) = delegator.delegating_pair(delegated, delegator_rotate_to)?;
        let next_signers = self.next.clone();
        let signed = self.advance(drt, &next_signers)?;
        self.promote(new_next, new_next_sith);
        Ok((delegating, signed))
    }

    fn delegating_pair(
        &mut self,
        delegated: Delegated,
        rotate_to: Option<(Vec<Signer>, SigningThreshold)>,
    ) -> Result<(SignedEvent, KeyEvent), ControllerError> {
        match rotate_to {
            None => {
                if self.state.abandoned() {
                    return Err(ControllerError::Abandoned);
                }
                let (ixn, child) = generate_delegation_pair(&self.state, DelegatingKind::Interaction, delegated, self.kind)?;
                let signers = self.signers.clone();
                Ok((self.advance(ixn, &signers)?, child))
            }
            Some((new_next, new_next_sith)) => {
                let spec = self.rotation_spec(&new_next, &new_next_sith, vec![])?;
                let (rot, child) = generate_delegation_pair(&self.state, DelegatingKind::Rotation(spec), delegated, self.kind)?;
                let next_signers = self.next.clone();
                let signed = self.advance(rot, &next_signers)?;
                self.promote(new_next, new_next_sith);
                Ok((signed, child))
            }
        }
    }

    /// Pre-rotated signers; exposed for compromise simulations.
    pub fn next_signers(&self) -> &[Signer] {
        &self.next
    }
}
