use keri_core::controller::{Controller, KeyPlan, SignedEvent};
use keri_core::crypto::{self, Signer};
use keri_core::engine::{Disposition, Engine, EVENT_DIGEST};
use keri_core::event::{self, DigestSeal, KeyEvent, Message, Seal, SerialKind};
use keri_core::logs::{Clock, Kerl, LogConfig};
use keri_core::SigningThreshold;
use proptest::prelude::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn signer(rng: &mut ChaCha8Rng) -> Signer {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    Signer::from_seed(seed, true)
}

fn seal(rng: &mut ChaCha8Rng) -> Seal {
    let mut b = [0u8; 16];
    rng.fill_bytes(&mut b);
    Seal::Digest(DigestSeal { d: crypto::digest(EVENT_DIGEST, &b).unwrap() })
}

fn kind(n: u8) -> SerialKind {
    [SerialKind::Json, SerialKind::Cbor, SerialKind::Mgpk][n as usize % 3]
}

/// A random valid log: inception then a mix of rotations and interactions.
fn random_log(seed: u64, len: usize, serial: SerialKind) -> (Controller, Vec<SignedEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = rng.gen_range(1..=3);
    let plan = KeyPlan {
        signers: (0..keys).map(|_| signer(&mut rng)).collect(),
        sith: SigningThreshold::Count(1),
        next: (0..keys).map(|_| signer(&mut rng)).collect(),
        next_sith: SigningThreshold::Count(1),
        witnesses: vec![],
        toad: 0,
        config: vec![],
    };
    let (mut ctl, icp) = Controller::incept(plan, serial).unwrap();
    let mut log = vec![icp];
    for _ in 1..len {
        let e = if rng.gen_bool(0.4) {
            let n = rng.gen_range(1..=3);
            ctl.rotate((0..n).map(|_| signer(&mut rng)).collect(), SigningThreshold::Count(1)).unwrap()
        } else {
            let seals = (0..rng.gen_range(0..3)).map(|_| seal(&mut rng)).collect();
            ctl.interact(seals).unwrap()
        };
        log.push(e);
    }
    (ctl, log)
}

fn logical() -> Kerl {
    Kerl::with_config(LogConfig { clock: Clock::logical(), ..LogConfig::default() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn events_survive_serialization(seed in any::<u64>(), len in 1usize..6, k in 0u8..3) {
        let (_, log) = random_log(seed, len, kind(k));
        for e in &log {
            let raw = e.event.serialize().unwrap();
            let vs = event::sniff(&raw).unwrap();
            prop_assert_eq!(vs.size, raw.len());
            prop_assert_eq!(KeyEvent::deserialize(&raw).unwrap(), e.event.clone());
        }
    }

    #[test]
    fn framed_streams_split_back_into_messages(seed in any::<u64>(), len in 1usize..6, k in 0u8..3) {
        let (_, log) = random_log(seed, len, kind(k));
        let mut stream = Vec::new();
        for e in &log {
            stream.extend(e.framed().unwrap());
        }
        let parsed = event::parse_stream(&stream).unwrap();
        prop_assert_eq!(parsed.len(), log.len());
        for (p, e) in parsed.iter().zip(&log) {
            match &p.message {
                Message::Event(got) => prop_assert_eq!(got, &e.event),
                other => prop_assert!(false, "unexpected {:?}", other),
            }
            prop_assert_eq!(&p.sigs, &e.sigs);
        }
    }

    #[test]
    fn replay_is_deterministic(seed in any::<u64>(), len in 1usize..7) {
        let (ctl, log) = random_log(seed, len, SerialKind::Json);
        let mut a = logical();
        let mut b = logical();
        for e in &log {
            a.append(&e.event, &e.sigs).unwrap();
            b.append(&e.event, &e.sigs).unwrap();
        }
        prop_assert_eq!(a.journal_digest(a.journal_len()), b.journal_digest(b.journal_len()));
        prop_assert_eq!(a.replay_verify(ctl.prefix()).unwrap(), ctl.state().clone());
    }

    #[test]
    fn arrival_order_does_not_change_final_state(seed in any::<u64>(), len in 2usize..7) {
        let (ctl, log) = random_log(seed, len, SerialKind::Json);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut order: Vec<usize> = (0..log.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut engine = Engine::new();
        for i in order {
            engine.process(&log[i].event, &log[i].sigs);
        }
        prop_assert_eq!(engine.state(ctl.prefix()), Some(ctl.state()));
        prop_assert_eq!(engine.out_of_order_len(), 0);
    }

    #[test]
    fn first_seen_version_is_never_replaced(seed in any::<u64>(), len in 2usize..6, alternates in 1usize..4) {
        let (_, log) = random_log(seed, len, SerialKind::Json);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let mut kerl = logical();
        for e in &log {
            kerl.append(&e.event, &e.sigs).unwrap();
        }
        let prefix = log[0].event.prefix.clone();
        let before: Vec<_> = kerl.engine().kever(&prefix).unwrap().trunk.iter().map(|a| a.digest.clone()).collect();
        let times: Vec<String> = before.iter().map(|d| kerl.first_seen(d).unwrap().to_string()).collect();
        // alternates of the last interaction, signed by the keys in force
        let last = log.last().unwrap();
        if !last.event.is_establishment() {
            let state_before = &kerl.engine().kever(&prefix).unwrap().trunk[last.event.sn as usize - 1].state.clone();
            let signers_now = replay_signers(seed, len);
            for _ in 0..alternates {
                let alt = keri_core::engine::build_interaction(state_before, vec![seal(&mut rng)], SerialKind::Json);
                let raw = alt.serialize().unwrap();
                let sigs: Vec<_> = signers_now.iter().enumerate().map(|(i, s)| s.sign_indexed(&raw, i as u32)).collect();
                let reports = kerl.append(&alt, &sigs).unwrap();
                prop_assert_eq!(&reports[0].disposition, &Disposition::Duplicitous);
            }
        }
        let after: Vec<_> = kerl.engine().kever(&prefix).unwrap().trunk.iter().map(|a| a.digest.clone()).collect();
        prop_assert_eq!(&before, &after);
        for (d, t) in after.iter().zip(&times) {
            prop_assert_eq!(kerl.first_seen(d).unwrap(), t.as_str());
        }
    }
}

/// Current signers at the end of `random_log(seed, len, _)`.
fn replay_signers(seed: u64, len: usize) -> Vec<Signer> {
    let (ctl, _) = random_log(seed, len, SerialKind::Json);
    ctl.signers().to_vec()
}
