//! Independent oracles and whole-criterion checks shared by the
//! integration tests and the acceptance report.

#![allow(dead_code)]

use keri_core::controller::{Controller, KeyPlan, SignedEvent};
use keri_core::crypto::Signer;
use keri_core::engine::{build_rotation, Disposition, Engine, RotationSpec, EVENT_DIGEST};
use keri_core::event::{next_digest, SerialKind};
use keri_core::kace::{classify, immune_split_check, table};
use keri_core::matter::{CountCode, CountKind, IndexedSignature, Matter, SigScheme, MATTER_CODES};
use keri_core::netsim::{run_attack, run_round_robin, AttackKind, FaultMode, Verdict};
use keri_core::SigningThreshold;
use num_rational::Ratio;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

const ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

/// Plain URL-safe Base64 without padding, bit by bit.
pub fn b64url(data: &[u8]) -> String {
    let mut out = String::new();
    let mut acc: u32 = 0;
    let mut bits = 0;
    for &b in data {
        acc = (acc << 8) | b as u32;
        bits += 8;
        while bits >= 6 {
            bits -= 6;
            out.push(ALPHABET[((acc >> bits) & 63) as usize] as char);
        }
    }
    if bits > 0 {
        out.push(ALPHABET[((acc << (6 - bits)) & 63) as usize] as char);
    }
    out
}

pub fn b64_digits(value: u32, width: usize) -> String {
    (0..width).rev().map(|i| ALPHABET[((value >> (6 * i)) & 63) as usize] as char).collect()
}

/// (code, raw bytes, text length, binary length) as published.
pub const PUBLISHED_LENGTHS: &[(&str, usize, usize, usize)] = &[
    ("A", 32, 44, 33),
    ("B", 32, 44, 33),
    ("C", 32, 44, 33),
    ("D", 32, 44, 33),
    ("E", 32, 44, 33),
    ("F", 32, 44, 33),
    ("G", 32, 44, 33),
    ("H", 32, 44, 33),
    ("I", 32, 44, 33),
    ("J", 32, 44, 33),
    ("K", 56, 76, 57),
    ("L", 56, 76, 57),
    ("0A", 16, 24, 18),
    ("0B", 64, 88, 66),
    ("0C", 64, 88, 66),
    ("0D", 64, 88, 66),
    ("0E", 64, 88, 66),
    ("0F", 64, 88, 66),
    ("0G", 64, 88, 66),
    ("1AAA", 33, 48, 36),
    ("1AAB", 33, 48, 36),
    ("1AAC", 57, 80, 60),
    ("1AAD", 57, 80, 60),
    ("1AAE", 114, 156, 117),
];

/// (scheme, code prefix, index width, raw bytes, text length, binary length).
pub const PUBLISHED_SIG_LENGTHS: &[(SigScheme, &str, usize, usize, usize, usize)] = &[
    (SigScheme::Ed25519, "A", 1, 64, 88, 66),
    (SigScheme::EcdsaSecp256k1, "B", 1, 64, 88, 66),
    (SigScheme::Ed448, "0A", 2, 114, 156, 117),
];

pub fn codec_suite(cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    if MATTER_CODES.len() != PUBLISHED_LENGTHS.len() {
        return Err(format!("{} registered codes, {} published", MATTER_CODES.len(), PUBLISHED_LENGTHS.len()));
    }
    let mut total = 0;
    for &(code, raw_size, text_len, bin_len) in PUBLISHED_LENGTHS {
        let row = MATTER_CODES.iter().find(|r| r.code == code).ok_or(format!("{code} not registered"))?;
        if row.raw_size != raw_size {
            return Err(format!("{code}: raw size {} != {raw_size}", row.raw_size));
        }
        for _ in 0..cases {
            let mut raw = vec![0u8; raw_size];
            rng.fill_bytes(&mut raw);
            let m = Matter::new(code, raw.clone()).map_err(|e| format!("{code}: {e}"))?;
            let text = m.qb64();
            let expected = format!("{code}{}", b64url(&raw));
            if text != expected {
                return Err(format!("{code}: encoded {text} expected {expected}"));
            }
            if text.len() != text_len || m.qb2().len() != bin_len {
                return Err(format!("{code}: lengths {} / {}", text.len(), m.qb2().len()));
            }
            let back = Matter::from_qb64(&text).map_err(|e| format!("{code}: decode {e}"))?;
            if back != m {
                return Err(format!("{code}: round trip changed value"));
            }
            // trailing material is left for the next parser
            let (again, used) = Matter::parse(&format!("{text}{text}")).map_err(|e| e.to_string())?;
            if again != m || used != text_len {
                return Err(format!("{code}: stream parse consumed {used}"));
            }
            total += 1;
        }
    }
    for &(scheme, prefix, width, raw_size, text_len, bin_len) in PUBLISHED_SIG_LENGTHS {
        for _ in 0..cases {
            let index = rng.gen_range(0..64u32);
            let mut raw = vec![0u8; raw_size];
            rng.fill_bytes(&mut raw);
            let sig = IndexedSignature::new(scheme, index, raw.clone()).map_err(|e| e.to_string())?;
            let text = sig.qb64();
            let expected = format!("{prefix}{}{}", b64_digits(index, width), b64url(&raw));
            if text != expected || text.len() != text_len || text.len() * 3 / 4 != bin_len {
                return Err(format!("{prefix}: encoded {text}"));
            }
            let back = IndexedSignature::from_qb64(&text).map_err(|e| e.to_string())?;
            if back != sig {
                return Err(format!("{prefix}: round trip changed value"));
            }
            total += 1;
        }
    }
    for count in 0..=4095u32 {
        let c = CountCode::new(CountKind::AttachedSignatures, count).map_err(|e| e.to_string())?;
        let text = c.qb64();
        if text != format!("-A{}", b64_digits(count, 2)) {
            return Err(format!("count {count} encoded {text}"));
        }
        if CountCode::parse(&text, CountKind::AttachedSignatures).map_err(|e| e.to_string())? != c {
            return Err(format!("count {count} round trip"));
        }
        total += 1;
    }
    Ok(format!("{total} cases, {} material codes, {} signature codes", PUBLISHED_LENGTHS.len(), PUBLISHED_SIG_LENGTHS.len()))
}

/// (F, N, 3F+1, lower, upper, M values) as published.
pub const PUBLISHED_TALLIES: &[(u32, u32, u32, u32, u32, &[u32])] = &[
    (1, 4, 4, 3, 3, &[3]),
    (1, 5, 4, 4, 4, &[4]),
    (1, 6, 4, 4, 5, &[4, 5]),
    (1, 7, 4, 5, 6, &[5, 6]),
    (1, 8, 4, 5, 7, &[5, 6, 7]),
    (1, 9, 4, 6, 8, &[6, 7, 8]),
    (2, 7, 7, 5, 5, &[5]),
    (2, 8, 7, 6, 6, &[6]),
    (2, 9, 7, 6, 7, &[6, 7]),
    (2, 10, 7, 7, 8, &[7, 8]),
    (2, 11, 7, 7, 9, &[7, 8, 9]),
    (2, 12, 7, 8, 10, &[8, 9, 10]),
    (3, 10, 10, 7, 7, &[7]),
    (3, 11, 10, 8, 8, &[8]),
    (3, 12, 10, 8, 9, &[8, 9]),
    (3, 13, 10, 9, 10, &[9, 10]),
    (3, 14, 10, 9, 11, &[9, 10, 11]),
    (3, 15, 10, 10, 12, &[10, 11, 12]),
];

pub fn tally_table() -> Check {
    let rows: Vec<_> = (1..=3).flat_map(table).collect();
    if rows.len() != PUBLISHED_TALLIES.len() {
        return Err(format!("{} rows", rows.len()));
    }
    for (row, &(f, n, t, lo, hi, ms)) in rows.iter().zip(PUBLISHED_TALLIES) {
        let got = (row.f, row.n, row.three_f_plus_one, row.lower, row.upper, row.m.as_slice());
        if got != (f, n, t, lo, hi, ms) {
            return Err(format!("row F={f} N={n}: got {got:?}"));
        }
        let c = classify(n, f);
        if !c.intact || c.proper_bound != f + 1 {
            return Err(format!("row F={f} N={n}: classification {c:?}"));
        }
    }
    Ok(format!("{} rows", rows.len()))
}

pub fn immune_oracle() -> Check {
    let mut checked = 0;
    for n in 1..=12u32 {
        for f in 0..=3u32 {
            for m in 1..=n {
                let closed = m >= (n + f + 1).div_ceil(2);
                if immune_split_check(n, f, m) != closed {
                    return Err(format!("N={n} F={f} M={m}: brute force disagrees"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (N, F, M) triples"))
}

pub fn round_robin_bound() -> Check {
    let mut report = Vec::new();
    for n in 3..=7usize {
        let run = run_round_robin(n as u64, &vec![FaultMode::Honest; n], None, 3).map_err(|e| e.to_string())?;
        for (i, (&x, &done)) in run.exchanges.iter().zip(&run.complete).enumerate() {
            if x > 2 * n || !done {
                return Err(format!("N={n} event {i}: {x} exchanges, complete={done}"));
            }
        }
        report.push(format!("N={n}:{}", run.exchanges.iter().max().copied().unwrap_or(0)));
    }
    Ok(format!("max exchanges {}", report.join(" ")))
}

pub fn recovery_labels() -> Check {
    let (verdict, sim) = run_attack(AttackKind::SigningCompromiseRecovery, 11).map_err(|e| e.to_string())?;
    let mut trunk = vec!["icp".to_string()];
    trunk.extend(std::iter::repeat_n("ixn".to_string(), 6));
    trunk.push("rot".into());
    let expected = Verdict::Recovered { trunk, disputed: vec![7, 8, 9], accountable: vec![7, 8] };
    if verdict != expected {
        return Err(format!("{verdict:?}"));
    }
    if !sim.converged("ctl") {
        return Err("honest witnesses did not converge on the recovery rotation".into());
    }
    Ok("trunk icp+6 ixn+rot, disputed 7 8 9, accountable 7 8".into())
}

fn signers(rng: &mut ChaCha8Rng, n: usize) -> Vec<Signer> {
    (0..n)
        .map(|_| {
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            Signer::from_seed(seed, true)
        })
        .collect()
}

fn verfers(s: &[Signer]) -> Vec<keri_core::Matter> {
    s.iter().map(Signer::verfer).collect()
}

fn sign_with(raw: &[u8], by: &[Signer]) -> Vec<IndexedSignature> {
    by.iter().enumerate().map(|(i, s)| s.sign_indexed(raw, i as u32)).collect()
}

pub fn prerotation_fuzz(cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf022);
    let current = signers(&mut rng, 1);
    let next = signers(&mut rng, 2);
    let next_sith = SigningThreshold::Count(2);
    let plan = KeyPlan { next: next.clone(), next_sith: next_sith.clone(), ..KeyPlan::single(current[0].clone(), next[0].clone()) };
    let (ctl, icp) = Controller::incept(plan, SerialKind::Json).map_err(|e| e.to_string())?;
    let mut base = Engine::new();
    if base.process_one(&icp.event, &icp.sigs) != Disposition::AcceptedFirstSeen {
        return Err("inception refused".into());
    }
    let state = ctl.state().clone();
    let rotation = |sith: SigningThreshold, keys: Vec<keri_core::Matter>, commit| {
        build_rotation(&state, RotationSpec::keeping_witnesses(&state, sith, keys, commit), None, SerialKind::Json)
    };
    let mut kinds = [0usize; 5];
    for case in 0..cases {
        let after = signers(&mut rng, 1);
        let commit = Some(next_digest(&SigningThreshold::Count(1), &verfers(&after), EVENT_DIGEST).map_err(|e| e.to_string())?);
        let kind = case % 5;
        kinds[kind] += 1;
        let mut holders = next.clone();
        let (event, sigs) = match kind {
            // a key not committed to
            0 => {
                let j = rng.gen_range(0..2);
                holders[j] = signers(&mut rng, 1).remove(0);
                let e = rotation(next_sith.clone(), verfers(&holders), commit);
                let raw = e.serialize().map_err(|e| e.to_string())?;
                (e.clone(), sign_with(&raw, &holders))
            }
            // committed keys in the wrong order
            1 => {
                holders.swap(0, 1);
                let e = rotation(next_sith.clone(), verfers(&holders), commit);
                let raw = e.serialize().map_err(|e| e.to_string())?;
                (e.clone(), sign_with(&raw, &holders))
            }
            // a threshold other than the committed one
            2 => {
                let sith = match rng.gen_range(0..3) {
                    0 => SigningThreshold::Count(1),
                    1 => SigningThreshold::weighted(&["1/2", "1/2"]).expect("valid"),
                    _ => SigningThreshold::weighted(&["1", "1/3"]).expect("valid"),
                };
                let e = rotation(sith, verfers(&holders), commit);
                let raw = e.serialize().map_err(|e| e.to_string())?;
                (e.clone(), sign_with(&raw, &holders))
            }
            // prior event digest altered
            3 => {
                let mut e = rotation(next_sith.clone(), verfers(&holders), commit);
                let mut bytes = [0u8; 32];
                rng.fill_bytes(&mut bytes);
                e.prior = Some(Matter::new(EVENT_DIGEST, bytes.to_vec()).map_err(|e| e.to_string())?);
                let raw = e.serialize().map_err(|e| e.to_string())?;
                (e.clone(), sign_with(&raw, &holders))
            }
            // an extra key appended
            _ => {
                holders.push(signers(&mut rng, 1).remove(0));
                let e = rotation(next_sith.clone(), verfers(&holders), commit);
                let raw = e.serialize().map_err(|e| e.to_string())?;
                (e.clone(), sign_with(&raw, &holders))
            }
        };
        let d = base.clone().process_one(&event, &sigs);
        if !matches!(d, Disposition::Rejected(_)) {
            return Err(format!("case {case} (mutation {kind}) was {d}"));
        }
    }
    let control = rotation(
        next_sith.clone(),
        verfers(&next),
        Some(next_digest(&SigningThreshold::Count(1), &verfers(&signers(&mut rng, 1)), EVENT_DIGEST).map_err(|e| e.to_string())?),
    );
    let raw = control.serialize().map_err(|e| e.to_string())?;
    let d = base.clone().process_one(&control, &sign_with(&raw, &next));
    if d != Disposition::AcceptedFirstSeen {
        return Err(format!("control rotation was {d}"));
    }
    Ok(format!("{cases} mutants rejected {kinds:?}, control accepted"))
}

fn ratio(text: &str) -> Ratio<i64> {
    match text.split_once('/') {
        Some((n, d)) => Ratio::new(n.parse().expect("int"), d.parse().expect("int")),
        None => Ratio::from_integer(text.parse().expect("int")),
    }
}

/// Subset meets every clause: each clause's weights of the signing
/// offsets that fall in it sum to one or more.
fn oracle_satisfies(clauses: &[Vec<&str>], mask: u32) -> bool {
    let mut offset = 0;
    clauses.iter().all(|clause| {
        let sum: Ratio<i64> = clause
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> (offset + i) & 1 == 1)
            .map(|(_, w)| ratio(w))
            .sum();
        offset += clause.len();
        sum >= Ratio::from_integer(1)
    })
}

pub fn published_thresholds() -> Vec<Vec<Vec<&'static str>>> {
    vec![
        vec![vec!["1/2", "1/2", "1/2"]],
        vec![vec!["1/2", "1/2", "1/4", "1/4", "1/4", "1/4"]],
        vec![vec!["1/2", "1/2", "1/4", "1/4", "1/4", "1/4"], vec!["1/2", "1/2", "1/2", "1/2"], vec!["1", "1", "1", "1"]],
    ]
}

pub fn weighted_oracle() -> Check {
    let mut subsets = 0usize;
    for clauses in published_thresholds() {
        let threshold = if clauses.len() == 1 {
            SigningThreshold::weighted(&clauses[0])
        } else {
            SigningThreshold::clauses(&clauses)
        }
        .map_err(|e| e.to_string())?;
        let n: usize = clauses.iter().map(Vec::len).sum();
        for mask in 0..(1u32 << n) {
            let indices = (0..n).filter(|i| mask >> i & 1 == 1);
            let got = threshold.satisfies(n, indices).map_err(|e| e.to_string())?;
            if got != oracle_satisfies(&clauses, mask) {
                return Err(format!("{clauses:?} subset {mask:b}: implementation says {got}"));
            }
            subsets += 1;
        }
    }
    Ok(format!("{subsets} subsets over 3 thresholds"))
}

/// Rotate through key counts `lens` (inception uses lens[0]) and return
/// the first key index of every establishment event as tracked by an
/// engine fed the resulting log.
pub fn key_indices(lens: &[usize], rng: &mut ChaCha8Rng) -> Result<Vec<u64>, String> {
    let mut sets: Vec<Vec<Signer>> = lens.iter().map(|&l| signers(rng, l)).collect();
    sets.push(signers(rng, 1));
    let plan = KeyPlan {
        signers: sets[0].clone(),
        sith: SigningThreshold::Count(1),
        next: sets[1].clone(),
        next_sith: SigningThreshold::Count(1),
        witnesses: vec![],
        toad: 0,
        config: vec![],
    };
    let (mut ctl, icp) = Controller::incept(plan, SerialKind::Json).map_err(|e| e.to_string())?;
    let mut events: Vec<SignedEvent> = vec![icp];
    for set in &sets[2..] {
        events.push(ctl.rotate(set.clone(), SigningThreshold::Count(1)).map_err(|e| e.to_string())?);
    }
    let mut engine = Engine::new();
    for e in &events {
        let d = engine.process_one(&e.event, &e.sigs);
        if !d.accepted() {
            return Err(format!("event {} was {d}", e.event.sn));
        }
    }
    let kever = engine.kever(ctl.prefix()).ok_or("no log")?;
    Ok(kever.establishments().map(|a| a.state.first_key_index).collect())
}

pub fn key_index_law(sequences: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1de);
    let fixed = key_indices(&[1, 3, 3, 4, 2], &mut rng)?;
    if fixed != [0, 1, 4, 7, 11] {
        return Err(format!("fixed vector gave {fixed:?}"));
    }
    for s in 0..sequences {
        let len = rng.gen_range(1..=6);
        let lens: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=5)).collect();
        let got = key_indices(&lens, &mut rng)?;
        let expected: Vec<u64> = lens.iter().scan(0u64, |acc, &l| {
            let r = *acc;
            *acc += l as u64;
            Some(r)
        }).collect();
        if got != expected {
            return Err(format!("sequence {s} {lens:?}: {got:?} != {expected:?}"));
        }
    }
    Ok(format!("fixed [0,1,4,7,11] and {sequences} random sequences"))
}
