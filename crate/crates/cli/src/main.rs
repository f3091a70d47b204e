//! `keri`: local key management and log verification over a keystore
//! directory, plus the scripted network simulator.

mod keystore;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use keri_core::controller::{ControllerError, KeyPlan, SignedEvent};
use keri_core::crypto;
use keri_core::engine::{Disposition, EVENT_DIGEST};
use keri_core::event::{self, DigestSeal, Seal};
use keri_core::logs::Kerl;
use keri_core::netsim::{Scenario, Sim};
use keri_core::{EventError, IdentifierError, LogError, Matter, Prefix, SerialKind, SigningThreshold};

use keystore::{note_establishment, signer_from, KeySource, Keystore, Record};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("keystore: {0}")]
    Keystore(String),
    #[error("no such alias: {0}")]
    AliasMissing(String),
    #[error("alias already exists: {0}")]
    AliasExists(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("identifier {0} has been abandoned")]
    Abandoned(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Identifier(#[from] IdentifierError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Verify(_) | Self::Abandoned(_) => 2,
            Self::Controller(ControllerError::Abandoned | ControllerError::Rejected(_) | ControllerError::KeyMismatch) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "keri", version, about = "Self-certifying identifiers with pre-rotated keys")]
struct Cli {
    /// Keystore directory.
    #[arg(long, global = true, default_value = ".keri")]
    keystore: PathBuf,
    /// Derive keys from alias and counter instead of the OS RNG. Test use only.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a new identifier.
    Incept {
        #[arg(long)]
        alias: String,
        #[arg(long, default_value_t = 1)]
        keys: usize,
        #[arg(long, default_value_t = 1)]
        next: usize,
        #[arg(long, default_value_t = 0)]
        toad: u64,
        /// Witness prefix; repeatable.
        #[arg(long = "witness")]
        witnesses: Vec<String>,
        /// JSON, CBOR or MGPK.
        #[arg(long, default_value = "JSON")]
        kind: String,
    },
    /// Rotate to the pre-rotated keys.
    Rotate {
        #[arg(long)]
        alias: String,
        /// Number of new next keys, or `none` to abandon the identifier.
        #[arg(long)]
        next: Option<String>,
    },
    /// Append an interaction event anchoring seals.
    Interact {
        #[arg(long)]
        alias: String,
        /// Qualified digest to anchor; repeatable.
        #[arg(long = "seal")]
        seals: Vec<String>,
        /// Text whose digest is anchored; repeatable.
        #[arg(long = "data")]
        data: Vec<String>,
    },
    /// Create a delegated identifier under `alias`.
    Delegate {
        #[arg(long)]
        alias: String,
        #[arg(long)]
        child: String,
        #[arg(long, default_value_t = 1)]
        keys: usize,
        #[arg(long, default_value_t = 1)]
        next: usize,
        /// Anchor with a rotation of the delegator instead of an interaction.
        #[arg(long)]
        rotate: bool,
    },
    /// Verify framed event logs and report dispositions and duplicity.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run a simulation script.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Print the verified log of `alias` with receipts as a framed stream.
    Export {
        #[arg(long)]
        alias: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let source = if cli.deterministic { KeySource::Counter } else { KeySource::Random };
    match cli.command {
        Command::Verify { files } => verify(&files),
        Command::Simulate { file, transcript } => simulate(&file, transcript.as_deref()),
        command => {
            let store = Keystore::open(&cli.keystore, source)?;
            manage(&store, command)?;
            Ok(0)
        }
    }
}

/// Majority of `n` keys.
fn majority(n: usize) -> u64 {
    (n / 2 + 1) as u64
}

fn kind_of(token: &str) -> Result<SerialKind, CliError> {
    SerialKind::from_token(&token.to_ascii_uppercase()).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_live(store: &Keystore, alias: &str) -> Result<Record, CliError> {
    let record = store.load(alias)?;
    if record.next.is_empty() {
        return Err(CliError::Abandoned(alias.into()));
    }
    Ok(record)
}

fn report(alias: &str, signed: &SignedEvent) {
    let e = &signed.event;
    let digest = signed
        .event
        .serialize()
        .ok()
        .and_then(|raw| crypto::digest(EVENT_DIGEST, &raw).ok())
        .map(|d| d.qb64())
        .unwrap_or_default();
    println!("{alias} {} sn={} {} {digest}", e.ilk(), e.sn, e.prefix.qb64());
}

fn manage(store: &Keystore, command: Command) -> Result<(), CliError> {
    match command {
        Command::Incept { alias, keys, next, toad, witnesses, kind } => {
            if store.exists(&alias) {
                return Err(CliError::AliasExists(alias));
            }
            if keys == 0 || next == 0 {
                return Err(CliError::Usage("--keys and --next must be at least 1".into()));
            }
            let kind = kind_of(&kind)?;
            let witnesses = witnesses.iter().map(|w| Prefix::from_qb64(w)).collect::<Result<Vec<_>, _>>()?;
            let mut counter = 0;
            let current = store.new_seeds(&alias, &mut counter, keys);
            let upcoming = store.new_seeds(&alias, &mut counter, next);
            let plan = KeyPlan {
                signers: signers(&current)?,
                sith: SigningThreshold::Count(majority(keys)),
                next: signers(&upcoming)?,
                next_sith: SigningThreshold::Count(majority(next)),
                witnesses,
                toad,
                config: vec![],
            };
            let (ctl, icp) = keri_core::controller::Controller::incept(plan, kind)?;
            let mut record = Record {
                alias: alias.clone(),
                prefix: ctl.prefix().qb64(),
                kind: kind.token().into(),
                current,
                next: upcoming,
                next_sith: majority(next),
                delegator: None,
                counter,
                history: vec![],
            };
            note_establishment(&mut record, &ctl);
            store.append_kel(&alias, &icp)?;
            store.save(&record)?;
            report(&alias, &icp);
        }
        Command::Rotate { alias, next } => {
            let mut record = load_live(store, &alias)?;
            let count = match next.as_deref() {
                None => record.next.len(),
                Some("none") => 0,
                Some(n) => n.parse().map_err(|_| CliError::Usage(format!("--next {n}: expected a count or none")))?,
            };
            let mut ctl = store.controller(&record)?;
            let mut counter = record.counter;
            let upcoming = store.new_seeds(&alias, &mut counter, count);
            let sith = SigningThreshold::Count(if count == 0 { 0 } else { majority(count) });
            let rot = match record.delegator.clone() {
                None => ctl.rotate(signers(&upcoming)?, sith)?,
                Some(parent) => {
                    let precord = load_live(store, &parent)?;
                    let mut pctl = store.controller(&precord)?;
                    let (anchor, drt) = ctl.delegated_rotate(&mut pctl, signers(&upcoming)?, sith, None)?;
                    store.append_kel(&parent, &anchor)?;
                    report(&parent, &anchor);
                    drt
                }
            };
            record.current = std::mem::replace(&mut record.next, upcoming);
            record.next_sith = if count == 0 { 0 } else { majority(count) };
            record.counter = counter;
            note_establishment(&mut record, &ctl);
            store.append_kel(&alias, &rot)?;
            store.save(&record)?;
            report(&alias, &rot);
        }
        Command::Interact { alias, seals, data } => {
            let record = load_live(store, &alias)?;
            let mut ctl = store.controller(&record)?;
            let mut anchors = Vec::new();
            for s in &seals {
                let d = Matter::from_qb64(s).map_err(|e| CliError::Usage(format!("--seal {s}: {e}")))?;
                anchors.push(Seal::Digest(DigestSeal { d }));
            }
            for t in &data {
                let d = crypto::digest(EVENT_DIGEST, t.as_bytes()).map_err(|e| CliError::Keystore(e.to_string()))?;
                anchors.push(Seal::Digest(DigestSeal { d }));
            }
            let ixn = ctl.interact(anchors)?;
            store.append_kel(&alias, &ixn)?;
            report(&alias, &ixn);
        }
        Command::Delegate { alias, child, keys, next, rotate } => {
            if store.exists(&child) {
                return Err(CliError::AliasExists(child));
            }
            if keys == 0 || next == 0 {
                return Err(CliError::Usage("--keys and --next must be at least 1".into()));
            }
            let mut precord = load_live(store, &alias)?;
            let mut pctl = store.controller(&precord)?;
            let mut counter = 0;
            let current = store.new_seeds(&child, &mut counter, keys);
            let upcoming = store.new_seeds(&child, &mut counter, next);
            let plan = KeyPlan {
                signers: signers(&current)?,
                sith: SigningThreshold::Count(majority(keys)),
                next: signers(&upcoming)?,
                next_sith: SigningThreshold::Count(majority(next)),
                witnesses: vec![],
                toad: 0,
                config: vec![],
            };
            let mut pcounter = precord.counter;
            let parent_next = if rotate {
                let n = precord.next.len();
                Some(store.new_seeds(&alias, &mut pcounter, n))
            } else {
                None
            };
            let rotate_to = match &parent_next {
                Some(seeds) => Some((signers(seeds)?, SigningThreshold::Count(majority(seeds.len())))),
                None => None,
            };
            let (cctl, anchor, dip) = pctl.delegate(plan, rotate_to)?;
            if let Some(seeds) = parent_next {
                precord.next_sith = majority(seeds.len());
                precord.current = std::mem::replace(&mut precord.next, seeds);
                note_establishment(&mut precord, &pctl);
            }
            precord.counter = pcounter;
            let mut crecord = Record {
                alias: child.clone(),
                prefix: cctl.prefix().qb64(),
                kind: precord.kind.clone(),
                current,
                next: upcoming,
                next_sith: majority(next),
                delegator: Some(alias.clone()),
                counter,
                history: vec![],
            };
            note_establishment(&mut crecord, &cctl);
            store.append_kel(&alias, &anchor)?;
            store.save(&precord)?;
            store.append_kel(&child, &dip)?;
            store.save(&crecord)?;
            report(&alias, &anchor);
            report(&child, &dip);
        }
        Command::Export { alias } => {
            let record = store.load(&alias)?;
            let mut kerl = Kerl::new();
            store.import_chain(&alias, &mut kerl)?;
            let prefix = Prefix::from_qb64(&record.prefix)?;
            let bytes = kerl.export(&prefix)?;
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
        Command::Verify { .. } | Command::Simulate { .. } => unreachable!("handled without a keystore"),
    }
    Ok(())
}

fn signers(seeds: &[Matter]) -> Result<Vec<crypto::Signer>, CliError> {
    seeds.iter().map(signer_from).collect()
}

/// Verify every message of every file in order through one log. Exit 3
/// with proof locations when duplicity was found, 2 on any rejection or
/// unresolved escrow.
fn verify(files: &[PathBuf]) -> Result<u8, CliError> {
    let mut kerl = Kerl::new();
    // where each event digest was read from
    let mut origin: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut rejected = 0;
    for path in files {
        let bytes = fs::read(path)?;
        let mut rest: &[u8] = &bytes;
        let mut index = 0;
        while let Some(start) = rest.iter().position(|b| !b.is_ascii_whitespace()) {
            rest = &rest[start..];
            let (framed, used) =
                event::parse_one(rest).map_err(|e| CliError::Parse(format!("{}:{index}: {e}", path.display())))?;
            let outcome = kerl.import(&rest[..used])?;
            if let Some(e) = outcome.error {
                return Err(CliError::Parse(format!("{}:{index}: {e}", path.display())));
            }
            let at = format!("{}:{index}", path.display());
            if outcome.reports.is_empty() {
                println!("{at} {} receipts={}", framed.message.ilk(), outcome.receipts);
            }
            for (i, r) in outcome.reports.iter().enumerate() {
                if i == 0 {
                    origin.entry(r.digest.qb64()).or_default().push(at.clone());
                }
                if matches!(r.disposition, Disposition::Rejected(_)) {
                    rejected += 1;
                }
                let label = if i == 0 { at.clone() } else { format!("{at} (escrow)") };
                println!("{label} {} sn={} {} {}", r.ilk, r.sn, r.prefix.qb64(), r.disposition);
            }
            rest = &rest[used..];
            index += 1;
        }
    }

    let engine = kerl.engine();
    let mut states = Vec::new();
    for prefix in engine.prefixes() {
        let kever = engine.kever(prefix).expect("listed prefix");
        let establishment: Vec<_> = kever
            .trunk
            .iter()
            .filter(|a| a.event.is_establishment())
            .map(|a| {
                serde_json::json!({
                    "sn": a.event.sn,
                    "ilk": a.event.ilk().to_string(),
                    "first_key_index": a.state.first_key_index,
                    "keys": a.state.keys,
                })
            })
            .collect();
        states.push(serde_json::json!({ "state": kever.state(), "establishment": establishment }));
    }
    let text = serde_json::to_string_pretty(&states).map_err(|e| CliError::Parse(e.to_string()))?;
    println!("{text}");

    let del = kerl.del();
    if !del.is_empty() {
        for ((prefix, sn), versions) in &del.events {
            println!("duplicity {} sn={sn}", prefix.qb64());
            for v in versions {
                let at = origin.get(&v.digest.qb64()).map(|l| l.join(",")).unwrap_or_default();
                println!("  {} {at}", v.digest.qb64());
            }
        }
        for (witness, receipts) in &del.receipts {
            for r in receipts {
                println!("inconsistent-receipt {} {} sn={} {}", witness.qb64(), r.prefix.qb64(), r.sn, r.digest.qb64());
            }
        }
        return Ok(3);
    }
    let escrowed = engine.out_of_order_len() + engine.partial_sig_len();
    if rejected > 0 || escrowed > 0 {
        println!("rejected={rejected} escrowed={escrowed}");
        return Ok(2);
    }
    Ok(0)
}

fn simulate(file: &Path, transcript: Option<&Path>) -> Result<u8, CliError> {
    let text = fs::read_to_string(file)?;
    let scenario = Scenario::parse(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    let outcome = Sim::run(&scenario).map_err(|e| CliError::Parse(e.to_string()))?;
    let body = outcome.transcript_text();
    print!("{body}");
    if let Some(path) = transcript {
        fs::write(path, &body)?;
    }
    for v in &outcome.violations {
        println!("violation: {v}");
    }
    let failed = outcome.assertions.iter().filter(|(_, ok)| !ok).count();
    println!("assertions: {} passed, {failed} failed", outcome.assertions.len() - failed);
    Ok(if outcome.passed() { 0 } else { 4 })
}
