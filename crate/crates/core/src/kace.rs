//! Witness agreement calculus: how many receipts (the tally M) out of N
//! witnesses, F of which may be faulty, make an agreement proper, intact
//! or immune, and judging agreement records against a tally.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use crate::identifier::Prefix;
use crate::matter::Matter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgreementParams {
    pub n: u32,
    pub f: u32,
    pub m: u32,
}

impl AgreementParams {
    pub fn new(n: u32, f: u32, m: u32) -> Option<Self> {
        (n >= 1 && (1..=n).contains(&m)).then_some(Self { n, f, m })
    }

    pub fn immune(&self) -> bool {
        classify(self.n, self.f).immune.contains(&self.m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    /// Smallest tally exceeding the number of faulty witnesses.
    pub proper_bound: u32,
    /// At least one proper agreement is reachable with an honest controller.
    pub intact: bool,
    /// Tallies for which no two sufficient agreements can coexist. Empty
    /// when the lower end exceeds the upper.
    pub immune: RangeInclusive<u32>,
}

/// Least M with M >= (N + F + 1) / 2.
pub fn immune_lower(n: u32, f: u32) -> u32 {
    (n + f + 1).div_ceil(2)
}

pub fn classify(n: u32, f: u32) -> Classification {
    Classification {
        proper_bound: f + 1,
        intact: n >= 2 * f + 1,
        immune: immune_lower(n, f)..=n.saturating_sub(f),
    }
}

/// Brute force: every pair of witness subsets of size at least `m` that
/// together cover all `n` witnesses must share at least `f + 1`.
pub fn immune_split_check(n: u32, f: u32, m: u32) -> bool {
    assert!(n <= 20, "enumeration is exponential in n");
    let all: u32 = (1u32 << n) - 1;
    for a in 0..=all {
        if a.count_ones() < m {
            continue;
        }
        // B must hold everything outside A, plus any subset of A
        let outside = all & !a;
        let mut s = a;
        loop {
            let b = outside | s;
            if b.count_ones() >= m && (a & b).count_ones() < f + 1 {
                return false;
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & a;
        }
    }
    true
}

/// One row of the tally table for fixed F and N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub f: u32,
    pub n: u32,
    pub three_f_plus_one: u32,
    pub lower: u32,
    pub upper: u32,
    pub m: Vec<u32>,
}

pub fn table_row(f: u32, n: u32) -> TableRow {
    let c = classify(n, f);
    TableRow {
        f,
        n,
        three_f_plus_one: 3 * f + 1,
        lower: *c.immune.start(),
        upper: *c.immune.end(),
        m: c.immune.collect(),
    }
}

/// Rows for N from 3F+1 to 3F+6.
pub fn table(f: u32) -> Vec<TableRow> {
    (3 * f + 1..=3 * f + 6).map(|n| table_row(f, n)).collect()
}

/// A specific event version with the witnesses whose receipts verified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementRecord {
    pub prefix: Prefix,
    pub sn: u64,
    pub digest: Matter,
    pub witnesses: BTreeSet<Prefix>,
}

impl AgreementRecord {
    pub fn size(&self) -> usize {
        self.witnesses.len()
    }
}

/// Witness set and tallies in force for an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessPolicy {
    pub witnesses: Vec<Prefix>,
    /// Controller tally (the event's toad).
    pub controller_tally: u64,
    /// Validator tally, when stricter than the controller's.
    pub validator_tally: Option<u64>,
}

impl WitnessPolicy {
    pub fn new(witnesses: Vec<Prefix>, toad: u64) -> Self {
        Self { witnesses, controller_tally: toad, validator_tally: None }
    }

    fn tally(&self) -> u64 {
        self.validator_tally.unwrap_or(self.controller_tally).max(self.controller_tally)
    }

    fn count(&self, record: &AgreementRecord) -> u64 {
        record.witnesses.iter().filter(|w| self.witnesses.contains(w)).count() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Judgment {
    /// Receipts reach the controller tally.
    pub accountable: bool,
    /// Receipts reach the tally the judge applies.
    pub sufficient: bool,
    /// Both the previous and the new witness sets reach their tallies.
    /// Equal to `sufficient` when the witness set did not change.
    pub jointly_confirmed: bool,
}

pub fn judge(record: &AgreementRecord, policy: &WitnessPolicy, previous: Option<&WitnessPolicy>) -> Judgment {
    let count = policy.count(record);
    let accountable = count >= policy.controller_tally.max(1);
    let sufficient = count >= policy.tally().max(1);
    let jointly_confirmed = match previous {
        Some(prev) if prev.witnesses != policy.witnesses => {
            sufficient && prev.count(record) >= prev.tally().max(1)
        }
        _ => sufficient,
    };
    Judgment { accountable, sufficient, jointly_confirmed }
}
