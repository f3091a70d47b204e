//! Signing thresholds: an integer count, a list of fractional weights, or
//! a list of weight lists combined with a logical AND.
//!
//! Weights are exact rationals. A weighted clause is met when the weights
//! of the signing offsets sum to at least one.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ThresholdError;
use crate::event::Element;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum SigningThreshold {
    Count(u64),
    Weighted(Vec<BigRational>),
    Clauses(Vec<Vec<BigRational>>),
}

fn parse_weight(text: &str) -> Result<BigRational, ThresholdError> {
    let bad = || ThresholdError::Invalid(format!("bad weight {text:?}"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

fn format_weight(w: &BigRational) -> String {
    if w.is_integer() {
        w.numer().to_string()
    } else {
        format!("{}/{}", w.numer(), w.denom())
    }
}

fn check_clause(clause: &[BigRational]) -> Result<(), ThresholdError> {
    if clause.is_empty() {
        return Err(ThresholdError::Invalid("empty weight list".into()));
    }
    let one = BigRational::one();
    if let Some(w) = clause.iter().find(|w| **w <= BigRational::zero() || **w > one) {
        return Err(ThresholdError::Invalid(format!("weight {} outside (0, 1]", format_weight(w))));
    }
    let total: BigRational = clause.iter().cloned().sum();
    if total < one {
        return Err(ThresholdError::Invalid("weights can never reach 1".into()));
    }
    Ok(())
}

impl SigningThreshold {
    pub fn count(k: u64) -> Result<Self, ThresholdError> {
        if k == 0 {
            return Err(ThresholdError::Invalid("threshold must be at least 1".into()));
        }
        Ok(Self::Count(k))
    }

    /// Build a weight list from `"n/d"` strings.
    pub fn weighted<S: AsRef<str>>(weights: &[S]) -> Result<Self, ThresholdError> {
        let ws = weights.iter().map(|w| parse_weight(w.as_ref())).collect::<Result<Vec<_>, _>>()?;
        check_clause(&ws)?;
        Ok(Self::Weighted(ws))
    }

    pub fn clauses<S: AsRef<str>>(clauses: &[Vec<S>]) -> Result<Self, ThresholdError> {
        if clauses.is_empty() {
            return Err(ThresholdError::Invalid("no clauses".into()));
        }
        let parsed = clauses
            .iter()
            .map(|c| {
                let ws = c.iter().map(|w| parse_weight(w.as_ref())).collect::<Result<Vec<_>, _>>()?;
                check_clause(&ws)?;
                Ok(ws)
            })
            .collect::<Result<Vec<_>, ThresholdError>>()?;
        Ok(Self::Clauses(parsed))
    }

    /// Number of keys the threshold is written against, when it fixes one.
    pub fn weight_count(&self) -> Option<usize> {
        match self {
            Self::Count(_) => None,
            Self::Weighted(ws) => Some(ws.len()),
            Self::Clauses(cs) => Some(cs.iter().map(Vec::len).sum()),
        }
    }

    /// Whether the threshold is well formed for a list of `keys` keys.
    pub fn validate_for(&self, keys: usize) -> Result<(), ThresholdError> {
        match self {
            Self::Count(k) if *k == 0 || *k as usize > keys => {
                Err(ThresholdError::Invalid(format!("threshold {k} unreachable with {keys} keys")))
            }
            Self::Count(_) => Ok(()),
            _ => match self.weight_count() {
                Some(n) if n == keys => Ok(()),
                Some(n) => Err(ThresholdError::Invalid(format!("{n} weights for {keys} keys"))),
                None => unreachable!(),
            },
        }
    }

    /// Whether the signer offsets in `indices` meet the threshold over a
    /// list of `keys` keys.
    pub fn satisfies<I>(&self, keys: usize, indices: I) -> Result<bool, ThresholdError>
    where
        I: IntoIterator<Item = usize>,
    {
        let range = self.weight_count().unwrap_or(keys);
        let signed: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&index) = signed.iter().find(|i| **i >= range || **i >= keys) {
            return Err(ThresholdError::IndexOutOfRange { index, keys: range.min(keys) });
        }
        let one = BigRational::one();
        Ok(match self {
            Self::Count(k) => signed.len() as u64 >= *k,
            Self::Weighted(ws) => signed.iter().map(|i| &ws[*i]).cloned().sum::<BigRational>() >= one,
            Self::Clauses(cs) => {
                let mut start = 0;
                cs.iter().all(|clause| {
                    let end = start + clause.len();
                    let total: BigRational =
                        signed.range(start..end).map(|i| clause[i - start].clone()).sum();
                    start = end;
                    total >= one
                })
            }
        })
    }

    /// Depth-first element form used by extracted serialization.
    pub fn element(&self) -> Element {
        match self {
            Self::Count(k) => Element::Text(format!("{k:x}")),
            Self::Weighted(ws) => Element::List(ws.iter().map(|w| Element::Text(format_weight(w))).collect()),
            Self::Clauses(cs) => Element::List(
                cs.iter()
                    .map(|c| Element::List(c.iter().map(|w| Element::Text(format_weight(w))).collect()))
                    .collect(),
            ),
        }
    }
}

impl Default for SigningThreshold {
    fn default() -> Self {
        Self::Count(1)
    }
}

impl fmt::Debug for SigningThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Count(k) => write!(f, "{k}"),
            Self::Weighted(ws) => {
                let parts: Vec<_> = ws.iter().map(format_weight).collect();
                write!(f, "[{}]", parts.join(","))
            }
            Self::Clauses(cs) => {
                let parts: Vec<_> =
                    cs.iter().map(|c| c.iter().map(format_weight).collect::<Vec<_>>().join(",")).collect();
                write!(f, "[[{}]]", parts.join("],["))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Wire {
    Count(String),
    Weighted(Vec<String>),
    Clauses(Vec<Vec<String>>),
}

impl Serialize for SigningThreshold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire = match self {
            Self::Count(k) => Wire::Count(format!("{k:x}")),
            Self::Weighted(ws) => Wire::Weighted(ws.iter().map(format_weight).collect()),
            Self::Clauses(cs) => Wire::Clauses(cs.iter().map(|c| c.iter().map(format_weight).collect()).collect()),
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SigningThreshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match Wire::deserialize(d)? {
            Wire::Count(hex) => {
                let k = u64::from_str_radix(&hex, 16).map_err(D::Error::custom)?;
                Self::count(k).map_err(D::Error::custom)
            }
            Wire::Weighted(ws) => Self::weighted(&ws).map_err(D::Error::custom),
            Wire::Clauses(cs) => Self::clauses(&cs).map_err(D::Error::custom),
        }
    }
}
