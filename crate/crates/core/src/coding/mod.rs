//! Coding lengths on support sets and the induced coding complexity
//! `c(F) = |F| + cl(F)`.
//!
//! A scheme is a valid coding length when the Kraft sum over all nonempty
//! supports is at most one; [`kraft_sum`] and [`check_subadditive`] verify
//! the two properties the greedy analysis relies on by enumeration.

mod block;
mod graph;
mod group;
mod spec;
mod standard;
mod tree;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::blocks::Block;
use crate::error::{Error, Result};
use crate::linalg::{CoefficientVector, SupportSet};

pub use block::{BlockInducedCoding, CoverMode};
pub use graph::{Graph, GraphCoding};
pub use group::GroupCoding;
pub(crate) use group::consecutive_groups;
pub use spec::{GraphSpec, SchemeSpec, TreeSpec};
pub use standard::{NonUniformSingletonCoding, StandardCoding};
pub use tree::{RootedTree, TreeCoding};

/// Largest `p` accepted by [`kraft_sum`].
pub const KRAFT_LIMIT: usize = 12;
/// Largest `p` accepted by [`check_subadditive`].
pub const SUBADDITIVE_LIMIT: usize = 10;

/// A length in bits, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bits {
    Finite(f64),
    Infinite,
}

impl Bits {
    pub const ZERO: Bits = Bits::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Bits::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Bits::Finite(v) => Some(v),
            Bits::Infinite => None,
        }
    }

    /// `2^{-self}`, zero for an infinite length.
    pub fn kraft_term(self) -> f64 {
        match self {
            Bits::Finite(v) => (-v).exp2(),
            Bits::Infinite => 0.0,
        }
    }

    /// Lossy conversion for reporting (`f64::INFINITY` for infinite).
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl From<f64> for Bits {
    fn from(v: f64) -> Self {
        Bits::Finite(v)
    }
}

impl Add for Bits {
    type Output = Bits;
    fn add(self, rhs: Bits) -> Bits {
        match (self, rhs) {
            (Bits::Finite(a), Bits::Finite(b)) => Bits::Finite(a + b),
            _ => Bits::Infinite,
        }
    }
}

impl Add<f64> for Bits {
    type Output = Bits;
    fn add(self, rhs: f64) -> Bits {
        self + Bits::Finite(rhs)
    }
}

impl Sub for Bits {
    type Output = Bits;
    /// Panics when subtracting an infinite length.
    fn sub(self, rhs: Bits) -> Bits {
        match (self, rhs) {
            (Bits::Finite(a), Bits::Finite(b)) => Bits::Finite(a - b),
            (Bits::Infinite, Bits::Finite(_)) => Bits::Infinite,
            (_, Bits::Infinite) => panic!("cannot subtract an infinite length"),
        }
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Bits::Finite(a), Bits::Finite(b)) => a.partial_cmp(b),
            (Bits::Finite(_), Bits::Infinite) => Some(Ordering::Less),
            (Bits::Infinite, Bits::Finite(_)) => Some(Ordering::Greater),
            (Bits::Infinite, Bits::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bits::Finite(v) => write!(f, "{v}"),
            Bits::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bits::Finite(v) => s.serialize_f64(*v),
            Bits::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() && v >= 0.0 => Ok(Bits::Finite(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("invalid bit length {v}"))),
            Raw::Str(s) if s == "inf" => Ok(Bits::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("invalid bit length {s:?}"))),
        }
    }
}

/// A coding length on subsets of `[0, p)`.
pub trait CodingScheme: Send + Sync + fmt::Debug {
    /// Ambient dimension `p`.
    fn dim(&self) -> usize;

    /// `cl(F)`; zero for the empty set.
    fn code_length(&self, support: &SupportSet) -> Bits;

    /// `c(F) = |F| + cl(F)`.
    fn complexity(&self, support: &SupportSet) -> Bits {
        Bits::Finite(support.len() as f64) + self.code_length(support)
    }

    /// `min { c(F) : supp(β) ⊆ F }`. Evaluated at `F = supp(β)` unless the
    /// scheme knows a cheaper superset.
    fn vector_complexity(&self, beta: &CoefficientVector) -> Bits {
        self.complexity(beta.support())
    }

    /// A tracker specialized to this scheme, if it has one cheaper than
    /// recomputing `c(F ∪ B)` from scratch.
    fn fast_tracker(&self) -> Option<Box<dyn ComplexityTracker + '_>> {
        None
    }

    /// Serializable descriptor that rebuilds this scheme.
    fn spec(&self) -> SchemeSpec;
}

/// Incremental view of `c(F)` for a growing support `F`.
pub trait ComplexityTracker: Send + Sync {
    /// `c(F)` for the committed support.
    fn current(&self) -> Bits;
    /// `c(F ∪ B) - c(F)`.
    fn increment(&self, block: &Block, in_support: &[bool]) -> Bits;
    /// Adds `B` to `F`. `in_support` still describes `F` before the call.
    fn commit(&mut self, block: &Block, in_support: &[bool]);
}

/// Tracker for `scheme`, falling back to full recomputation.
pub fn tracker_for(scheme: &dyn CodingScheme) -> Box<dyn ComplexityTracker + '_> {
    scheme
        .fast_tracker()
        .unwrap_or_else(|| Box::new(SetTracker::new(scheme)))
}

struct SetTracker<'a> {
    scheme: &'a dyn CodingScheme,
    support: SupportSet,
    current: Bits,
}

impl<'a> SetTracker<'a> {
    fn new(scheme: &'a dyn CodingScheme) -> Self {
        Self {
            scheme,
            support: SupportSet::empty(),
            current: Bits::ZERO,
        }
    }
}

impl ComplexityTracker for SetTracker<'_> {
    fn current(&self) -> Bits {
        self.current
    }

    fn increment(&self, block: &Block, _in_support: &[bool]) -> Bits {
        self.scheme.complexity(&self.support.union(&block.indices)) - self.current
    }

    fn commit(&mut self, block: &Block, _in_support: &[bool]) {
        self.support = self.support.union(&block.indices);
        self.current = self.scheme.complexity(&self.support);
    }
}

/// Novel members of `block` given the current support mask.
pub(crate) fn novel<'b>(block: &'b Block, in_support: &'b [bool]) -> impl Iterator<Item = usize> + 'b {
    block.indices.iter().filter(move |&j| !in_support[j])
}

/// `Σ_{F ≠ ∅} 2^{-cl(F)}` by enumeration of all `2^p - 1` nonempty subsets.
pub fn kraft_sum(scheme: &dyn CodingScheme) -> Result<f64> {
    let p = scheme.dim();
    if p > KRAFT_LIMIT {
        return Err(Error::TooLarge {
            p,
            limit: KRAFT_LIMIT,
        });
    }
    Ok((1u64..1 << p)
        .map(|m| scheme.code_length(&SupportSet::from_mask(m)).kraft_term())
        .sum())
}

/// Outcome of [`check_subadditive`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivityReport {
    pub holds: bool,
    pub counterexample: Option<(SupportSet, SupportSet)>,
}

/// Checks `cl(F ∪ F') ≤ cl(F) + cl(F')` over all pairs of subsets.
pub fn check_subadditive(scheme: &dyn CodingScheme) -> Result<SubadditivityReport> {
    let p = scheme.dim();
    if p > SUBADDITIVE_LIMIT {
        return Err(Error::TooLarge {
            p,
            limit: SUBADDITIVE_LIMIT,
        });
    }
    let table: Vec<Bits> = (0u64..1 << p)
        .map(|m| scheme.code_length(&SupportSet::from_mask(m)))
        .collect();
    for a in 1u64..1 << p {
        for b in a + 1..1 << p {
            let lhs = table[(a | b) as usize];
            let rhs = table[a as usize] + table[b as usize];
            let violated = match (lhs, rhs) {
                (_, Bits::Infinite) => false,
                (Bits::Infinite, Bits::Finite(_)) => true,
                (Bits::Finite(l), Bits::Finite(r)) => l > r + 1e-9,
            };
            if violated {
                return Ok(SubadditivityReport {
                    holds: false,
                    counterexample: Some((SupportSet::from_mask(a), SupportSet::from_mask(b))),
                });
            }
        }
    }
    Ok(SubadditivityReport {
        holds: true,
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_arithmetic_and_order() {
        assert_eq!(Bits::Finite(1.0) + Bits::Finite(2.0), Bits::Finite(3.0));
        assert_eq!(Bits::Finite(1.0) + Bits::Infinite, Bits::Infinite);
        assert_eq!(Bits::Infinite - Bits::Finite(3.0), Bits::Infinite);
        assert!(Bits::Finite(1e300) < Bits::Infinite);
        assert_eq!(Bits::Infinite.kraft_term(), 0.0);
        assert_eq!(Bits::Finite(3.0).kraft_term(), 0.125);
    }

    #[test]
    fn bits_json_round_trip() {
        let v = vec![Bits::Finite(2.5), Bits::Infinite];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[2.5,"inf"]"#);
        let back: Vec<Bits> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Bits>("-1.0").is_err());
    }

    #[test]
    fn enumeration_limits_are_enforced() {
        let s = StandardCoding::new(13);
        assert!(matches!(kraft_sum(&s), Err(Error::TooLarge { .. })));
        let s = StandardCoding::new(11);
        assert!(matches!(check_subadditive(&s), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn empty_set_has_zero_length_for_every_scheme() {
        let schemes: Vec<Box<dyn CodingScheme>> = vec![
            Box::new(StandardCoding::new(6)),
            Box::new(NonUniformSingletonCoding::new(vec![3.0; 6]).unwrap()),
            Box::new(GroupCoding::consecutive(6, 2).unwrap()),
            Box::new(GraphCoding::new(Graph::line(6))),
            Box::new(TreeCoding::new(RootedTree::balanced_binary(6))),
        ];
        for s in &schemes {
            assert_eq!(s.code_length(&SupportSet::empty()), Bits::ZERO);
            assert_eq!(s.complexity(&SupportSet::empty()), Bits::ZERO);
            assert!(s.code_length(&SupportSet::new(vec![0])) > Bits::ZERO);
        }
    }
}
