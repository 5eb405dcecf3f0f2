//! Linear constraints over atoms.
//!
//! A [`LinCons`] is `lb <= sum(coef * atom) <= ub` where either bound may be
//! absent. Construction always goes through [`LinCons::new`], which merges
//! duplicate atoms, drops zero coefficients and sorts terms canonically, so
//! two constraints that describe the same row compare equal.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::atom::Atom;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    NegInf,
    PosInf,
}

impl Bound {
    /// The bound as an extended real.
    pub fn value(self) -> f64 {
        match self {
            Bound::Finite(v) => v,
            Bound::NegInf => f64::NEG_INFINITY,
            Bound::PosInf => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Maps `±inf` floats onto the infinite variants.
    pub fn from_f64(v: f64) -> Bound {
        if v == f64::INFINITY {
            Bound::PosInf
        } else if v == f64::NEG_INFINITY {
            Bound::NegInf
        } else {
            Bound::Finite(v)
        }
    }

    fn key(self) -> u64 {
        match self {
            Bound::Finite(v) => canonical_bits(v),
            Bound::NegInf => f64::NEG_INFINITY.to_bits(),
            Bound::PosInf => f64::INFINITY.to_bits(),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v:?}"),
            Bound::NegInf => f.write_str("-inf"),
            Bound::PosInf => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinTerm {
    pub coef: f64,
    pub atom: Atom,
}

impl LinTerm {
    pub fn new(coef: f64, atom: Atom) -> Self {
        LinTerm { coef, atom }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinConsError {
    #[error("constraint has no finite bound")]
    BothBoundsAbsent,
    #[error("lower bound {lb} exceeds upper bound {ub}")]
    LbExceedsUb { lb: f64, ub: f64 },
    #[error("-inf is only legal as a lower bound and inf only as an upper bound")]
    IllegalBound,
    #[error("coefficient of {atom} is not finite")]
    NonFiniteCoefficient { atom: Atom },
    #[error("bound value is not finite; use inf/-inf")]
    NonFiniteBound,
    #[error("terms are not merged and sorted")]
    Unnormalized,
}

/// A normalized linear constraint.
///
/// Equality and hashing are bitwise on the (canonical) float data, so
/// constraints can be deduplicated in hash sets.
#[derive(Debug, Clone)]
pub struct LinCons {
    lb: Bound,
    terms: Vec<LinTerm>,
    ub: Bound,
}

impl LinCons {
    /// Normalizing constructor: merges duplicate atoms by summing their
    /// coefficients, drops zero coefficients and sorts terms by atom.
    pub fn new(lb: Bound, terms: Vec<LinTerm>, ub: Bound) -> Result<LinCons, LinConsError> {
        if !lb.is_finite() && !ub.is_finite() {
            return Err(LinConsError::BothBoundsAbsent);
        }
        if matches!(lb, Bound::PosInf) || matches!(ub, Bound::NegInf) {
            return Err(LinConsError::IllegalBound);
        }
        for b in [lb, ub] {
            if let Bound::Finite(v) = b {
                if !v.is_finite() {
                    return Err(LinConsError::NonFiniteBound);
                }
            }
        }
        if let (Bound::Finite(l), Bound::Finite(u)) = (lb, ub) {
            if l > u {
                return Err(LinConsError::LbExceedsUb { lb: l, ub: u });
            }
        }
        let mut merged: BTreeMap<Atom, f64> = BTreeMap::new();
        for term in terms {
            if !term.coef.is_finite() {
                return Err(LinConsError::NonFiniteCoefficient { atom: term.atom });
            }
            *merged.entry(term.atom).or_insert(0.0) += term.coef;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(atom, coef)| LinTerm { coef, atom })
            .collect();
        let cons = LinCons { lb, terms, ub };
        debug_assert_eq!(cons.check_invariants(), Ok(()));
        Ok(cons)
    }

    pub fn lb(&self) -> Bound {
        self.lb
    }

    pub fn ub(&self) -> Bound {
        self.ub
    }

    pub fn terms(&self) -> &[LinTerm] {
        &self.terms
    }

    pub fn coefficient(&self, atom: &Atom) -> Option<f64> {
        self.terms
            .binary_search_by(|t| t.atom.cmp(atom))
            .ok()
            .map(|i| self.terms[i].coef)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.coefficient(atom).is_some()
    }

    /// The same row with every term whose atom fails `keep` removed.
    ///
    /// Used to project a row onto the created columns of a restricted
    /// problem: absent atoms are fixed at zero and contribute nothing.
    pub fn restricted_to(&self, mut keep: impl FnMut(&Atom) -> bool) -> LinCons {
        LinCons {
            lb: self.lb,
            terms: self.terms.iter().filter(|t| keep(&t.atom)).cloned().collect(),
            ub: self.ub,
        }
    }

    /// Re-checks every structural invariant. Constructed values always pass.
    pub fn check_invariants(&self) -> Result<(), LinConsError> {
        if !self.lb.is_finite() && !self.ub.is_finite() {
            return Err(LinConsError::BothBoundsAbsent);
        }
        if matches!(self.lb, Bound::PosInf) || matches!(self.ub, Bound::NegInf) {
            return Err(LinConsError::IllegalBound);
        }
        if self.lb.value() > self.ub.value() {
            return Err(LinConsError::LbExceedsUb {
                lb: self.lb.value(),
                ub: self.ub.value(),
            });
        }
        for pair in self.terms.windows(2) {
            if pair[0].atom >= pair[1].atom {
                return Err(LinConsError::Unnormalized);
            }
        }
        for t in &self.terms {
            if !t.coef.is_finite() || t.coef == 0.0 {
                return Err(LinConsError::NonFiniteCoefficient { atom: t.atom.clone() });
            }
        }
        Ok(())
    }
}

fn canonical_bits(v: f64) -> u64 {
    if v == 0.0 {
        0.0f64.to_bits()
    } else {
        v.to_bits()
    }
}

impl PartialEq for LinCons {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for LinCons {}

impl Hash for LinCons {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lb.key().hash(state);
        self.ub.key().hash(state);
        for t in &self.terms {
            t.atom.hash(state);
            canonical_bits(t.coef).hash(state);
        }
    }
}

impl PartialOrd for LinCons {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Terms first (atom, then coefficient), then bounds.
impl Ord for LinCons {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_terms = self
            .terms
            .iter()
            .zip(&other.terms)
            .map(|(a, b)| {
                a.atom
                    .cmp(&b.atom)
                    .then_with(|| total(a.coef).total_cmp(&total(b.coef)))
            })
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.terms.len().cmp(&other.terms.len()));
        by_terms
            .then_with(|| total(self.lb.value()).total_cmp(&total(other.lb.value())))
            .then_with(|| total(self.ub.value()).total_cmp(&total(other.ub.value())))
    }
}

fn total(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

impl fmt::Display for LinCons {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= ", self.lb)?;
        if self.terms.is_empty() {
            f.write_str("0")?;
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{:?}*{}", t.coef, t.atom)?;
        }
        write!(f, " <= {}", self.ub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(name: &str) -> Atom {
        Atom::new(name, Vec::<String>::new())
    }

    #[test]
    fn zero_term_dropped() {
        let c = LinCons::new(
            Bound::Finite(1.0),
            vec![LinTerm::new(1.0, a("a")), LinTerm::new(0.0, a("b"))],
            Bound::PosInf,
        )
        .unwrap();
        assert_eq!(c.lb(), Bound::Finite(1.0));
        assert_eq!(c.terms(), &[LinTerm::new(1.0, a("a"))]);
        assert_eq!(c.ub(), Bound::PosInf);
    }

    #[test]
    fn duplicates_merge() {
        let c = LinCons::new(
            Bound::Finite(1.0),
            vec![LinTerm::new(1.0, a("a")), LinTerm::new(2.0, a("a"))],
            Bound::PosInf,
        )
        .unwrap();
        assert_eq!(c.terms(), &[LinTerm::new(3.0, a("a"))]);
    }

    #[test]
    fn both_bounds_absent_rejected() {
        let err = LinCons::new(Bound::NegInf, vec![LinTerm::new(1.0, a("a"))], Bound::NegInf);
        assert_eq!(err.unwrap_err(), LinConsError::BothBoundsAbsent);
        let err = LinCons::new(Bound::Finite(0.0), vec![], Bound::NegInf);
        assert_eq!(err.unwrap_err(), LinConsError::IllegalBound);
        let err = LinCons::new(Bound::NegInf, vec![LinTerm::new(1.0, a("a"))], Bound::PosInf);
        assert_eq!(err.unwrap_err(), LinConsError::BothBoundsAbsent);
    }

    #[test]
    fn crossed_bounds_rejected() {
        let err = LinCons::new(Bound::Finite(2.0), vec![], Bound::Finite(1.0));
        assert!(matches!(err, Err(LinConsError::LbExceedsUb { .. })));
    }

    #[test]
    fn cancelling_terms_vanish() {
        let c = LinCons::new(
            Bound::NegInf,
            vec![LinTerm::new(1.0, a("x")), LinTerm::new(-1.0, a("x"))],
            Bound::Finite(0.0),
        )
        .unwrap();
        assert!(c.terms().is_empty());
    }

    #[test]
    fn negative_zero_bound_equals_zero() {
        let c1 = LinCons::new(Bound::Finite(-0.0), vec![LinTerm::new(1.0, a("x"))], Bound::PosInf).unwrap();
        let c2 = LinCons::new(Bound::Finite(0.0), vec![LinTerm::new(1.0, a("x"))], Bound::PosInf).unwrap();
        assert_eq!(c1, c2);
        let set: std::collections::HashSet<_> = [c1, c2].into_iter().collect();
        assert_eq!(set.len(), 1);
    }

    fn arb_terms() -> impl Strategy<Value = Vec<LinTerm>> {
        prop::collection::vec(((-3i32..=3), prop::sample::select(vec!["a", "b", "c", "d"])), 0..8)
            .prop_map(|v| v.into_iter().map(|(c, n)| LinTerm::new(c as f64, a(n))).collect())
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(terms in arb_terms(), lb in -3i32..=3, width in 0i32..4) {
            let lb = Bound::Finite(lb as f64);
            let ub = Bound::Finite((lb.value() as i32 + width) as f64);
            let once = LinCons::new(lb, terms, ub).unwrap();
            let twice = LinCons::new(once.lb(), once.terms().to_vec(), once.ub()).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.check_invariants().is_ok());
        }

        #[test]
        fn term_order_does_not_matter(mut terms in arb_terms()) {
            let c1 = LinCons::new(Bound::Finite(0.0), terms.clone(), Bound::PosInf).unwrap();
            terms.reverse();
            let c2 = LinCons::new(Bound::Finite(0.0), terms, Bound::PosInf).unwrap();
            prop_assert_eq!(c1, c2);
        }
    }
}
