//! The semantic model of a program: domains, rules and per-atom attributes.
//!
//! A model is the direct counterpart of a problem definition module: variable
//! rules say which atoms exist, constraint rules generate linear rows, and the
//! objective/lb/ub/vartype rules are total functions over atoms, completed by
//! the default block. Attribute lookup is first match in declaration order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::atom::Atom;
use crate::diagnostic::Span;
use crate::lincons::Bound;

/// A rule argument: a logic variable (capitalized) or a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

/// `functor(t1, ..., tn)` with logic variables allowed in argument position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomPattern {
    pub functor: String,
    pub args: Vec<Term>,
}

impl AtomPattern {
    pub fn new(functor: impl Into<String>, args: Vec<Term>) -> Self {
        AtomPattern {
            functor: functor.into(),
            args,
        }
    }

    /// Does the pattern unify with a ground atom? Repeated variables must
    /// bind to the same constant.
    pub fn matches(&self, atom: &Atom) -> bool {
        if self.functor != atom.functor || self.args.len() != atom.args.len() {
            return false;
        }
        let mut seen: Vec<(&str, &str)> = Vec::new();
        for (term, value) in self.args.iter().zip(&atom.args) {
            match term {
                Term::Const(c) => {
                    if c != value {
                        return false;
                    }
                }
                Term::Var(v) => match seen.iter().find(|(name, _)| name == v) {
                    Some((_, bound)) if *bound != value => return false,
                    Some(_) => {}
                    None => seen.push((v, value)),
                },
            }
        }
        true
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for AtomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.functor)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

/// A body literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    /// `domain(T)`: `T` ranges over (or is tested against) a declared domain.
    Domain { domain: String, term: Term },
    /// `L op R`; ordering comparisons use domain declaration order.
    Compare { op: CmpOp, left: Term, right: Term },
    /// `not L`, evaluated once every variable of `L` is bound.
    Not(Box<Literal>),
}

impl Literal {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Literal::Domain { term, .. } => term.as_var().into_iter().collect(),
            Literal::Compare { left, right, .. } => left.as_var().into_iter().chain(right.as_var()).collect(),
            Literal::Not(inner) => inner.vars(),
        }
    }

    /// A positive domain literal over a variable binds that variable.
    pub fn binds(&self) -> Option<(&str, &str)> {
        match self {
            Literal::Domain {
                domain,
                term: Term::Var(v),
            } => Some((v, domain)),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Domain { domain, term } => write!(f, "{domain}({term})"),
            Literal::Compare { op, left, right } => write!(f, "{left} {} {right}", op.symbol()),
            Literal::Not(inner) => write!(f, "not {inner}"),
        }
    }
}

/// A constraint head: `lb <= sum(coef * pattern) <= ub` with free variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinTemplate {
    pub lb: Bound,
    pub terms: Vec<(f64, AtomPattern)>,
    pub ub: Bound,
}

impl LinTemplate {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().flat_map(|(_, p)| p.vars())
    }
}

/// `head :- body`. Spans are informational and ignored by
/// [`Model::strip_spans`]-based comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule<H> {
    pub head: H,
    pub body: Vec<Literal>,
    pub span: Option<Span>,
}

pub type VariableRule = Rule<AtomPattern>;
pub type ConstraintRule = Rule<LinTemplate>;

impl<H> Rule<H> {
    pub fn new(head: H, body: Vec<Literal>) -> Self {
        Rule { head, body, span: None }
    }

    /// Variables bound by some positive domain literal of the body.
    pub fn positively_bound(&self) -> BTreeSet<&str> {
        self.body.iter().filter_map(|l| l.binds().map(|(v, _)| v)).collect()
    }
}

/// `objective pattern = value;` and friends.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRule<T> {
    pub pattern: AtomPattern,
    pub value: T,
    pub span: Option<Span>,
}

impl<T> ValueRule<T> {
    pub fn new(pattern: AtomPattern, value: T) -> Self {
        ValueRule {
            pattern,
            value,
            span: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarType {
    Integer,
    Continuous,
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarType::Integer => "int",
            VarType::Continuous => "real",
        })
    }
}

/// Objective coefficient, bounds and type of one MIP variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarInfo {
    pub objective: f64,
    pub lb: f64,
    pub ub: f64,
    pub vartype: VarType,
}

impl VarInfo {
    pub fn check(&self) -> Result<(), String> {
        if self.lb > self.ub {
            return Err(format!("lower bound {} exceeds upper bound {}", self.lb, self.ub));
        }
        if self.lb == f64::INFINITY || self.ub == f64::NEG_INFINITY {
            return Err("bounds exclude every finite value".into());
        }
        if !self.objective.is_finite() {
            return Err("objective coefficient is not finite".into());
        }
        if self.vartype == VarType::Integer && self.lb.ceil() > self.ub.floor() {
            return Err(format!(
                "integer variable has no integer value in [{}, {}]",
                self.lb, self.ub
            ));
        }
        Ok(())
    }

    pub fn is_integer(&self) -> bool {
        self.vartype == VarType::Integer
    }
}

/// Values used when no attribute rule matches an atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub objective: f64,
    pub lb: f64,
    pub ub: f64,
    pub vartype: VarType,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            objective: 0.0,
            lb: 0.0,
            ub: 1.0,
            vartype: VarType::Integer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub constants: Vec<String>,
}

impl Domain {
    pub fn new<I, S>(name: impl Into<String>, constants: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Domain {
            name: name.into(),
            constants: constants.into_iter().map(Into::into).collect(),
        }
    }

    pub fn position(&self, constant: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == constant)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown variable family `{0}`")]
    UnknownFunctor(String),
    #[error("`{functor}` takes {expected} argument(s), got {found}")]
    ArityMismatch {
        functor: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid attributes for {atom}: {reason}")]
    InvalidVarInfo { atom: Atom, reason: String },
}

/// A parsed program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub domains: Vec<Domain>,
    /// Argument domains per functor, taken from the variable rules.
    pub signatures: BTreeMap<String, Vec<String>>,
    pub variable_rules: Vec<VariableRule>,
    pub constraint_rules: Vec<ConstraintRule>,
    pub objective_rules: Vec<ValueRule<f64>>,
    pub lb_rules: Vec<ValueRule<f64>>,
    pub ub_rules: Vec<ValueRule<f64>>,
    pub vartype_rules: Vec<ValueRule<VarType>>,
    pub defaults: Defaults,
}

fn first_match<T: Copy>(rules: &[ValueRule<T>], atom: &Atom, default: T) -> T {
    rules
        .iter()
        .find(|r| r.pattern.matches(atom))
        .map_or(default, |r| r.value)
}

impl Model {
    pub fn domain(&self, name: &str) -> Option<&Domain> {
        self.domains.iter().find(|d| d.name == name)
    }

    pub fn signature(&self, functor: &str) -> Option<&[String]> {
        self.signatures.get(functor).map(Vec::as_slice)
    }

    /// Objective, bounds and type of `atom`: first matching rule per
    /// attribute in declaration order, else the default block.
    pub fn atom_info(&self, atom: &Atom) -> Result<VarInfo, ModelError> {
        let sig = self
            .signature(&atom.functor)
            .ok_or_else(|| ModelError::UnknownFunctor(atom.functor.clone()))?;
        if sig.len() != atom.arity() {
            return Err(ModelError::ArityMismatch {
                functor: atom.functor.clone(),
                expected: sig.len(),
                found: atom.arity(),
            });
        }
        let info = VarInfo {
            objective: first_match(&self.objective_rules, atom, self.defaults.objective),
            lb: first_match(&self.lb_rules, atom, self.defaults.lb),
            ub: first_match(&self.ub_rules, atom, self.defaults.ub),
            vartype: first_match(&self.vartype_rules, atom, self.defaults.vartype),
        };
        info.check().map_err(|reason| ModelError::InvalidVarInfo {
            atom: atom.clone(),
            reason,
        })?;
        Ok(info)
    }

    /// Every attribute value that some atom of `functor` could receive:
    /// the values of rules with that functor, plus the default.
    pub fn possible_values<'a, T: Copy>(
        rules: &'a [ValueRule<T>],
        functor: &'a str,
        default: T,
    ) -> impl Iterator<Item = T> + 'a {
        rules
            .iter()
            .filter(move |r| r.pattern.functor == functor)
            .map(|r| r.value)
            .chain(std::iter::once(default))
    }

    /// Clears all source spans, for structural comparison of models.
    pub fn strip_spans(&mut self) {
        for r in &mut self.variable_rules {
            r.span = None;
        }
        for r in &mut self.constraint_rules {
            r.span = None;
        }
        for rules in [&mut self.objective_rules, &mut self.lb_rules, &mut self.ub_rules] {
            for r in rules.iter_mut() {
                r.span = None;
            }
        }
        for r in &mut self.vartype_rules {
            r.span = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn protein_model() -> Model {
        let mut m = Model::default();
        m.domains.push(Domain::new("protein", ["p1", "p2"]));
        m.domains.push(Domain::new("location_id", ["l1", "l2"]));
        m.signatures
            .insert("location".into(), vec!["protein".into(), "location_id".into()]);
        m.signatures
            .insert("interaction".into(), vec!["protein".into(), "protein".into()]);
        m
    }

    #[test]
    fn defaults_when_nothing_matches() {
        let m = protein_model();
        let info = m.atom_info(&Atom::new("location", ["p1", "l1"])).unwrap();
        assert_eq!(
            info,
            VarInfo {
                objective: 0.0,
                lb: 0.0,
                ub: 1.0,
                vartype: VarType::Integer
            }
        );
    }

    #[test]
    fn objective_rule_direct_match() {
        let mut m = protein_model();
        m.objective_rules.push(ValueRule::new(
            AtomPattern::new("interaction", vec![Term::var("P1"), Term::var("P2")]),
            -1.0,
        ));
        let info = m.atom_info(&Atom::new("interaction", ["p1", "p2"])).unwrap();
        assert_eq!(info.objective, -1.0);
        let info = m.atom_info(&Atom::new("location", ["p1", "l1"])).unwrap();
        assert_eq!(info.objective, 0.0);
    }

    #[test]
    fn continuous_functor_with_bounds() {
        let mut m = protein_model();
        let pat = AtomPattern::new("location", vec![Term::var("P"), Term::var("L")]);
        m.vartype_rules.push(ValueRule::new(pat.clone(), VarType::Continuous));
        m.ub_rules.push(ValueRule::new(pat.clone(), 2.5));
        m.lb_rules.push(ValueRule::new(pat, -1.5));
        let info = m.atom_info(&Atom::new("location", ["p2", "l2"])).unwrap();
        assert_eq!(info.vartype, VarType::Continuous);
        assert_eq!((info.lb, info.ub), (-1.5, 2.5));
    }

    #[test]
    fn first_match_wins() {
        let mut m = protein_model();
        m.objective_rules.push(ValueRule::new(
            AtomPattern::new("interaction", vec![Term::var("P"), Term::var("P")]),
            5.0,
        ));
        m.objective_rules.push(ValueRule::new(
            AtomPattern::new("interaction", vec![Term::var("P"), Term::var("Q")]),
            -1.0,
        ));
        let diag = m.atom_info(&Atom::new("interaction", ["p1", "p1"])).unwrap();
        let off = m.atom_info(&Atom::new("interaction", ["p1", "p2"])).unwrap();
        assert_eq!((diag.objective, off.objective), (5.0, -1.0));
    }

    #[test]
    fn unknown_functor_and_arity() {
        let m = protein_model();
        assert_eq!(
            m.atom_info(&Atom::new("gene", ["g"])),
            Err(ModelError::UnknownFunctor("gene".into()))
        );
        assert!(matches!(
            m.atom_info(&Atom::new("location", ["p1"])),
            Err(ModelError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn integer_without_integer_point_is_rejected() {
        let mut m = protein_model();
        let pat = AtomPattern::new("location", vec![Term::var("P"), Term::var("L")]);
        m.lb_rules.push(ValueRule::new(pat.clone(), 0.2));
        m.ub_rules.push(ValueRule::new(pat, 0.8));
        assert!(matches!(
            m.atom_info(&Atom::new("location", ["p1", "l1"])),
            Err(ModelError::InvalidVarInfo { .. })
        ));
    }

    #[test]
    fn equal_atoms_key_identical_records() {
        let mut m = protein_model();
        m.objective_rules.push(ValueRule::new(
            AtomPattern::new("interaction", vec![Term::constant("p1"), Term::var("Q")]),
            -2.0,
        ));
        let mut table = HashMap::new();
        for p in ["p1", "p2"] {
            for q in ["p1", "p2"] {
                let a = Atom::new("interaction", [p, q]);
                table.insert(a.clone(), m.atom_info(&a).unwrap());
            }
        }
        let probe = Atom::new(String::from("interaction"), vec!["p1".to_string(), "p2".to_string()]);
        assert_eq!(table[&probe], m.atom_info(&probe).unwrap());
        assert_eq!(table[&probe].objective, -2.0);
    }
}
