//! Body evaluation: nested-loop join over positive domain literals, with
//! every other literal applied as soon as its variables are bound.
//!
//! The same engine serves grounding, separation and pricing. Callers observe
//! the search through [`SearchVisitor`], which can prune a partial binding
//! after any binding step and stop the search early.

use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::atom::Atom;
use crate::lincons::{Bound, LinCons, LinConsError, LinTerm};
use crate::model::{AtomPattern, CmpOp, Domain, LinTemplate, Literal, Model, Term};

/// Domain of the first positive domain literal binding `var`.
pub(crate) fn binding_domain<'a>(body: &'a [Literal], var: &str) -> Option<&'a str> {
    body.iter()
        .filter_map(Literal::binds)
        .find(|(v, _)| *v == var)
        .map(|(_, d)| d)
}

/// The domain whose declaration order an ordering comparison uses.
/// `Ok(None)` for `=`/`!=` or when a side is unbound (reported as unsafe
/// elsewhere).
pub(crate) fn comparison_domain<'m>(
    model: &'m Model,
    body: &[Literal],
    op: CmpOp,
    left: &Term,
    right: &Term,
) -> Result<Option<&'m Domain>, String> {
    if matches!(op, CmpOp::Eq | CmpOp::Ne) {
        return Ok(None);
    }
    let side_domain = |t: &Term| t.as_var().map(|v| binding_domain(body, v));
    let domain_name = match (side_domain(left), side_domain(right)) {
        (Some(None), _) | (_, Some(None)) => return Ok(None),
        (Some(Some(a)), Some(Some(b))) if a != b => {
            return Err(format!(
                "cannot order `{left}` and `{right}`: compared variables range over different domains `{a}` and `{b}`"
            ))
        }
        (Some(Some(a)), _) | (_, Some(Some(a))) => Some(a),
        (None, None) => None,
    };
    let domain = match domain_name {
        Some(name) => match model.domain(name) {
            Some(d) => d,
            None => return Ok(None),
        },
        None => {
            let (Term::Const(a), Term::Const(b)) = (left, right) else {
                unreachable!("both sides are constants here")
            };
            match model
                .domains
                .iter()
                .find(|d| d.position(a).is_some() && d.position(b).is_some())
            {
                Some(d) => d,
                None => return Err(format!("cannot order `{a}` and `{b}`: no domain contains both")),
            }
        }
    };
    for t in [left, right] {
        if let Term::Const(c) = t {
            if domain.position(c).is_none() {
                return Err(format!("cannot order `{c}`: it is not in domain `{}`", domain.name));
            }
        }
    }
    Ok(Some(domain))
}

struct DomainIndex<'m> {
    constants: Vec<&'m str>,
    position: HashMap<&'m str, usize>,
}

/// Hash-indexed view of a model's domains.
pub struct DomainTable<'m> {
    domains: Vec<DomainIndex<'m>>,
    by_name: HashMap<&'m str, usize>,
}

impl<'m> DomainTable<'m> {
    pub fn new(model: &'m Model) -> Self {
        let mut by_name = HashMap::new();
        let domains = model
            .domains
            .iter()
            .enumerate()
            .map(|(i, d)| {
                by_name.entry(d.name.as_str()).or_insert(i);
                let constants: Vec<&str> = d.constants.iter().map(String::as_str).collect();
                let position = constants.iter().enumerate().map(|(i, c)| (*c, i)).collect();
                DomainIndex { constants, position }
            })
            .collect();
        DomainTable { domains, by_name }
    }

    fn id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// The model-owned copy of `constant` if it belongs to `domain`.
    pub fn intern(&self, domain: &str, constant: &str) -> Option<&'m str> {
        let d = &self.domains[self.id(domain)?];
        d.position.get(constant).map(|&i| d.constants[i])
    }

    fn contains(&self, domain: usize, constant: &str) -> bool {
        self.domains[domain].position.contains_key(constant)
    }

    fn position(&self, domain: usize, constant: &str) -> Option<usize> {
        self.domains[domain].position.get(constant).copied()
    }
}

/// A partial assignment of logic variables, indexed by slot.
pub type Binding<'m> = [Option<&'m str>];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot<'m> {
    Var(usize),
    Const(&'m str),
}

impl<'m> Slot<'m> {
    fn get(self, binding: &Binding<'m>) -> Option<&'m str> {
        match self {
            Slot::Var(i) => binding[i],
            Slot::Const(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone)]
enum Check<'m> {
    Member {
        term: Slot<'m>,
        domain: Option<usize>,
        negated: bool,
    },
    Compare {
        op: CmpOp,
        left: Slot<'m>,
        right: Slot<'m>,
        order: Option<usize>,
        negated: bool,
    },
}

impl<'m> Check<'m> {
    fn holds(&self, table: &DomainTable<'m>, binding: &Binding<'m>) -> bool {
        match self {
            Check::Member { term, domain, negated } => {
                let inside = match (term.get(binding), domain) {
                    (Some(c), Some(d)) => table.contains(*d, c),
                    _ => false,
                };
                inside != *negated
            }
            Check::Compare {
                op,
                left,
                right,
                order,
                negated,
            } => {
                let (Some(l), Some(r)) = (left.get(binding), right.get(binding)) else {
                    return false;
                };
                let truth = match op {
                    CmpOp::Eq => l == r,
                    CmpOp::Ne => l != r,
                    CmpOp::Lt | CmpOp::Le => {
                        let pos = |c| order.and_then(|d| table.position(d, c));
                        match (pos(l), pos(r)) {
                            (Some(a), Some(b)) => {
                                if *op == CmpOp::Lt {
                                    a < b
                                } else {
                                    a <= b
                                }
                            }
                            _ => false,
                        }
                    }
                };
                truth != *negated
            }
        }
    }

    fn slots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut push = |s: &Slot<'m>| {
            if let Slot::Var(i) = s {
                out.push(*i);
            }
        };
        match self {
            Check::Member { term, .. } => push(term),
            Check::Compare { left, right, .. } => {
                push(left);
                push(right);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Step<'m> {
    slot: usize,
    domain: Option<usize>,
    checks: Vec<Check<'m>>,
}

/// Observer of a body search.
pub trait SearchVisitor<'m> {
    /// Called after step `step` has bound its variable and every literal
    /// scheduled there holds. Returning `false` prunes the subtree.
    fn bound(&mut self, _step: usize, _binding: &Binding<'m>) -> bool {
        true
    }

    /// Called once per complete satisfying assignment.
    fn solution(&mut self, binding: &Binding<'m>) -> ControlFlow<()>;
}

impl<'m, F> SearchVisitor<'m> for F
where
    F: FnMut(&Binding<'m>) -> ControlFlow<()>,
{
    fn solution(&mut self, binding: &Binding<'m>) -> ControlFlow<()> {
        self(binding)
    }
}

/// A compiled rule body.
#[derive(Debug, Clone)]
pub struct BodyPlan<'m> {
    vars: Vec<String>,
    steps: Vec<Step<'m>>,
    pre_checks: Vec<Check<'m>>,
}

impl<'m> BodyPlan<'m> {
    /// Compiles `body` evaluating positive domain literals in written order.
    pub fn compile(model: &'m Model, table: &DomainTable<'m>, body: &'m [Literal]) -> Self {
        let order: Vec<usize> = (0..body.len()).collect();
        Self::compile_ordered(model, table, body, &order)
    }

    /// Compiles `body` with its literals visited in `order` (a permutation of
    /// literal indices). Only the nesting order of the binding loops depends
    /// on it; the set of solutions does not.
    pub fn compile_ordered(model: &'m Model, table: &DomainTable<'m>, body: &'m [Literal], order: &[usize]) -> Self {
        let mut vars: Vec<String> = Vec::new();
        let slot_of = |vars: &mut Vec<String>, name: &str| -> usize {
            match vars.iter().position(|v| v == name) {
                Some(i) => i,
                None => {
                    vars.push(name.to_string());
                    vars.len() - 1
                }
            }
        };
        let mut steps: Vec<Step<'m>> = Vec::new();
        let mut bound_at: Vec<Option<usize>> = Vec::new();
        let mut checks: Vec<Check<'m>> = Vec::new();

        for &i in order {
            let lit = &body[i];
            if let Some((v, domain)) = lit.binds() {
                let slot = slot_of(&mut vars, v);
                bound_at.resize(vars.len(), None);
                if bound_at[slot].is_none() {
                    bound_at[slot] = Some(steps.len());
                    steps.push(Step {
                        slot,
                        domain: table.id(domain),
                        checks: Vec::new(),
                    });
                    continue;
                }
            }
            checks.push(compile_check(model, table, body, lit, false, &mut |name| {
                slot_of(&mut vars, name)
            }));
        }
        bound_at.resize(vars.len(), None);

        let mut pre_checks = Vec::new();
        for check in checks {
            let at = check.slots().iter().map(|&s| bound_at[s].unwrap_or(usize::MAX)).max();
            match at {
                None => pre_checks.push(check),
                // Unsafe literal: its variable is never bound, so it fails.
                Some(usize::MAX) => pre_checks.push(Check::Member {
                    term: Slot::Const(""),
                    domain: None,
                    negated: false,
                }),
                Some(step) => steps[step].checks.push(check),
            }
        }
        BodyPlan {
            vars,
            steps,
            pre_checks,
        }
    }

    pub fn num_slots(&self) -> usize {
        self.vars.len()
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Slot of a named variable, if it occurs in the body.
    pub fn slot(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    /// Slot bound by step `step`.
    pub fn step_slot(&self, step: usize) -> usize {
        self.steps[step].slot
    }

    pub fn empty_binding(&self) -> Vec<Option<&'m str>> {
        vec![None; self.vars.len()]
    }

    /// Enumerates every satisfying assignment in nested-loop order.
    pub fn search<V: SearchVisitor<'m>>(&self, table: &DomainTable<'m>, visitor: &mut V) -> ControlFlow<()> {
        let mut binding = self.empty_binding();
        self.search_from(table, &mut binding, visitor)
    }

    /// Like [`BodyPlan::search`], starting from a partial binding. Steps whose
    /// variable is already bound act as membership tests.
    pub fn search_from<V: SearchVisitor<'m>>(
        &self,
        table: &DomainTable<'m>,
        binding: &mut Vec<Option<&'m str>>,
        visitor: &mut V,
    ) -> ControlFlow<()> {
        if !self.pre_checks.iter().all(|c| c.holds(table, binding)) {
            return ControlFlow::Continue(());
        }
        self.descend(table, 0, binding, visitor)
    }

    fn descend<V: SearchVisitor<'m>>(
        &self,
        table: &DomainTable<'m>,
        depth: usize,
        binding: &mut Vec<Option<&'m str>>,
        visitor: &mut V,
    ) -> ControlFlow<()> {
        let Some(step) = self.steps.get(depth) else {
            return visitor.solution(binding);
        };
        let Some(domain) = step.domain else {
            return ControlFlow::Continue(());
        };
        if let Some(c) = binding[step.slot] {
            if table.contains(domain, c)
                && step.checks.iter().all(|k| k.holds(table, binding))
                && visitor.bound(depth, binding)
            {
                return self.descend(table, depth + 1, binding, visitor);
            }
            return ControlFlow::Continue(());
        }
        for &c in &table.domains[domain].constants {
            binding[step.slot] = Some(c);
            if step.checks.iter().all(|k| k.holds(table, binding)) && visitor.bound(depth, binding) {
                if let ControlFlow::Break(()) = self.descend(table, depth + 1, binding, visitor) {
                    binding[step.slot] = None;
                    return ControlFlow::Break(());
                }
            }
        }
        binding[step.slot] = None;
        ControlFlow::Continue(())
    }
}

fn compile_check<'m>(
    model: &'m Model,
    table: &DomainTable<'m>,
    body: &'m [Literal],
    lit: &'m Literal,
    negated: bool,
    slot_of: &mut dyn FnMut(&str) -> usize,
) -> Check<'m> {
    let mut slot = |t: &'m Term| match t {
        Term::Var(v) => Slot::Var(slot_of(v)),
        Term::Const(c) => Slot::Const(c.as_str()),
    };
    match lit {
        Literal::Domain { domain, term } => Check::Member {
            term: slot(term),
            domain: table.id(domain),
            negated,
        },
        Literal::Compare { op, left, right } => {
            let order = comparison_domain(model, body, *op, left, right)
                .ok()
                .flatten()
                .and_then(|d| table.id(&d.name));
            Check::Compare {
                op: *op,
                left: slot(left),
                right: slot(right),
                order,
                negated,
            }
        }
        Literal::Not(inner) => compile_check(model, table, body, inner, !negated, slot_of),
    }
}

/// An atom pattern resolved against a plan's slots.
#[derive(Debug, Clone)]
pub struct CompiledPattern<'m> {
    pub functor: &'m str,
    pub(crate) args: Vec<Slot<'m>>,
}

impl<'m> CompiledPattern<'m> {
    pub fn compile(plan: &BodyPlan<'m>, pattern: &'m AtomPattern) -> Self {
        let args = pattern
            .args
            .iter()
            .map(|t| match t {
                // An unsafe head variable never binds; it cannot occur once
                // the model has been validated.
                Term::Var(v) => Slot::Var(plan.slot(v).unwrap_or(usize::MAX)),
                Term::Const(c) => Slot::Const(c.as_str()),
            })
            .collect();
        CompiledPattern {
            functor: &pattern.functor,
            args,
        }
    }

    /// Slots this pattern reads.
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.args.iter().filter_map(|s| match s {
            Slot::Var(i) => Some(*i),
            Slot::Const(_) => None,
        })
    }

    /// Argument `i` under `binding`, if known.
    pub fn arg(&self, i: usize, binding: &Binding<'m>) -> Option<&'m str> {
        match self.args[i] {
            Slot::Var(s) => binding.get(s).copied().flatten(),
            Slot::Const(c) => Some(c),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn instantiate(&self, binding: &Binding<'m>) -> Atom {
        Atom {
            functor: self.functor.to_string(),
            args: (0..self.args.len())
                .map(|i| self.arg(i, binding).unwrap_or_default().to_string())
                .collect(),
        }
    }
}

/// A constraint head resolved against a plan's slots.
#[derive(Debug, Clone)]
pub struct CompiledTemplate<'m> {
    pub lb: Bound,
    pub ub: Bound,
    pub terms: Vec<(f64, CompiledPattern<'m>)>,
}

impl<'m> CompiledTemplate<'m> {
    pub fn compile(plan: &BodyPlan<'m>, template: &'m LinTemplate) -> Self {
        CompiledTemplate {
            lb: template.lb,
            ub: template.ub,
            terms: template
                .terms
                .iter()
                .map(|(c, p)| (*c, CompiledPattern::compile(plan, p)))
                .collect(),
        }
    }

    pub fn instantiate(&self, binding: &Binding<'m>) -> Result<LinCons, LinConsError> {
        let terms = self
            .terms
            .iter()
            .map(|(c, p)| LinTerm::new(*c, p.instantiate(binding)))
            .collect();
        LinCons::new(self.lb, terms, self.ub)
    }
}
