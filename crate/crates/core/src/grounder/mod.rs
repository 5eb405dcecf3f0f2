//! Full grounding: every atom of every variable rule and every instance of
//! every constraint rule (findall semantics, with set semantics for rows).

pub mod search;

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::atom::Atom;
use crate::diagnostic::Span;
use crate::lincons::{LinCons, LinConsError};
use crate::model::{ConstraintRule, Model, ModelError, Term, VarInfo, VariableRule};
use search::{Binding, BodyPlan, CompiledPattern, CompiledTemplate, DomainTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    #[error("constraint instantiates {atom}, which no variable rule declares")]
    GroundAtomNotDeclared { atom: Atom, span: Option<Span> },
    #[error("grounding exceeds the limit of {limit} {what}")]
    SizeExceeded { what: &'static str, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid constraint instance: {source}")]
    Constraint { source: LinConsError, span: Option<Span> },
}

impl GroundError {
    pub fn span(&self) -> Option<Span> {
        match self {
            GroundError::GroundAtomNotDeclared { span, .. } | GroundError::Constraint { span, .. } => *span,
            _ => None,
        }
    }
}

/// The fully grounded instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundProblem {
    pub atoms: Vec<Atom>,
    pub infos: HashMap<Atom, VarInfo>,
    pub constraints: Vec<LinCons>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundLimits {
    pub max_atoms: usize,
    pub max_constraints: usize,
}

impl Default for GroundLimits {
    fn default() -> Self {
        GroundLimits {
            max_atoms: 200_000,
            max_constraints: 200_000,
        }
    }
}

pub(crate) struct CompiledVarRule<'m> {
    pub rule: &'m VariableRule,
    pub plan: BodyPlan<'m>,
    pub head: CompiledPattern<'m>,
}

pub(crate) struct CompiledConsRule<'m> {
    pub rule: &'m ConstraintRule,
    pub plan: BodyPlan<'m>,
    pub template: CompiledTemplate<'m>,
}

/// A model with its rule bodies compiled; shared by grounding, separation,
/// pricing and membership queries.
pub struct Grounder<'m> {
    pub model: &'m Model,
    pub table: DomainTable<'m>,
    pub(crate) var_rules: Vec<CompiledVarRule<'m>>,
    pub(crate) cons_rules: Vec<CompiledConsRule<'m>>,
}

impl<'m> Grounder<'m> {
    pub fn new(model: &'m Model) -> Self {
        let table = DomainTable::new(model);
        let var_rules = model
            .variable_rules
            .iter()
            .map(|rule| {
                let plan = BodyPlan::compile(model, &table, &rule.body);
                let head = CompiledPattern::compile(&plan, &rule.head);
                CompiledVarRule { rule, plan, head }
            })
            .collect();
        let cons_rules = model
            .constraint_rules
            .iter()
            .map(|rule| {
                let plan = BodyPlan::compile(model, &table, &rule.body);
                let template = CompiledTemplate::compile(&plan, &rule.head);
                CompiledConsRule { rule, plan, template }
            })
            .collect();
        Grounder {
            model,
            table,
            var_rules,
            cons_rules,
        }
    }

    /// Visits every derivable atom in rule order, then substitution order.
    /// Atoms derived by several substitutions are reported each time.
    pub fn for_each_atom(&self, mut f: impl FnMut(Atom) -> ControlFlow<()>) -> ControlFlow<()> {
        for vr in &self.var_rules {
            vr.plan
                .search(&self.table, &mut |b: &Binding<'m>| f(vr.head.instantiate(b)))?;
        }
        ControlFlow::Continue(())
    }

    /// Visits every constraint instance in rule order, then substitution
    /// order, before deduplication.
    pub fn for_each_constraint(&self, mut f: impl FnMut(LinCons) -> ControlFlow<()>) -> Result<(), GroundError> {
        let mut error = None;
        for cr in &self.cons_rules {
            let flow = cr
                .plan
                .search(&self.table, &mut |b: &Binding<'m>| match cr.template.instantiate(b) {
                    Ok(c) => f(c),
                    Err(source) => {
                        error = Some(GroundError::Constraint {
                            source,
                            span: cr.rule.span,
                        });
                        ControlFlow::Break(())
                    }
                });
            if let Some(e) = error {
                return Err(e);
            }
            if flow.is_break() {
                break;
            }
        }
        Ok(())
    }

    /// Is `atom` derivable from some variable rule? Evaluated by binding the
    /// rule head to the atom and checking the body, without enumerating the
    /// family.
    pub fn is_variable(&self, atom: &Atom) -> bool {
        self.var_rules.iter().any(|vr| {
            let head = &vr.rule.head;
            if head.functor != atom.functor || head.args.len() != atom.args.len() {
                return false;
            }
            let mut binding = vr.plan.empty_binding();
            for (term, value) in head.args.iter().zip(&atom.args) {
                match term {
                    Term::Const(c) => {
                        if c != value {
                            return false;
                        }
                    }
                    Term::Var(v) => {
                        let Some(slot) = vr.plan.slot(v) else {
                            return false;
                        };
                        let Some(domain) = search::binding_domain(&vr.rule.body, v) else {
                            return false;
                        };
                        let Some(interned) = self.table.intern(domain, value) else {
                            return false;
                        };
                        match binding[slot] {
                            Some(prev) if prev != interned => return false,
                            _ => binding[slot] = Some(interned),
                        }
                    }
                }
            }
            vr.plan
                .search_from(&self.table, &mut binding, &mut |_: &Binding<'m>| ControlFlow::Break(()))
                .is_break()
        })
    }

    pub fn ground_variables(&self, limit: usize) -> Result<Vec<Atom>, GroundError> {
        let mut seen = HashSet::new();
        let mut atoms = Vec::new();
        let flow = self.for_each_atom(|a| {
            if seen.insert(a.clone()) {
                atoms.push(a);
                if atoms.len() > limit {
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        });
        if flow.is_break() {
            return Err(GroundError::SizeExceeded { what: "atoms", limit });
        }
        Ok(atoms)
    }

    /// Distinct constraint instances; every referenced atom must be in
    /// `declared`.
    pub fn ground_constraints(&self, declared: &HashSet<Atom>, limit: usize) -> Result<Vec<LinCons>, GroundError> {
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        let mut error = None;
        for cr in &self.cons_rules {
            let flow = cr.plan.search(&self.table, &mut |b: &Binding<'m>| {
                let row = match cr.template.instantiate(b) {
                    Ok(row) => row,
                    Err(source) => {
                        error = Some(GroundError::Constraint {
                            source,
                            span: cr.rule.span,
                        });
                        return ControlFlow::Break(());
                    }
                };
                if let Some(t) = row.terms().iter().find(|t| !declared.contains(&t.atom)) {
                    error = Some(GroundError::GroundAtomNotDeclared {
                        atom: t.atom.clone(),
                        span: cr.rule.span,
                    });
                    return ControlFlow::Break(());
                }
                if seen.insert(row.clone()) {
                    rows.push(row);
                    if rows.len() > limit {
                        error = Some(GroundError::SizeExceeded {
                            what: "constraints",
                            limit,
                        });
                        return ControlFlow::Break(());
                    }
                }
                ControlFlow::Continue(())
            });
            if let Some(e) = error {
                return Err(e);
            }
            debug_assert!(flow.is_continue());
        }
        Ok(rows)
    }
}

/// All atoms derivable from the variable rules, deduplicated, in rule order
/// then substitution order.
pub fn ground_variables(model: &Model) -> Result<Vec<Atom>, GroundError> {
    Grounder::new(model).ground_variables(usize::MAX)
}

/// All distinct normalized constraint instances, in rule order then
/// substitution order.
pub fn ground_constraints(model: &Model) -> Result<Vec<LinCons>, GroundError> {
    let g = Grounder::new(model);
    let atoms: HashSet<Atom> = g.ground_variables(usize::MAX)?.into_iter().collect();
    g.ground_constraints(&atoms, usize::MAX)
}

pub fn ground(model: &Model) -> Result<GroundProblem, GroundError> {
    ground_with_limits(model, GroundLimits::default())
}

pub fn ground_with_limits(model: &Model, limits: GroundLimits) -> Result<GroundProblem, GroundError> {
    let g = Grounder::new(model);
    let atoms = g.ground_variables(limits.max_atoms)?;
    let declared: HashSet<Atom> = atoms.iter().cloned().collect();
    let constraints = g.ground_constraints(&declared, limits.max_constraints)?;
    let mut infos = HashMap::with_capacity(atoms.len());
    for a in &atoms {
        infos.insert(a.clone(), model.atom_info(a)?);
    }
    Ok(GroundProblem {
        atoms,
        infos,
        constraints,
    })
}
