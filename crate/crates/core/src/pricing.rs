//! Searching the variable rules for atoms with negative reduced cost.
//!
//! Only the active rows enter a column. With duals `y`, an atom's reduced
//! cost is `c - Σ y_i a_i`, and only rows where `y_i a_i > 0` can push it
//! below `c`. The guided pricer collects the atoms of such rows and abandons
//! a partial variable-rule binding once no such atom fits the partially
//! bound head and no objective rule fitting it has a negative value.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use crate::atom::Atom;
use crate::grounder::search::{Binding, CompiledPattern, SearchVisitor};
use crate::grounder::{GroundError, Grounder};
use crate::lincons::LinCons;
use crate::model::{Model, Term};

pub const PRICING_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum PricerKind {
    Naive,
    #[default]
    Guided,
    /// Every atom is created up front; nothing is priced.
    Off,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PricingResult {
    /// Atoms with reduced cost below `-threshold`, most negative first,
    /// ties in canonical order.
    pub priced: Vec<(Atom, f64)>,
    /// The whole variable space was enumerated or soundly pruned.
    pub proof_complete: bool,
    /// Distinct candidate atoms (not yet created) reached.
    pub candidates_enumerated: u64,
    pub columns_built: u64,
}

/// `(row index, coefficient)` for every active row containing `atom`.
pub fn column_of(atom: &Atom, active: &[LinCons]) -> Vec<(usize, f64)> {
    active
        .iter()
        .enumerate()
        .filter_map(|(i, row)| row.coefficient(atom).map(|c| (i, c)))
        .collect()
}

/// Columns of all atoms occurring in the active rows.
struct ColumnIndex<'r> {
    columns: HashMap<&'r Atom, Vec<(usize, f64)>>,
}

impl<'r> ColumnIndex<'r> {
    fn new(active: &'r [LinCons]) -> Self {
        let mut columns: HashMap<&Atom, Vec<(usize, f64)>> = HashMap::new();
        for (i, row) in active.iter().enumerate() {
            for t in row.terms() {
                columns.entry(&t.atom).or_default().push((i, t.coef));
            }
        }
        ColumnIndex { columns }
    }

    fn column(&self, atom: &Atom) -> &[(usize, f64)] {
        self.columns.get(atom).map_or(&[], Vec::as_slice)
    }
}

pub struct Pricer<'g, 'm> {
    grounder: &'g Grounder<'m>,
}

struct Candidates<'a> {
    model: &'a Model,
    restricted: &'a HashSet<Atom>,
    duals: &'a [f64],
    index: ColumnIndex<'a>,
    /// Atoms that some active row could give a negative reduced cost,
    /// grouped by functor. `None` for the naive pricer.
    helped: Option<HashMap<&'a str, Vec<&'a Atom>>>,
    threshold: f64,
    seen: HashSet<Atom>,
    result: PricingResult,
    error: Option<GroundError>,
}

impl Candidates<'_> {
    fn visit(&mut self, atom: Atom) -> ControlFlow<()> {
        if self.restricted.contains(&atom) || self.seen.contains(&atom) {
            return ControlFlow::Continue(());
        }
        let info = match self.model.atom_info(&atom) {
            Ok(info) => info,
            Err(e) => {
                self.error = Some(e.into());
                return ControlFlow::Break(());
            }
        };
        self.result.candidates_enumerated += 1;
        if let Some(helped) = &self.helped {
            let is_helped = helped
                .get(atom.functor.as_str())
                .is_some_and(|v| v.iter().any(|a| **a == atom));
            if !is_helped && info.objective >= 0.0 {
                self.seen.insert(atom);
                return ControlFlow::Continue(());
            }
        }
        self.result.columns_built += 1;
        let rc = info.objective
            - self
                .index
                .column(&atom)
                .iter()
                .map(|&(i, a)| self.duals[i] * a)
                .sum::<f64>();
        // An uncreated atom rests at 0; it can only help if it may rise.
        if info.ub > 0.0 && rc < -self.threshold {
            self.result.priced.push((atom.clone(), rc));
        }
        self.seen.insert(atom);
        ControlFlow::Continue(())
    }
}

struct GuidedVisitor<'a, 'b, 'm> {
    head: &'a CompiledPattern<'m>,
    candidates: &'b mut Candidates<'a>,
    objective_rules: Vec<(&'a [Term], f64)>,
    default_objective: f64,
}

fn fits(pattern_args: &[Term], head: &CompiledPattern<'_>, binding: &Binding<'_>) -> bool {
    pattern_args
        .iter()
        .enumerate()
        .all(|(i, t)| match (t, head.arg(i, binding)) {
            (Term::Const(c), Some(v)) => c == v,
            _ => true,
        })
}

impl<'m> SearchVisitor<'m> for GuidedVisitor<'_, '_, 'm> {
    fn bound(&mut self, _step: usize, binding: &Binding<'m>) -> bool {
        let head = self.head;
        let helped = self.candidates.helped.as_ref().and_then(|h| h.get(head.functor));
        let any_helped = helped.is_some_and(|atoms| {
            atoms
                .iter()
                .any(|a| (0..head.arity()).all(|i| head.arg(i, binding).is_none_or(|v| a.args[i] == v)))
        });
        if any_helped {
            return true;
        }
        let min_objective = self
            .objective_rules
            .iter()
            .filter(|(args, _)| fits(args, head, binding))
            .map(|&(_, v)| v)
            .fold(self.default_objective, f64::min);
        min_objective < 0.0
    }

    fn solution(&mut self, binding: &Binding<'m>) -> ControlFlow<()> {
        self.candidates.visit(self.head.instantiate(binding))
    }
}

impl<'g, 'm> Pricer<'g, 'm> {
    pub fn new(grounder: &'g Grounder<'m>) -> Self {
        Pricer { grounder }
    }

    /// Prices every atom outside `restricted` against `active` rows with
    /// the given duals (indexed like `active`).
    pub fn price(
        &self,
        kind: PricerKind,
        restricted: &HashSet<Atom>,
        duals: &[f64],
        active: &[LinCons],
        threshold: f64,
    ) -> Result<PricingResult, GroundError> {
        assert_eq!(duals.len(), active.len(), "one dual per active row");
        let model = self.grounder.model;
        let mut cand = Candidates {
            model,
            restricted,
            duals,
            index: ColumnIndex::new(active),
            helped: None,
            threshold,
            seen: HashSet::new(),
            result: PricingResult::default(),
            error: None,
        };
        match kind {
            PricerKind::Off => return Ok(PricingResult::default()),
            PricerKind::Naive => {
                let _ = self.grounder.for_each_atom(|a| cand.visit(a));
            }
            PricerKind::Guided => {
                let mut helped: HashMap<&str, Vec<&Atom>> = HashMap::new();
                let mut marked: HashSet<&Atom> = HashSet::new();
                for (i, row) in active.iter().enumerate() {
                    for t in row.terms() {
                        if duals[i] * t.coef > 0.0 && marked.insert(&t.atom) {
                            helped.entry(t.atom.functor.as_str()).or_default().push(&t.atom);
                        }
                    }
                }
                cand.helped = Some(helped);
                for vr in &self.grounder.var_rules {
                    let objective_rules = model
                        .objective_rules
                        .iter()
                        .filter(|r| r.pattern.functor == vr.head.functor && r.pattern.args.len() == vr.head.arity())
                        .map(|r| (r.pattern.args.as_slice(), r.value))
                        .collect();
                    let mut visitor = GuidedVisitor {
                        head: &vr.head,
                        candidates: &mut cand,
                        objective_rules,
                        default_objective: model.defaults.objective,
                    };
                    if vr.plan.search(&self.grounder.table, &mut visitor).is_break() {
                        break;
                    }
                }
            }
        }
        if let Some(e) = cand.error {
            return Err(e);
        }
        let mut result = cand.result;
        result.proof_complete = true;
        result
            .priced
            .sort_by(|(a, ra), (b, rb)| ra.total_cmp(rb).then_with(|| a.cmp(b)));
        Ok(result)
    }
}

pub fn price_naive(
    model: &Model,
    restricted: &HashSet<Atom>,
    duals: &[f64],
    active: &[LinCons],
    threshold: f64,
) -> Result<PricingResult, GroundError> {
    let g = Grounder::new(model);
    Pricer::new(&g).price(PricerKind::Naive, restricted, duals, active, threshold)
}

pub fn price_guided(
    model: &Model,
    restricted: &HashSet<Atom>,
    duals: &[f64],
    active: &[LinCons],
    threshold: f64,
) -> Result<PricingResult, GroundError> {
    let g = Grounder::new(model);
    Pricer::new(&g).price(PricerKind::Guided, restricted, duals, active, threshold)
}
