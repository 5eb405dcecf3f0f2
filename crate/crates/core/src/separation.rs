//! Finding ground constraint instances violated at an LP point.
//!
//! The naive separator enumerates every instance of every constraint rule
//! and tests it. The guided separator runs the same body search with its
//! binding loops reordered so that the variables of one head term at a time
//! are bound first; whenever a term becomes fully ground its value is added
//! to a partial activity, and the subtree is abandoned as soon as the
//! partial activity plus the most extreme contribution the unbound terms
//! could still make rules out a violation of either bound.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::ControlFlow;

use crate::grounder::search::{Binding, BodyPlan, CompiledTemplate, SearchVisitor};
use crate::grounder::{GroundError, Grounder};
use crate::lincons::{Bound, LinCons};
use crate::lp::PrimalView;
use crate::model::{Literal, Model};

pub const VIOLATION_THRESHOLD: f64 = 1e-6;

/// Σ coef·x over the row's terms.
pub fn activity<X: PrimalView + ?Sized>(x: &X, c: &LinCons) -> f64 {
    c.terms().iter().map(|t| t.coef * x.value(&t.atom)).sum()
}

/// `max(lb - act, act - ub, 0)` over the finite bounds.
pub fn violation(act: f64, c: &LinCons) -> f64 {
    let below = c.lb().finite().map_or(0.0, |lb| lb - act);
    let above = c.ub().finite().map_or(0.0, |ub| act - ub);
    below.max(above).max(0.0)
}

pub fn violates_bounds(act: f64, c: &LinCons, threshold: f64) -> bool {
    c.lb().finite().is_some_and(|lb| act < lb - threshold) || c.ub().finite().is_some_and(|ub| act > ub + threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum SeparatorKind {
    Naive,
    #[default]
    Guided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationOptions {
    pub threshold: f64,
    /// Keep only the most violated cuts.
    pub max_cuts: Option<usize>,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        SeparationOptions {
            threshold: VIOLATION_THRESHOLD,
            max_cuts: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeparationResult {
    /// Distinct violated rows, most violated first, ties in canonical order.
    pub cuts: Vec<(LinCons, f64)>,
    /// Complete ground instances examined.
    pub candidates_enumerated: u64,
    /// Partial bindings abandoned by the guided search.
    pub candidates_pruned: u64,
}

impl SeparationResult {
    pub fn cut_set(&self) -> BTreeSet<LinCons> {
        self.cuts.iter().map(|(c, _)| c.clone()).collect()
    }
}

struct GuidedRule<'m> {
    plan: BodyPlan<'m>,
    template: CompiledTemplate<'m>,
    /// Term indices that become ground at each binding step.
    completes_at: Vec<Vec<usize>>,
    /// Terms with no variables.
    ground_terms: Vec<usize>,
}

/// Literal order for the guided search: repeatedly take the head term with
/// the fewest unbound variables and bind those variables next; everything
/// else keeps its written position after that.
fn guided_order(body: &[Literal], term_vars: &[Vec<&str>]) -> Vec<usize> {
    let mut order = Vec::with_capacity(body.len());
    let mut used = vec![false; body.len()];
    let mut bound: HashSet<&str> = HashSet::new();
    let mut done = vec![false; term_vars.len()];
    loop {
        let next = (0..term_vars.len())
            .filter(|&t| !done[t])
            .min_by_key(|&t| term_vars[t].iter().filter(|v| !bound.contains(*v)).count());
        let Some(t) = next else { break };
        done[t] = true;
        for &v in &term_vars[t] {
            if !bound.insert(v) {
                continue;
            }
            if let Some(i) = (0..body.len()).find(|&i| !used[i] && body[i].binds().is_some_and(|(b, _)| b == v)) {
                used[i] = true;
                order.push(i);
            }
        }
    }
    order.extend((0..body.len()).filter(|&i| !used[i]));
    order
}

/// Both the naive and the guided separator over one compiled model.
pub struct Separator<'g, 'm> {
    grounder: &'g Grounder<'m>,
    guided: Vec<GuidedRule<'m>>,
}

impl<'g, 'm> Separator<'g, 'm> {
    pub fn new(grounder: &'g Grounder<'m>) -> Self {
        let model = grounder.model;
        let guided = model
            .constraint_rules
            .iter()
            .map(|rule| {
                let term_vars: Vec<Vec<&str>> = rule
                    .head
                    .terms
                    .iter()
                    .map(|(_, p)| {
                        let mut vs: Vec<&str> = Vec::new();
                        for v in p.vars() {
                            if !vs.contains(&v) {
                                vs.push(v);
                            }
                        }
                        vs
                    })
                    .collect();
                let order = guided_order(&rule.body, &term_vars);
                let plan = BodyPlan::compile_ordered(model, &grounder.table, &rule.body, &order);
                let template = CompiledTemplate::compile(&plan, &rule.head);
                let mut step_of_slot = vec![usize::MAX; plan.num_slots()];
                for step in 0..plan.num_steps() {
                    step_of_slot[plan.step_slot(step)] = step;
                }
                let mut completes_at = vec![Vec::new(); plan.num_steps()];
                let mut ground_terms = Vec::new();
                for (t, (_, pattern)) in template.terms.iter().enumerate() {
                    match pattern
                        .slots()
                        .map(|s| step_of_slot.get(s).copied().unwrap_or(usize::MAX))
                        .max()
                    {
                        None => ground_terms.push(t),
                        // Never ground (unsafe); the search cannot reach a
                        // leaf, so the term needs no bookkeeping.
                        Some(usize::MAX) => {}
                        Some(step) => completes_at[step].push(t),
                    }
                }
                GuidedRule {
                    plan,
                    template,
                    completes_at,
                    ground_terms,
                }
            })
            .collect();
        Separator { grounder, guided }
    }

    pub fn separate<X: PrimalView + ?Sized>(
        &self,
        kind: SeparatorKind,
        x: &X,
        opts: &SeparationOptions,
    ) -> Result<SeparationResult, GroundError> {
        self.separate_excluding(kind, x, opts, &|_| false)
    }

    /// Like [`Separator::separate`], dropping rows for which `exclude`
    /// holds before the cap is applied.
    pub fn separate_excluding<X: PrimalView + ?Sized>(
        &self,
        kind: SeparatorKind,
        x: &X,
        opts: &SeparationOptions,
        exclude: &dyn Fn(&LinCons) -> bool,
    ) -> Result<SeparationResult, GroundError> {
        let mut collector = Collector {
            x,
            threshold: opts.threshold,
            seen: HashSet::new(),
            cuts: Vec::new(),
            enumerated: 0,
            error: None,
        };
        let mut pruned = 0;
        match kind {
            SeparatorKind::Naive => {
                for cr in &self.grounder.cons_rules {
                    let flow = cr.plan.search(&self.grounder.table, &mut |b: &Binding<'m>| {
                        collector.leaf(&cr.template, b, cr.rule.span)
                    });
                    if flow.is_break() {
                        break;
                    }
                }
            }
            SeparatorKind::Guided => {
                let ranges = value_ranges(x);
                for (gr, cr) in self.guided.iter().zip(&self.grounder.cons_rules) {
                    let mut visitor = Pruner::new(gr, &ranges, &mut collector, cr.rule.span);
                    let flow = gr.plan.search(&self.grounder.table, &mut visitor);
                    pruned += visitor.pruned;
                    if flow.is_break() {
                        break;
                    }
                }
            }
        }
        if let Some(e) = collector.error {
            return Err(e);
        }
        let mut cuts: Vec<(LinCons, f64)> = collector.cuts.into_iter().filter(|(c, _)| !exclude(c)).collect();
        cuts.sort_by(|(a, va), (b, vb)| vb.total_cmp(va).then_with(|| a.cmp(b)));
        if let Some(cap) = opts.max_cuts {
            cuts.truncate(cap);
        }
        Ok(SeparationResult {
            cuts,
            candidates_enumerated: collector.enumerated,
            candidates_pruned: pruned,
        })
    }
}

struct Collector<'x, X: ?Sized> {
    x: &'x X,
    threshold: f64,
    seen: HashSet<LinCons>,
    cuts: Vec<(LinCons, f64)>,
    enumerated: u64,
    error: Option<GroundError>,
}

impl<X: PrimalView + ?Sized> Collector<'_, X> {
    fn leaf<'m>(
        &mut self,
        template: &CompiledTemplate<'m>,
        binding: &Binding<'m>,
        span: Option<crate::diagnostic::Span>,
    ) -> ControlFlow<()> {
        self.enumerated += 1;
        let row = match template.instantiate(binding) {
            Ok(row) => row,
            Err(source) => {
                self.error = Some(GroundError::Constraint { source, span });
                return ControlFlow::Break(());
            }
        };
        let act = activity(self.x, &row);
        if violates_bounds(act, &row, self.threshold) && !self.seen.contains(&row) {
            self.seen.insert(row.clone());
            let v = violation(act, &row);
            self.cuts.push((row, v));
        }
        ControlFlow::Continue(())
    }
}

/// Per functor, the interval `[min(0, min x), max(0, max x)]` over the
/// point's stored values; atoms without a value read as 0.
fn value_ranges<X: PrimalView + ?Sized>(x: &X) -> HashMap<String, (f64, f64)> {
    let mut ranges: HashMap<String, (f64, f64)> = HashMap::new();
    x.for_each_value(&mut |a, v| {
        let r = ranges.entry(a.functor.clone()).or_insert((0.0, 0.0));
        r.0 = r.0.min(v);
        r.1 = r.1.max(v);
    });
    ranges
}

struct Pruner<'a, 'c, 'x, 'm, X: ?Sized> {
    rule: &'a GuidedRule<'m>,
    collector: &'c mut Collector<'x, X>,
    span: Option<crate::diagnostic::Span>,
    /// Partial activity after each step.
    partial: Vec<f64>,
    ground_sum: f64,
    /// Extreme contributions of the terms not yet ground after each step.
    rest_min: Vec<f64>,
    rest_max: Vec<f64>,
    pruned: u64,
}

impl<'a, 'c, 'x, 'm, X: PrimalView + ?Sized> Pruner<'a, 'c, 'x, 'm, X> {
    fn new(
        rule: &'a GuidedRule<'m>,
        ranges: &HashMap<String, (f64, f64)>,
        collector: &'c mut Collector<'x, X>,
        span: Option<crate::diagnostic::Span>,
    ) -> Self {
        let steps = rule.completes_at.len();
        let contribution = |t: usize| {
            let (coef, pattern) = &rule.template.terms[t];
            let (lo, hi) = ranges.get(pattern.functor).copied().unwrap_or((0.0, 0.0));
            let (a, b) = (coef * lo, coef * hi);
            (a.min(b), a.max(b))
        };
        let mut rest_min = vec![0.0; steps];
        let mut rest_max = vec![0.0; steps];
        let (mut lo, mut hi) = (0.0, 0.0);
        for step in (0..steps).rev() {
            rest_min[step] = lo;
            rest_max[step] = hi;
            for &t in &rule.completes_at[step] {
                let (a, b) = contribution(t);
                lo += a;
                hi += b;
            }
        }
        let ground_sum = rule
            .ground_terms
            .iter()
            .map(|&t| {
                let (coef, pattern) = &rule.template.terms[t];
                coef * collector.x.value(&pattern.instantiate(&[]))
            })
            .sum();
        Pruner {
            rule,
            collector,
            span,
            partial: vec![0.0; steps],
            ground_sum,
            rest_min,
            rest_max,
            pruned: 0,
        }
    }

    fn can_violate(&self, lb: Bound, ub: Bound, lo: f64, hi: f64) -> bool {
        let thr = self.collector.threshold;
        let margin = |b: f64| 1e-9 * (1.0 + b.abs());
        let below = lb.finite().is_some_and(|b| lo < b - thr + margin(b));
        let above = ub.finite().is_some_and(|b| hi > b + thr - margin(b));
        below || above
    }
}

impl<'m, X: PrimalView + ?Sized> SearchVisitor<'m> for Pruner<'_, '_, '_, 'm, X> {
    fn bound(&mut self, step: usize, binding: &Binding<'m>) -> bool {
        let base = if step == 0 {
            self.ground_sum
        } else {
            self.partial[step - 1]
        };
        let newly = &self.rule.completes_at[step];
        let mut sum = base;
        for &t in newly {
            let (coef, pattern) = &self.rule.template.terms[t];
            sum += coef * self.collector.x.value(&pattern.instantiate(binding));
        }
        self.partial[step] = sum;
        if newly.is_empty() && step > 0 {
            return true;
        }
        let t = &self.rule.template;
        if self.can_violate(t.lb, t.ub, sum + self.rest_min[step], sum + self.rest_max[step]) {
            true
        } else {
            self.pruned += 1;
            false
        }
    }

    fn solution(&mut self, binding: &Binding<'m>) -> ControlFlow<()> {
        self.collector.leaf(&self.rule.template, binding, self.span)
    }
}

pub fn separate_naive<X: PrimalView + ?Sized>(model: &Model, x: &X) -> Result<SeparationResult, GroundError> {
    let g = Grounder::new(model);
    Separator::new(&g).separate(SeparatorKind::Naive, x, &SeparationOptions::default())
}

pub fn separate_guided<X: PrimalView + ?Sized>(model: &Model, x: &X) -> Result<SeparationResult, GroundError> {
    let g = Grounder::new(model);
    Separator::new(&g).separate(SeparatorKind::Guided, x, &SeparationOptions::default())
}
