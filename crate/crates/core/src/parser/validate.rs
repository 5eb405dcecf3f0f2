use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::diagnostic::{Diagnostic, Span};
use crate::grounder::search::{binding_domain, comparison_domain};
use crate::lincons::Bound;
use crate::model::{AtomPattern, Literal, Model, Rule, Term, ValueRule, VarInfo};

/// Signatures implied by the variable rules: each head argument is typed by
/// the domain that binds it (a constant by the first domain containing it).
pub fn infer_signatures(model: &Model) -> (BTreeMap<String, Vec<String>>, Vec<Diagnostic>) {
    let mut signatures: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut diags = Vec::new();
    for rule in &model.variable_rules {
        let span = rule.span.unwrap_or_default();
        let mut sig = Vec::new();
        let mut complete = true;
        for arg in &rule.head.args {
            let domain = match arg {
                Term::Var(v) => binding_domain(&rule.body, v).map(str::to_string),
                Term::Const(c) => model
                    .domains
                    .iter()
                    .find(|d| d.position(c).is_some())
                    .map(|d| d.name.clone()),
            };
            match domain {
                Some(d) => sig.push(d),
                None => {
                    // Reported by validate_model (unsafe variable / stray constant).
                    complete = false;
                }
            }
        }
        if !complete {
            continue;
        }
        match signatures.get(&rule.head.functor) {
            Some(existing) if *existing != sig => diags.push(Diagnostic::error(
                span,
                format!(
                    "variable family `{}` declared over ({}) here but over ({}) earlier",
                    rule.head.functor,
                    sig.join(", "),
                    existing.join(", ")
                ),
            )),
            Some(_) => {}
            None => {
                signatures.insert(rule.head.functor.clone(), sig);
            }
        }
    }
    (signatures, diags)
}

/// Every problem that would make grounding ill-defined, as diagnostics.
/// An empty result means the model is well formed.
pub fn validate_model(model: &Model) -> Vec<Diagnostic> {
    let mut v = Validator {
        model,
        diags: Vec::new(),
    };
    v.domains();
    let (inferred, sig_diags) = infer_signatures(model);
    v.diags.extend(sig_diags);
    for (functor, sig) in &inferred {
        if model.signature(functor) != Some(sig.as_slice()) {
            v.diags.push(Diagnostic::error(
                Span::default(),
                format!("signature of `{functor}` does not match its variable rules"),
            ));
        }
    }
    for rule in &model.variable_rules {
        let span = rule.span.unwrap_or_default();
        v.body(rule, rule.head.vars().collect(), span);
        v.head_constants(&rule.head, span);
    }
    for rule in &model.constraint_rules {
        let span = rule.span.unwrap_or_default();
        let head = &rule.head;
        v.body(rule, head.vars().collect(), span);
        for (coef, pattern) in &head.terms {
            v.pattern(pattern, span);
            v.head_constants(pattern, span);
            if !coef.is_finite() {
                v.error(span, format!("coefficient of {pattern} is not finite"));
            }
        }
        v.bounds(head.lb, head.ub, span);
    }
    for rules in [&model.objective_rules, &model.lb_rules, &model.ub_rules] {
        for r in rules {
            v.value_rule(r);
        }
    }
    for r in &model.objective_rules {
        if !r.value.is_finite() {
            v.error(r.span.unwrap_or_default(), "objective value must be finite");
        }
    }
    for r in &model.lb_rules {
        if r.value == f64::INFINITY || r.value.is_nan() {
            v.error(r.span.unwrap_or_default(), "inf is not a legal lower bound");
        }
    }
    for r in &model.ub_rules {
        if r.value == f64::NEG_INFINITY || r.value.is_nan() {
            v.error(r.span.unwrap_or_default(), "-inf is not a legal upper bound");
        }
    }
    for r in &model.vartype_rules {
        v.value_rule(r);
    }
    let d = model.defaults;
    let default_info = VarInfo {
        objective: d.objective,
        lb: d.lb,
        ub: d.ub,
        vartype: d.vartype,
    };
    if let Err(reason) = default_info.check() {
        v.error(Span::default(), format!("invalid default block: {reason}"));
    }
    v.diags
}

struct Validator<'m> {
    model: &'m Model,
    diags: Vec<Diagnostic>,
}

impl<'m> Validator<'m> {
    fn error(&mut self, span: Span, message: impl Into<String>) {
        self.diags.push(Diagnostic::error(span, message));
    }

    fn domains(&mut self) {
        let mut seen = HashSet::new();
        for d in &self.model.domains {
            if !seen.insert(d.name.as_str()) {
                self.error(Span::default(), format!("duplicate domain declaration `{}`", d.name));
            }
            let mut consts = HashSet::new();
            for c in &d.constants {
                if !consts.insert(c.as_str()) {
                    self.error(
                        Span::default(),
                        format!("duplicate constant `{c}` in domain `{}`", d.name),
                    );
                }
            }
        }
    }

    fn body<H>(&mut self, rule: &Rule<H>, head_vars: Vec<&str>, span: Span) {
        for lit in &rule.body {
            self.literal(lit, &rule.body, span);
        }
        let bound = rule.positively_bound();
        let mut unbound: BTreeSet<&str> = BTreeSet::new();
        for v in head_vars {
            if !bound.contains(v) {
                unbound.insert(v);
            }
        }
        for lit in &rule.body {
            for v in lit.vars() {
                if !bound.contains(v) {
                    unbound.insert(v);
                }
            }
        }
        if !unbound.is_empty() {
            let names: Vec<_> = unbound.into_iter().collect();
            self.error(
                span,
                format!(
                    "unsafe rule: {} not bound by a positive domain literal",
                    names.join(", ")
                ),
            );
        }
    }

    fn literal(&mut self, lit: &Literal, body: &[Literal], span: Span) {
        match lit {
            Literal::Domain { domain, term } => {
                if self.model.domain(domain).is_none() {
                    self.error(span, format!("unknown domain `{domain}`"));
                } else if let Term::Const(c) = term {
                    if self.model.domain(domain).and_then(|d| d.position(c)).is_none() {
                        self.diags.push(Diagnostic::warning(
                            span,
                            format!("`{c}` is not in domain `{domain}`; the literal is always false"),
                        ));
                    }
                }
            }
            Literal::Compare { op, left, right } => {
                if let Err(msg) = comparison_domain(self.model, body, *op, left, right) {
                    self.error(span, msg);
                }
            }
            Literal::Not(inner) => self.literal(inner, body, span),
        }
    }

    fn pattern(&mut self, pattern: &AtomPattern, span: Span) {
        match self.model.signature(&pattern.functor) {
            None => self.error(
                span,
                format!(
                    "unknown variable family `{}` (no var rule declares it)",
                    pattern.functor
                ),
            ),
            Some(sig) if sig.len() != pattern.args.len() => self.error(
                span,
                format!(
                    "arity mismatch: `{}` takes {} argument(s), got {}",
                    pattern.functor,
                    sig.len(),
                    pattern.args.len()
                ),
            ),
            Some(_) => {}
        }
    }

    fn head_constants(&mut self, pattern: &AtomPattern, span: Span) {
        let Some(sig) = self.model.signature(&pattern.functor) else {
            return;
        };
        for (arg, dom) in pattern.args.iter().zip(sig) {
            if let Term::Const(c) = arg {
                let in_domain = self.model.domain(dom).and_then(|d| d.position(c)).is_some();
                if !in_domain {
                    self.error(span, format!("constant `{c}` is not in domain `{dom}`"));
                }
            }
        }
    }

    fn value_rule<T>(&mut self, rule: &ValueRule<T>) {
        self.pattern(&rule.pattern, rule.span.unwrap_or_default());
    }

    fn bounds(&mut self, lb: Bound, ub: Bound, span: Span) {
        if !lb.is_finite() && !ub.is_finite() {
            self.error(span, "constraint has no finite bound");
            return;
        }
        if matches!(lb, Bound::PosInf) || matches!(ub, Bound::NegInf) {
            self.error(span, "bound is infinite on the wrong side");
            return;
        }
        if lb.value() > ub.value() {
            self.error(
                span,
                format!("lower bound {} exceeds upper bound {}", lb.value(), ub.value()),
            );
        }
        for b in [lb, ub] {
            if let Bound::Finite(x) = b {
                if !x.is_finite() {
                    self.error(span, "bound value is not finite; use inf/-inf");
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lincons::Bound;
    use crate::model::{Domain, LinTemplate};
    use crate::parser::{parse_model, SourceModel};

    fn protein() -> Model {
        parse_model(&SourceModel::new(
            "p",
            "domain protein = {p1, p2};\ndomain location_id = {l1, l2};\n\
             var location(protein, location_id);\nvar interaction(protein, protein);\n\
             constraint 1.0 <= location(P1, L1) + interaction(P1, P2) :- \
             protein(P1), protein(P2), P1 != P2, location_id(L1);\n",
        ))
        .unwrap()
    }

    #[test]
    fn valid_protein_model_is_clean() {
        assert_eq!(validate_model(&protein()), vec![]);
    }

    #[test]
    fn unbounded_constraint_head() {
        let mut m = protein();
        m.constraint_rules[0].head = LinTemplate {
            lb: Bound::NegInf,
            ub: Bound::PosInf,
            ..m.constraint_rules[0].head.clone()
        };
        let diags = validate_model(&m);
        assert!(diags.iter().any(|d| d.message == "constraint has no finite bound"));
    }

    #[test]
    fn undeclared_domain_in_variable_rule() {
        let mut m = protein();
        m.variable_rules[0].body[0] = Literal::Domain {
            domain: "gene".into(),
            term: Term::var("X1"),
        };
        let diags = validate_model(&m);
        assert!(diags.iter().any(|d| d.message.contains("unknown domain `gene`")));
    }

    #[test]
    fn comparison_across_domains_is_an_error() {
        let diags = parse_model(&SourceModel::new(
            "p",
            "domain a = {x, y};\ndomain b = {u, v};\nvar f(a, b);\n\
             constraint f(X, Y) >= 0 :- a(X), b(Y), X < Y;\n",
        ))
        .unwrap_err();
        assert!(diags.iter().any(|d| d.message.contains("different domains")));
    }

    #[test]
    fn duplicate_domains_in_programmatic_model() {
        let mut m = Model::default();
        m.domains.push(Domain::new("d", ["a"]));
        m.domains.push(Domain::new("d", ["b"]));
        assert!(validate_model(&m)
            .iter()
            .any(|d| d.message.contains("duplicate domain")));
    }

    #[test]
    fn conflicting_signatures() {
        let diags = parse_model(&SourceModel::new(
            "p",
            "domain a = {x};\ndomain b = {u};\nvar f(a);\nvar f(b);\n",
        ))
        .unwrap_err();
        assert!(diags.iter().any(|d| d.message.contains("declared over")));
    }
}
