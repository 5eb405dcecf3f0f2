//! The `.fomip` modeling language.
//!
//! ```text
//! domain protein = {p1, p2};
//! domain location_id = {l1, l2};
//! var location(protein, location_id);
//! var interaction(P1, P2) :- protein(P1), protein(P2);
//! objective interaction(P1, P2) = -1.0;
//! constraint 1.0 <= 1.0*location(P1, L1) + 1.0*interaction(P1, P2) <= inf
//!     :- protein(P1), protein(P2), P1 != P2, location_id(L1);
//! default { objective = 0.0; lb = 0.0; ub = 1.0; vartype = int; }
//! ```
//!
//! `var f(d1, ..., dn);` without a body declares the family over the full
//! product of the named domains. Capitalized identifiers are logic
//! variables, lowercase ones constants. Comments run from `%` to end of line.

mod lexer;
mod printer;
mod validate;

use crate::diagnostic::{has_errors, Diagnostic, Span};
use crate::lincons::Bound;
use crate::model::{AtomPattern, CmpOp, Domain, LinTemplate, Literal, Model, Rule, Term, ValueRule, VarType};
use lexer::{tokenize, Tok, Token};

pub use validate::{infer_signatures, validate_model};

/// Source text and the path it is reported under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceModel {
    pub text: String,
    pub path: String,
}

impl SourceModel {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceModel {
            path: path.into(),
            text: text.into(),
        }
    }

    /// Rejects input that is not UTF-8 with a diagnostic at the first bad
    /// byte.
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Result<Self, Diagnostic> {
        match std::str::from_utf8(bytes) {
            Ok(text) => Ok(SourceModel::new(path, text)),
            Err(e) => {
                let good = &bytes[..e.valid_up_to()];
                let line = 1 + good.iter().filter(|&&b| b == b'\n').count() as u32;
                let last_line = good.rsplit(|&b| b == b'\n').next().unwrap_or(&[]);
                let column = 1 + String::from_utf8_lossy(last_line).chars().count() as u32;
                Err(Diagnostic::error(
                    Span::new(line, column, 1),
                    "input is not valid UTF-8",
                ))
            }
        }
    }
}

/// Parses and validates a program. On failure every diagnostic is returned,
/// with at least one error.
pub fn parse_model(src: &SourceModel) -> Result<Model, Vec<Diagnostic>> {
    let (tokens, mut diags) = tokenize(&src.text);
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
        model: Model::default(),
        default_span: None,
        default_seen: [false; 4],
    };
    parser.program();
    diags.append(&mut parser.diags);
    let mut model = parser.model;
    if has_errors(&diags) {
        return Err(diags);
    }
    let (signatures, mut sig_diags) = infer_signatures(&model);
    model.signatures = signatures;
    diags.append(&mut sig_diags);
    if has_errors(&diags) {
        return Err(diags);
    }
    let report = validate_model(&model);
    if has_errors(&report) {
        return Err(report);
    }
    Ok(model)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    model: Model,
    default_span: Option<Span>,
    default_seen: [bool; 4],
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&mut self, span: Span, message: impl Into<String>) -> PResult<T> {
        self.diags.push(Diagnostic::error(span, message));
        Err(())
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let found = self.peek().describe();
        let span = self.span();
        self.fail(span, format!("syntax error: expected {expected}, found {found}"))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => self.unexpected(what),
        }
    }

    /// Skips past the next `;` (or to end of input).
    fn synchronize(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn program(&mut self) {
        while *self.peek() != Tok::Eof {
            if self.statement().is_err() {
                self.synchronize();
            }
        }
    }

    fn statement(&mut self) -> PResult<()> {
        let (kw, span) = match self.peek().clone() {
            Tok::Ident(kw) => (kw, self.span()),
            _ => return self.unexpected("a statement keyword"),
        };
        self.bump();
        match kw.as_str() {
            "domain" => self.domain(span),
            "var" => self.var_rule(span),
            "constraint" => self.constraint_rule(span),
            "objective" => {
                let rule = self.value_rule(span, Self::finite_number)?;
                self.model.objective_rules.push(rule);
                Ok(())
            }
            "lb" => {
                let rule = self.value_rule(span, Self::lower_value)?;
                self.model.lb_rules.push(rule);
                Ok(())
            }
            "ub" => {
                let rule = self.value_rule(span, Self::upper_value)?;
                self.model.ub_rules.push(rule);
                Ok(())
            }
            "vartype" => {
                let rule = self.value_rule(span, Self::vartype)?;
                self.model.vartype_rules.push(rule);
                Ok(())
            }
            "default" => self.default_block(span),
            other => self.fail(
                span,
                format!(
                    "syntax error: unknown statement `{other}` (expected domain, var, constraint, \
                     objective, lb, ub, vartype or default)"
                ),
            ),
        }
    }

    fn domain(&mut self, kw_span: Span) -> PResult<()> {
        let (name, name_span) = self.ident("a domain name")?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::LBrace)?;
        let mut constants: Vec<String> = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let (c, span) = self.constant()?;
                if constants.contains(&c) {
                    self.diags.push(Diagnostic::error(
                        span,
                        format!("duplicate constant `{c}` in domain `{name}`"),
                    ));
                } else {
                    constants.push(c);
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::Semi)?;
        if self.model.domain(&name).is_some() {
            let span = Span::new(kw_span.line, name_span.column, name_span.len);
            return self.fail(span, format!("duplicate domain declaration `{name}`"));
        }
        self.model.domains.push(Domain { name, constants });
        Ok(())
    }

    fn constant(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            Tok::Number(s) if s.chars().all(|c| c.is_ascii_digit()) => Ok((s, self.bump().span)),
            _ => self.unexpected("a constant"),
        }
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            _ => {
                let (c, _) = self.constant()?;
                Ok(Term::Const(c))
            }
        }
    }

    fn pattern(&mut self) -> PResult<AtomPattern> {
        let (functor, _) = self.ident("a variable family name")?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(AtomPattern { functor, args })
    }

    fn var_rule(&mut self, span: Span) -> PResult<()> {
        let head = self.pattern()?;
        if self.eat(&Tok::Neck) {
            let body = self.body()?;
            self.expect(Tok::Semi)?;
            self.model.variable_rules.push(Rule {
                head,
                body,
                span: Some(span),
            });
            return Ok(());
        }
        self.expect(Tok::Semi)?;
        // Declaration form: the arguments name domains.
        let mut args = Vec::new();
        let mut body = Vec::new();
        for (i, arg) in head.args.iter().enumerate() {
            match arg {
                Term::Const(domain) => {
                    let var = format!("X{}", i + 1);
                    args.push(Term::Var(var.clone()));
                    body.push(Literal::Domain {
                        domain: domain.clone(),
                        term: Term::Var(var),
                    });
                }
                Term::Var(v) => {
                    return self.fail(
                        span,
                        format!(
                            "unsafe rule: variable {v} in `var {}` is not bound by a body; \
                             declare domains or add `:- ...`",
                            head
                        ),
                    );
                }
            }
        }
        self.model.variable_rules.push(Rule {
            head: AtomPattern {
                functor: head.functor,
                args,
            },
            body,
            span: Some(span),
        });
        Ok(())
    }

    fn body(&mut self) -> PResult<Vec<Literal>> {
        let mut body = Vec::new();
        if *self.peek() == Tok::Semi {
            return Ok(body);
        }
        loop {
            body.push(self.literal()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(body)
    }

    fn literal(&mut self) -> PResult<Literal> {
        if self.is_keyword("not") && *self.peek_at(1) != Tok::LParen {
            self.bump();
            let inner = self.literal()?;
            return Ok(Literal::Not(Box::new(inner)));
        }
        if let (Tok::Ident(domain), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            let span = self.span();
            self.bump();
            self.bump();
            let term = self.term()?;
            if *self.peek() == Tok::Comma {
                return self.fail(
                    span,
                    format!("arity mismatch: domain literal `{domain}` takes exactly one argument"),
                );
            }
            self.expect(Tok::RParen)?;
            return Ok(Literal::Domain { domain, term });
        }
        let left = self.term()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            _ => return self.unexpected("a comparison (=, !=, <, <=)"),
        };
        self.bump();
        let right = self.term()?;
        Ok(Literal::Compare { op, left, right })
    }

    /// A possibly signed number or `inf`.
    fn number(&mut self) -> PResult<(f64, Span)> {
        let span = self.span();
        let negative = if self.eat(&Tok::Minus) {
            true
        } else {
            self.eat(&Tok::Plus);
            false
        };
        let value = match self.peek().clone() {
            Tok::Number(s) => {
                self.bump();
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => return self.fail(span, format!("number `{s}` is out of range")),
                }
            }
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                f64::INFINITY
            }
            _ => return self.unexpected("a number"),
        };
        Ok((if negative { -value } else { value }, span))
    }

    fn finite_number(&mut self) -> PResult<f64> {
        let (v, span) = self.number()?;
        if v.is_finite() {
            Ok(v)
        } else {
            self.fail(span, "value must be finite")
        }
    }

    fn lower_value(&mut self) -> PResult<f64> {
        let (v, span) = self.number()?;
        if v == f64::INFINITY {
            return self.fail(span, "inf is not a legal lower bound");
        }
        Ok(v)
    }

    fn upper_value(&mut self) -> PResult<f64> {
        let (v, span) = self.number()?;
        if v == f64::NEG_INFINITY {
            return self.fail(span, "-inf is not a legal upper bound");
        }
        Ok(v)
    }

    fn vartype(&mut self) -> PResult<VarType> {
        let (word, span) = self.ident("`int` or `real`")?;
        match word.as_str() {
            "int" | "integer" => Ok(VarType::Integer),
            "real" | "continuous" => Ok(VarType::Continuous),
            other => self.fail(span, format!("unknown variable type `{other}` (use int or real)")),
        }
    }

    fn value_rule<T>(&mut self, span: Span, value: fn(&mut Self) -> PResult<T>) -> PResult<ValueRule<T>> {
        let pattern = self.pattern()?;
        self.expect(Tok::Eq)?;
        let value = value(self)?;
        self.expect(Tok::Semi)?;
        Ok(ValueRule {
            pattern,
            value,
            span: Some(span),
        })
    }

    fn default_block(&mut self, span: Span) -> PResult<()> {
        if self.default_span.is_some() {
            self.diags.push(Diagnostic::error(span, "duplicate default block"));
        }
        self.default_span = Some(span);
        self.expect(Tok::LBrace)?;
        let mut defaults = self.model.defaults;
        while *self.peek() != Tok::RBrace {
            let (key, key_span) = self.ident("objective, lb, ub or vartype")?;
            self.expect(Tok::Eq)?;
            let slot = match key.as_str() {
                "objective" => {
                    defaults.objective = self.finite_number()?;
                    0
                }
                "lb" => {
                    defaults.lb = self.lower_value()?;
                    1
                }
                "ub" => {
                    defaults.ub = self.upper_value()?;
                    2
                }
                "vartype" => {
                    defaults.vartype = self.vartype()?;
                    3
                }
                other => {
                    return self.fail(key_span, format!("unknown default `{other}`"));
                }
            };
            if std::mem::replace(&mut self.default_seen[slot], true) {
                self.diags.push(Diagnostic::warning(
                    key_span,
                    format!("default `{key}` set more than once; last value wins"),
                ));
            }
            self.expect(Tok::Semi)?;
        }
        self.expect(Tok::RBrace)?;
        self.eat(&Tok::Semi);
        self.model.defaults = defaults;
        Ok(())
    }

    fn constraint_rule(&mut self, span: Span) -> PResult<()> {
        let template = self.lin_template()?;
        let body = if self.eat(&Tok::Neck) { self.body()? } else { Vec::new() };
        self.expect(Tok::Semi)?;
        self.model.constraint_rules.push(Rule {
            head: template,
            body,
            span: Some(span),
        });
        Ok(())
    }

    /// `L <= expr [<= U]` or `expr (<=|>=|=) v`.
    fn lin_template(&mut self) -> PResult<LinTemplate> {
        let leading_bound = {
            let mut k = 0;
            if matches!(self.peek(), Tok::Minus | Tok::Plus) {
                k = 1;
            }
            let is_num =
                matches!(self.peek_at(k), Tok::Number(_)) || matches!(self.peek_at(k), Tok::Ident(s) if s == "inf");
            is_num && *self.peek_at(k + 1) == Tok::Le
        };
        if leading_bound {
            let (lo, lo_span) = self.number()?;
            if lo == f64::INFINITY {
                return self.fail(lo_span, "inf is not a legal lower bound");
            }
            self.expect(Tok::Le)?;
            let terms = self.expression()?;
            let ub = if self.eat(&Tok::Le) {
                let (hi, hi_span) = self.number()?;
                if hi == f64::NEG_INFINITY {
                    return self.fail(hi_span, "-inf is not a legal upper bound");
                }
                Bound::from_f64(hi)
            } else {
                Bound::PosInf
            };
            return Ok(LinTemplate {
                lb: Bound::from_f64(lo),
                terms,
                ub,
            });
        }
        let terms = self.expression()?;
        let op = self.peek().clone();
        let op_span = self.span();
        if !matches!(op, Tok::Le | Tok::Ge | Tok::Eq) {
            return self.unexpected("`<=`, `>=` or `=`");
        }
        self.bump();
        let (v, _) = self.number()?;
        let (lb, ub) = match op {
            Tok::Le => (Bound::NegInf, Bound::from_f64(v)),
            Tok::Ge => (Bound::from_f64(v), Bound::PosInf),
            _ => {
                if !v.is_finite() {
                    return self.fail(op_span, "equality right-hand side must be finite");
                }
                (Bound::Finite(v), Bound::Finite(v))
            }
        };
        if matches!(lb, Bound::PosInf) || matches!(ub, Bound::NegInf) {
            return self.fail(op_span, "bound is infinite on the wrong side");
        }
        Ok(LinTemplate { lb, terms, ub })
    }

    fn expression(&mut self) -> PResult<Vec<(f64, AtomPattern)>> {
        let mut terms = vec![self.lin_term(1.0)?];
        loop {
            let sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.bump();
            terms.push(self.lin_term(sign)?);
        }
        Ok(terms)
    }

    /// `[sign] [number *] pattern`
    fn lin_term(&mut self, sign: f64) -> PResult<(f64, AtomPattern)> {
        let mut coef = sign;
        let starts_numeric = matches!(self.peek(), Tok::Minus | Tok::Plus | Tok::Number(_));
        if starts_numeric {
            if matches!(self.peek(), Tok::Minus | Tok::Plus) && matches!(self.peek_at(1), Tok::Ident(_)) {
                if self.bump().tok == Tok::Minus {
                    coef = -coef;
                }
            } else {
                let (v, span) = self.number()?;
                if !v.is_finite() {
                    return self.fail(span, "coefficient must be finite");
                }
                if *self.peek() != Tok::Star {
                    return self.fail(
                        span,
                        "constant terms are not allowed in a linear expression; move them into the bound",
                    );
                }
                self.bump();
                coef *= v;
            }
        }
        let pattern = self.pattern()?;
        Ok((coef, pattern))
    }
}
