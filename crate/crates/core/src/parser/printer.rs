use std::fmt;

use crate::model::{Literal, Model, Rule, ValueRule};

fn body(f: &mut fmt::Formatter<'_>, body: &[Literal]) -> fmt::Result {
    for (i, lit) in body.iter().enumerate() {
        f.write_str(if i == 0 { " " } else { ", " })?;
        write!(f, "{lit}")?;
    }
    Ok(())
}

fn rule_tail<H>(f: &mut fmt::Formatter<'_>, rule: &Rule<H>) -> fmt::Result {
    f.write_str(" :-")?;
    body(f, &rule.body)?;
    f.write_str(";\n")
}

fn value_rules<T: fmt::Display>(f: &mut fmt::Formatter<'_>, keyword: &str, rules: &[ValueRule<T>]) -> fmt::Result {
    for r in rules {
        writeln!(f, "{keyword} {} = {};", r.pattern, r.value)?;
    }
    Ok(())
}

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Canonical source text; re-parsing it yields an equal model (modulo spans).
impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.domains {
            writeln!(f, "domain {} = {{{}}};", d.name, d.constants.join(", "))?;
        }
        for r in &self.variable_rules {
            write!(f, "var {}", r.head)?;
            if r.head.args.is_empty() && r.body.is_empty() {
                f.write_str(";\n")?;
            } else {
                rule_tail(f, r)?;
            }
        }
        for r in &self.constraint_rules {
            write!(f, "constraint {} <=", r.head.lb)?;
            for (i, (coef, pattern)) in r.head.terms.iter().enumerate() {
                f.write_str(if i == 0 { " " } else { " + " })?;
                write!(f, "{coef:?}*{pattern}")?;
            }
            write!(f, " <= {}", r.head.ub)?;
            if r.body.is_empty() {
                f.write_str(";\n")?;
            } else {
                rule_tail(f, r)?;
            }
        }
        value_rules(f, "objective", &self.objective_rules)?;
        for r in &self.lb_rules {
            writeln!(f, "lb {} = {};", r.pattern, number(r.value))?;
        }
        for r in &self.ub_rules {
            writeln!(f, "ub {} = {};", r.pattern, number(r.value))?;
        }
        value_rules(f, "vartype", &self.vartype_rules)?;
        let d = &self.defaults;
        writeln!(
            f,
            "default {{ objective = {}; lb = {}; ub = {}; vartype = {}; }}",
            number(d.objective),
            number(d.lb),
            number(d.ub),
            d.vartype
        )
    }
}

#[cfg(test)]
mod tests {
    use crate::parser::{parse_model, SourceModel};

    #[test]
    fn printed_protein_model_reparses_identically() {
        let src = "\
domain protein = {p1, p2};
domain location_id = {l1, l2};
var location(protein, location_id);
var interaction(P1, P2) :- protein(P1), protein(P2), not P1 = P2;
var x;
var pinned(p2) :- ;
objective interaction(P1, P2) = -1.0;
lb x = -inf;
ub x = 1e21;
vartype x = real;
constraint 1.0 <= 1.0*location(P1, L1) + 1.0*interaction(P1, P2) <= inf
    :- protein(P1), protein(P2), P1 != P2, location_id(L1);
constraint x - 2*pinned(p2) <= 0.5;
constraint x = 0.25;
";
        let mut m = parse_model(&SourceModel::new("a", src)).unwrap();
        let printed = m.to_string();
        let mut again = parse_model(&SourceModel::new("b", printed.clone())).unwrap();
        m.strip_spans();
        again.strip_spans();
        assert_eq!(m, again, "printed:\n{printed}");
    }
}
