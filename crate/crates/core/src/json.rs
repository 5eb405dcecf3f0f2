//! Stable JSON encodings of ground problems and solve reports.
//!
//! Output is deterministic: keys keep a fixed order, floats are rounded to
//! nine significant digits, `-0` prints as `0` and non-finite values as
//! `null`.

use serde_json::{json, Map, Value};

use crate::atom::Atom;
use crate::bpc::{NodeTrace, SolveReport, SolveStats};
use crate::grounder::GroundProblem;
use crate::lincons::LinCons;

pub const SCHEMA_VERSION: u64 = 1;

/// `v` rounded to nine significant digits, or `null` when not finite.
pub fn number(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    let r: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    let r = if r == 0.0 { 0.0 } else { r };
    if r.fract() == 0.0 && r.abs() < 1e15 {
        Value::from(r as i64)
    } else {
        Value::from(r)
    }
}

fn atom(a: &Atom) -> Value {
    json!({ "functor": a.functor, "args": a.args })
}

pub fn constraint(c: &LinCons) -> Value {
    let terms: Vec<Value> = c
        .terms()
        .iter()
        .map(|t| json!({ "atom": t.atom.to_string(), "coef": number(t.coef) }))
        .collect();
    json!({
        "lb": number(c.lb().value()),
        "ub": number(c.ub().value()),
        "terms": terms,
    })
}

pub fn ground_problem(p: &GroundProblem) -> Value {
    let atoms: Vec<Value> = p
        .atoms
        .iter()
        .map(|a| {
            let info = &p.infos[a];
            let mut v = Map::new();
            v.insert("atom".into(), Value::from(a.to_string()));
            if let Value::Object(parts) = atom(a) {
                v.extend(parts);
            }
            v.insert("objective".into(), number(info.objective));
            v.insert("lb".into(), number(info.lb));
            v.insert("ub".into(), number(info.ub));
            v.insert("type".into(), Value::from(info.vartype.to_string()));
            Value::Object(v)
        })
        .collect();
    let constraints: Vec<Value> = p.constraints.iter().map(constraint).collect();
    json!({
        "schema": SCHEMA_VERSION,
        "atoms": atoms,
        "constraints": constraints,
    })
}

fn stats(s: &SolveStats) -> Value {
    json!({
        "nodes": s.nodes,
        "branches": s.branches,
        "max_depth": s.max_depth,
        "lp_solves": s.lp_solves,
        "simplex_iterations": s.simplex_iterations,
        "cut_rounds": s.cut_rounds,
        "price_rounds": s.price_rounds,
        "cuts_added": s.cuts_added,
        "atoms_priced": s.atoms_priced,
        "atoms_created": s.atoms_created,
        "constraints_created": s.constraints_created,
        "separation_enumerated": s.separation_enumerated,
        "separation_pruned": s.separation_pruned,
        "pricing_enumerated": s.pricing_enumerated,
        "pricing_columns_built": s.pricing_columns_built,
        "assignments_enumerated": s.assignments_enumerated,
    })
}

fn node(t: &NodeTrace) -> Value {
    let rounds: Vec<Value> = t
        .rounds
        .iter()
        .map(|r| json!({ "kind": r.kind.as_str(), "added": r.added, "objective": number(r.objective) }))
        .collect();
    json!({
        "id": t.id,
        "parent": t.parent,
        "depth": t.depth,
        "status": t.status.as_str(),
        "lp_bound": t.lp_bound.map_or(Value::Null, number),
        "branch_atom": t.branch_atom.as_ref().map(|a| a.to_string()),
        "rounds": rounds,
    })
}

/// The run report. With `verbosity >= 2` the bound history and per-node
/// trace are included.
pub fn solve_report(r: &SolveReport, verbosity: u8) -> Value {
    let mut assignment = Map::new();
    for (a, &v) in &r.assignment {
        assignment.insert(a.to_string(), number(v));
    }
    let mut out = Map::new();
    out.insert("schema".into(), Value::from(SCHEMA_VERSION));
    out.insert("mode".into(), Value::from(r.mode.as_str()));
    out.insert("status".into(), Value::from(r.status.as_str()));
    out.insert("objective".into(), number(r.objective));
    out.insert("bound".into(), number(r.bound));
    out.insert("gap".into(), number(r.gap));
    out.insert("assignment".into(), Value::Object(assignment));
    out.insert("stats".into(), stats(&r.stats));
    if verbosity >= 2 {
        out.insert(
            "bound_history".into(),
            r.bound_history.iter().map(|&b| number(b)).collect(),
        );
        out.insert("trace".into(), r.trace.iter().map(node).collect());
    }
    Value::Object(out)
}

/// Pretty-printed with a trailing newline.
pub fn to_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(number(0.1 + 0.2), json!(0.3));
        assert_eq!(number(-0.0), json!(0));
        assert_eq!(number(4.0), json!(4));
        assert_eq!(number(f64::INFINITY), Value::Null);
        assert_eq!(number(1.0 / 3.0), json!(0.333333333));
        assert_eq!(number(123456789012.0), json!(123456789000i64));
    }

    #[test]
    fn ground_problem_shape() {
        let m = crate::parser::parse_model(&crate::parser::SourceModel::new(
            "t",
            "domain d = {a}; var x(d); constraint x(a) >= 1;",
        ))
        .unwrap();
        let p = crate::grounder::ground(&m).unwrap();
        let v = ground_problem(&p);
        assert_eq!(v["schema"], json!(1));
        assert_eq!(v["atoms"][0]["atom"], json!("x(a)"));
        assert_eq!(v["atoms"][0]["args"], json!(["a"]));
        assert_eq!(v["constraints"][0]["ub"], Value::Null);
        assert_eq!(v["constraints"][0]["terms"][0]["coef"], json!(1));
    }
}
