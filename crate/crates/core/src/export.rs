//! CPLEX-style LP text for a ground problem.
//!
//! Variables are named by [`Atom::mangled`]. Rows are named `c1`, `c2`, ...
//! in grounding order; a ranged row is written `lb <= expr <= ub`.

use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use crate::atom::Atom;
use crate::grounder::GroundProblem;
use crate::lincons::{Bound, LinTerm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExportError {
    #[error("atoms {first} and {second} both export as `{name}`")]
    NameCollision { first: Atom, second: Atom, name: String },
    #[error("atom {atom} exports as `{name}`, which is not a valid LP name")]
    InvalidName { atom: Atom, name: String },
    #[error("constraint c{row} has no terms and the problem has no variables")]
    EmptyRow { row: usize },
}

const KEYWORDS: &[&str] = &[
    "minimize", "maximize", "minimum", "maximum", "min", "max", "subject", "such", "st", "s.t.", "bounds", "bound",
    "general", "generals", "gen", "binary", "binaries", "bin", "end", "free", "inf", "infinity",
];

fn valid_name(name: &str) -> bool {
    let Some(first) = name.chars().next() else {
        return false;
    };
    let lower = name.to_ascii_lowercase();
    !first.is_ascii_digit()
        && first != '.'
        && !KEYWORDS.contains(&lower.as_str())
        && !(lower.starts_with('e') && lower[1..].chars().all(|c| c.is_ascii_digit()) && name.len() > 1)
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "_.".contains(c))
}

/// Mangled name of every atom, rejecting collisions and names an LP reader
/// would misparse.
pub fn lp_names(atoms: &[Atom]) -> Result<HashMap<Atom, String>, ExportError> {
    let mut names = HashMap::with_capacity(atoms.len());
    let mut owner: HashMap<String, &Atom> = HashMap::with_capacity(atoms.len());
    for a in atoms {
        let name = a.mangled();
        if !valid_name(&name) {
            return Err(ExportError::InvalidName { atom: a.clone(), name });
        }
        if let Some(prev) = owner.get(&name) {
            if *prev != a {
                return Err(ExportError::NameCollision {
                    first: (*prev).clone(),
                    second: a.clone(),
                    name,
                });
            }
        }
        owner.insert(name.clone(), a);
        names.insert(a.clone(), name);
    }
    Ok(names)
}

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn linear(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    for (coef, name) in terms {
        let sign = if coef < 0.0 { "-" } else { "+" };
        let mag = coef.abs();
        if first {
            if coef < 0.0 {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{} ", num(mag));
        }
        out.push_str(&name);
        first = false;
    }
}

/// Writes `p` as LP text: a minimization objective, every row, explicit
/// bounds for every variable and a `General` section for integer atoms.
pub fn write_lp(p: &GroundProblem) -> Result<String, ExportError> {
    let names = lp_names(&p.atoms)?;
    let mut out = String::new();
    out.push_str("\\ generated by fomip\nMinimize\n obj:");
    let objective: Vec<(f64, String)> = p
        .atoms
        .iter()
        .filter(|a| p.infos[*a].objective != 0.0)
        .map(|a| (p.infos[a].objective, names[a].clone()))
        .collect();
    if objective.is_empty() {
        if let Some(a) = p.atoms.first() {
            let _ = write!(out, " 0 {}", names[a]);
        }
    } else {
        out.push(' ');
        linear(&mut out, objective.into_iter());
    }
    out.push_str("\nSubject To\n");
    for (i, row) in p.constraints.iter().enumerate() {
        let terms: Vec<LinTerm> = if row.terms().is_empty() {
            let a = p.atoms.first().ok_or(ExportError::EmptyRow { row: i + 1 })?;
            vec![LinTerm::new(0.0, a.clone())]
        } else {
            row.terms().to_vec()
        };
        let mut expr = String::new();
        if terms.len() == 1 && terms[0].coef == 0.0 {
            let _ = write!(expr, "0 {}", names[&terms[0].atom]);
        } else {
            linear(&mut expr, terms.iter().map(|t| (t.coef, names[&t.atom].clone())));
        }
        let _ = match (row.lb(), row.ub()) {
            (Bound::Finite(l), Bound::Finite(u)) if l == u => writeln!(out, " c{}: {expr} = {}", i + 1, num(l)),
            (Bound::Finite(l), Bound::Finite(u)) => writeln!(out, " c{}: {} <= {expr} <= {}", i + 1, num(l), num(u)),
            (Bound::Finite(l), _) => writeln!(out, " c{}: {expr} >= {}", i + 1, num(l)),
            (_, ub) => writeln!(out, " c{}: {expr} <= {}", i + 1, num(ub.value())),
        };
    }
    out.push_str("Bounds\n");
    for a in &p.atoms {
        let info = &p.infos[a];
        let name = &names[a];
        let _ = match (info.lb.is_finite(), info.ub.is_finite()) {
            (false, false) => writeln!(out, " {name} free"),
            (true, true) if info.lb == info.ub => writeln!(out, " {name} = {}", num(info.lb)),
            (true, true) => writeln!(out, " {} <= {name} <= {}", num(info.lb), num(info.ub)),
            (true, false) => writeln!(out, " {name} >= {}", num(info.lb)),
            (false, true) => writeln!(out, " -inf <= {name} <= {}", num(info.ub)),
        };
    }
    let integers: Vec<&str> = p
        .atoms
        .iter()
        .filter(|a| p.infos[*a].is_integer())
        .map(|a| names[a].as_str())
        .collect();
    if !integers.is_empty() {
        out.push_str("General\n");
        for name in integers {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    Ok(out)
}
