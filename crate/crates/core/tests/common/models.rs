//! The model corpus, a random model generator and a brute-force grounding
//! oracle that shares no code with the grounder.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use fomip::grounder::{ground_with_limits, GroundLimits};
use fomip::model::{CmpOp, Literal, Term};
use fomip::{parse_model, Atom, LinCons, LinTerm, Model, SourceModel};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

/// Every `models/*.fomip`, by file name.
pub fn corpus() -> Vec<(String, Model)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("models directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "fomip"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&p).unwrap();
            let model = parse_model(&SourceModel::new(name.clone(), text)).unwrap_or_else(|d| panic!("{name}: {d:?}"));
            (name, model)
        })
        .collect()
}

pub fn corpus_model(name: &str) -> Model {
    corpus()
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("no corpus model {name}"))
        .1
}

pub fn parse(text: &str) -> Model {
    parse_model(&SourceModel::new("test.fomip", text)).unwrap_or_else(|d| panic!("{d:?}\n{text}"))
}

#[derive(Debug, Clone, Copy)]
pub struct RandomModelConfig {
    pub max_atoms: usize,
    pub max_rows: usize,
    pub max_domain: usize,
    /// Variable rules with filtering bodies (their families may be sparse,
    /// so constraints can mention undeclared atoms).
    pub filtered_families: bool,
    /// Integer atoms with bounds inside [-2, 2] instead of binaries.
    pub general_integers: bool,
}

impl RandomModelConfig {
    /// Binary models as used by the solver agreement checks.
    pub fn binary() -> Self {
        RandomModelConfig {
            max_atoms: 24,
            max_rows: 40,
            max_domain: 3,
            filtered_families: false,
            general_integers: false,
        }
    }

    pub fn grounding() -> Self {
        RandomModelConfig {
            max_atoms: 400,
            max_rows: 400,
            max_domain: 6,
            filtered_families: true,
            general_integers: false,
        }
    }
}

struct Family {
    name: String,
    domains: Vec<usize>,
}

fn coef(rng: &mut impl Rng) -> i32 {
    *[-3, -2, -1, 1, 2, 3].choose(rng).unwrap()
}

/// Source text of a random model; not guaranteed to be within size limits.
pub fn random_model_text(rng: &mut impl Rng, cfg: &RandomModelConfig) -> String {
    let mut out = String::new();
    let nd = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..nd).map(|_| rng.gen_range(1..=cfg.max_domain)).collect();
    let dname = |d: usize| format!("d{d}");
    let constant = |d: usize, j: usize| format!("{}{j}", (b'a' + d as u8) as char);
    for (d, &n) in sizes.iter().enumerate() {
        let cs: Vec<String> = (0..n).map(|j| constant(d, j)).collect();
        out.push_str(&format!("domain {} = {{{}}};\n", dname(d), cs.join(", ")));
    }
    let nf = rng.gen_range(1..=3);
    let mut families = Vec::new();
    for f in 0..nf {
        let arity = rng.gen_range(0..=2);
        let domains: Vec<usize> = (0..arity).map(|_| rng.gen_range(0..nd)).collect();
        let name = format!("f{f}");
        let args: Vec<String> = domains.iter().map(|&d| dname(d)).collect();
        if cfg.filtered_families && arity == 2 && domains[0] == domains[1] && rng.gen_bool(0.5) {
            let op = ["!=", "<", "<="].choose(rng).unwrap();
            out.push_str(&format!(
                "var {name}(X, Y) :- {d}(X), {d}(Y), X {op} Y;\n",
                d = dname(domains[0])
            ));
        } else if cfg.filtered_families && arity >= 1 && rng.gen_bool(0.2) {
            let d = domains[0];
            let c = constant(d, rng.gen_range(0..sizes[d]));
            let vars: Vec<String> = (0..arity).map(|i| format!("V{i}")).collect();
            let body: Vec<String> = domains
                .iter()
                .enumerate()
                .map(|(i, &d)| format!("{}(V{i})", dname(d)))
                .collect();
            out.push_str(&format!(
                "var {name}({}) :- {}, not V0 = {c};\n",
                vars.join(", "),
                body.join(", ")
            ));
        } else if arity == 0 {
            out.push_str(&format!("var {name};\n"));
        } else {
            out.push_str(&format!("var {name}({});\n", args.join(", ")));
        }
        families.push(Family { name, domains });
    }
    let pattern = |rng: &mut dyn rand::RngCore, fam: &Family, vars: &mut Vec<(String, usize)>| -> String {
        if fam.domains.is_empty() {
            return fam.name.clone();
        }
        let args: Vec<String> = fam
            .domains
            .iter()
            .map(|&d| {
                if rng.gen_bool(0.2) {
                    constant(d, rng.gen_range(0..sizes[d]))
                } else {
                    let same: Vec<&(String, usize)> = vars.iter().filter(|(_, vd)| *vd == d).collect();
                    if !same.is_empty() && rng.gen_bool(0.5) {
                        same.choose(rng).unwrap().0.clone()
                    } else {
                        let v = format!("X{}", vars.len());
                        vars.push((v.clone(), d));
                        v
                    }
                }
            })
            .collect();
        format!("{}({})", fam.name, args.join(", "))
    };
    for fam in &families {
        if rng.gen_bool(0.4) {
            let mut vars = Vec::new();
            let p = pattern(rng, fam, &mut vars);
            out.push_str(&format!("objective {p} = {};\n", rng.gen_range(-3..=3)));
        }
        if rng.gen_bool(0.7) {
            let wild: Vec<String> = (0..fam.domains.len()).map(|i| format!("W{i}")).collect();
            let p = if wild.is_empty() {
                fam.name.clone()
            } else {
                format!("{}({})", fam.name, wild.join(", "))
            };
            out.push_str(&format!("objective {p} = {};\n", rng.gen_range(-3..=2)));
        }
        if cfg.general_integers && rng.gen_bool(0.5) {
            let mut vars = Vec::new();
            let p = pattern(rng, fam, &mut vars);
            let lb = rng.gen_range(-2..=0);
            out.push_str(&format!("lb {p} = {lb};\nub {p} = {};\n", rng.gen_range(lb.max(0)..=2)));
        }
    }
    if rng.gen_bool(0.2) {
        out.push_str(&format!("default {{ objective = {}; }}\n", rng.gen_range(-1..=1)));
    }
    let nr = rng.gen_range(1..=4);
    for _ in 0..nr {
        let mut vars: Vec<(String, usize)> = Vec::new();
        let nt = rng.gen_range(1..=3);
        let mut terms = Vec::new();
        for _ in 0..nt {
            let fam = families.choose(rng).unwrap();
            let p = pattern(rng, fam, &mut vars);
            let c = coef(rng);
            terms.push(if c == 1 { p } else { format!("{c}*{p}") });
        }
        let expr = terms.join(" + ");
        let head = match rng.gen_range(0..5) {
            0 | 1 => format!("{expr} <= {}", rng.gen_range(-1..=3)),
            2 | 3 => format!("{expr} >= {}", rng.gen_range(-2..=2)),
            _ => {
                let lb = rng.gen_range(-2..=1);
                if rng.gen_bool(0.3) {
                    format!("{expr} = {lb}")
                } else {
                    format!("{lb} <= {expr} <= {}", lb + rng.gen_range(0..=2))
                }
            }
        };
        let mut body: Vec<String> = vars.iter().map(|(v, d)| format!("{}({v})", dname(*d))).collect();
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                if vars[i].1 == vars[j].1 && rng.gen_bool(0.4) {
                    let op = ["!=", "<", "<=", "="].choose(rng).unwrap();
                    let lit = format!("{} {op} {}", vars[i].0, vars[j].0);
                    body.push(if rng.gen_bool(0.2) { format!("not {lit}") } else { lit });
                }
            }
        }
        if let Some((v, d)) = vars.first() {
            if rng.gen_bool(0.2) {
                body.push(format!("not {v} = {}", constant(*d, rng.gen_range(0..sizes[*d]))));
            }
        }
        if body.is_empty() {
            out.push_str(&format!("constraint {head};\n"));
        } else {
            out.push_str(&format!("constraint {head} :- {};\n", body.join(", ")));
        }
    }
    out
}

/// A random model that parses, grounds and fits `cfg`'s size limits.
pub fn random_model(rng: &mut impl Rng, cfg: &RandomModelConfig) -> (String, Model) {
    loop {
        let text = random_model_text(rng, cfg);
        let Ok(model) = parse_model(&SourceModel::new("random.fomip", text.clone())) else {
            continue;
        };
        let limits = GroundLimits {
            max_atoms: cfg.max_atoms,
            max_constraints: cfg.max_rows,
        };
        match ground_with_limits(&model, limits) {
            Ok(_) => return (text, model),
            Err(_) if cfg.filtered_families => {
                if oracle_atoms(&model).len() <= cfg.max_atoms {
                    return (text, model);
                }
            }
            Err(_) => {}
        }
    }
}

/// Random point over the model's ground atoms: a mix of bounds, 0, 1 and
/// fractional values.
pub fn random_point(rng: &mut impl Rng, atoms: &[Atom], infos: &HashMap<Atom, fomip::VarInfo>) -> BTreeMap<Atom, f64> {
    atoms
        .iter()
        .map(|a| {
            let i = &infos[a];
            let lb = if i.lb.is_finite() { i.lb } else { -3.0 };
            let ub = if i.ub.is_finite() { i.ub } else { 3.0 };
            let v = match rng.gen_range(0..5) {
                0 => lb,
                1 => ub,
                2 => 0.0f64.clamp(lb, ub),
                _ => rng.gen_range(lb..=ub),
            };
            (a.clone(), v)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Brute-force grounding.

fn all_constants(model: &Model) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for d in &model.domains {
        for c in &d.constants {
            if seen.insert(c.clone()) {
                out.push(c.clone());
            }
        }
    }
    out
}

fn value<'a>(t: &'a Term, sub: &'a HashMap<String, String>) -> &'a str {
    match t {
        Term::Const(c) => c,
        Term::Var(v) => &sub[v],
    }
}

fn first_binding_domain<'a>(body: &'a [Literal], var: &str) -> Option<&'a str> {
    body.iter().find_map(|l| match l {
        Literal::Domain {
            domain,
            term: Term::Var(v),
        } if v == var => Some(domain.as_str()),
        _ => None,
    })
}

fn holds(model: &Model, body: &[Literal], lit: &Literal, sub: &HashMap<String, String>) -> bool {
    match lit {
        Literal::Domain { domain, term } => model
            .domains
            .iter()
            .find(|d| &d.name == domain)
            .is_some_and(|d| d.constants.iter().any(|c| c == value(term, sub))),
        Literal::Compare { op, left, right } => {
            let (l, r) = (value(left, sub), value(right, sub));
            match op {
                CmpOp::Eq => l == r,
                CmpOp::Ne => l != r,
                CmpOp::Lt | CmpOp::Le => {
                    let order = [left, right]
                        .iter()
                        .find_map(|t| t.as_var().and_then(|v| first_binding_domain(body, v)))
                        .and_then(|name| model.domains.iter().find(|d| d.name == name))
                        .or_else(|| {
                            model
                                .domains
                                .iter()
                                .find(|d| d.constants.iter().any(|c| c == l) && d.constants.iter().any(|c| c == r))
                        });
                    let Some(d) = order else { return false };
                    let pos = |c: &str| d.constants.iter().position(|k| k == c);
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
            }
        }
        Literal::Not(inner) => !holds(model, body, inner, sub),
    }
}

/// Calls `f` with every substitution of `vars` over all constants of all
/// domains that makes `body` true.
fn substitutions(model: &Model, vars: &[String], body: &[Literal], f: &mut dyn FnMut(&HashMap<String, String>)) {
    let constants = all_constants(model);
    if constants.is_empty() && !vars.is_empty() {
        return;
    }
    let mut idx = vec![0usize; vars.len()];
    loop {
        let sub: HashMap<String, String> = vars
            .iter()
            .zip(&idx)
            .map(|(v, &i)| (v.clone(), constants[i].clone()))
            .collect();
        if body.iter().all(|l| holds(model, body, l, &sub)) {
            f(&sub);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < constants.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn rule_vars<'a>(body: &'a [Literal], head: impl Iterator<Item = &'a Term>) -> Vec<String> {
    let mut vars: Vec<String> = Vec::new();
    let mut push = |v: &str| {
        if !vars.iter().any(|x| x == v) {
            vars.push(v.to_string());
        }
    };
    for l in body {
        for v in l.vars() {
            push(v);
        }
    }
    for t in head {
        if let Some(v) = t.as_var() {
            push(v);
        }
    }
    vars
}

fn instantiate(functor: &str, args: &[Term], sub: &HashMap<String, String>) -> Atom {
    Atom::new(functor, args.iter().map(|t| value(t, sub).to_string()))
}

pub fn oracle_atoms(model: &Model) -> HashSet<Atom> {
    let mut out = HashSet::new();
    for r in &model.variable_rules {
        let vars = rule_vars(&r.body, r.head.args.iter());
        substitutions(model, &vars, &r.body, &mut |sub| {
            out.insert(instantiate(&r.head.functor, &r.head.args, sub));
        });
    }
    out
}

/// Every ground constraint, or the first atom a constraint mentions that
/// no variable rule declares.
pub fn oracle_constraints(model: &Model) -> Result<HashSet<LinCons>, Atom> {
    let declared = oracle_atoms(model);
    let mut out = HashSet::new();
    let mut undeclared = None;
    for r in &model.constraint_rules {
        let vars = rule_vars(&r.body, r.head.terms.iter().flat_map(|(_, p)| p.args.iter()));
        substitutions(model, &vars, &r.body, &mut |sub| {
            let terms: Vec<LinTerm> = r
                .head
                .terms
                .iter()
                .map(|(c, p)| LinTerm::new(*c, instantiate(&p.functor, &p.args, sub)))
                .collect();
            let row = LinCons::new(r.head.lb, terms, r.head.ub).expect("valid template instance");
            // Atoms whose coefficients cancel are not part of the row.
            if let Some(t) = row.terms().iter().find(|t| !declared.contains(&t.atom)) {
                undeclared.get_or_insert_with(|| t.atom.clone());
            }
            out.insert(row);
        });
    }
    match undeclared {
        Some(a) => Err(a),
        None => Ok(out),
    }
}
