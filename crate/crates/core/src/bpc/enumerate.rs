use std::collections::{BTreeMap, HashMap};

use crate::atom::Atom;
use crate::grounder::ground;
use crate::model::Model;

use super::{SolveError, SolveMode, SolveReport, SolveStats, SolveStatus};

/// Largest number of complete assignments the oracle will consider.
pub const ENUM_LIMIT: u64 = 1 << 24;
/// Atom bounds must lie within `[-ENUM_BOUND, ENUM_BOUND]`.
pub const ENUM_BOUND: f64 = 2.0;

const TOL: f64 = 1e-9;

/// A row checked once its last atom is assigned: (lb, ub, terms).
type Check = (f64, f64, Vec<(usize, f64)>);

struct Search {
    values: Vec<Vec<f64>>,
    objective: Vec<f64>,
    /// Rows by the position of their last atom.
    checks: Vec<Vec<Check>>,
    /// Least objective contribution of atoms `j..`.
    rest_min: Vec<f64>,
    current: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
    leaves: u64,
}

impl Search {
    fn dfs(&mut self, j: usize, partial: f64) {
        if let Some((best, _)) = &self.best {
            if partial + self.rest_min[j] >= best - TOL {
                return;
            }
        }
        if j == self.values.len() {
            self.leaves += 1;
            self.best = Some((partial, self.current.clone()));
            return;
        }
        for k in 0..self.values[j].len() {
            let v = self.values[j][k];
            self.current[j] = v;
            let ok = self.checks[j].iter().all(|(lb, ub, terms)| {
                let act: f64 = terms.iter().map(|&(i, c)| c * self.current[i]).sum();
                act >= lb - TOL && act <= ub + TOL
            });
            if ok {
                self.dfs(j + 1, partial + self.objective[j] * v);
            } else {
                self.leaves += 1;
            }
        }
    }
}

/// Exhaustive search over all integer assignments, atoms in canonical order
/// and values ascending. Among optimal assignments the lexicographically
/// smallest is returned.
pub fn solve_enum(model: &Model) -> Result<SolveReport, SolveError> {
    let problem = ground(model)?;
    let mut atoms = problem.atoms;
    atoms.sort();
    let mut values = Vec::with_capacity(atoms.len());
    let mut objective = Vec::with_capacity(atoms.len());
    let mut size = 1.0f64;
    for atom in &atoms {
        let info = &problem.infos[atom];
        let reason = if !info.is_integer() {
            Some("is not integer".to_string())
        } else if info.lb < -ENUM_BOUND || info.ub > ENUM_BOUND {
            Some(format!("has bounds [{}, {}]", info.lb, info.ub))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(SolveError::EnumNotApplicable {
                atom: atom.clone(),
                reason,
            });
        }
        let dom: Vec<f64> = (info.lb.ceil() as i64..=info.ub.floor() as i64)
            .map(|v| v as f64)
            .collect();
        size *= dom.len() as f64;
        values.push(dom);
        objective.push(info.objective);
    }
    if size > ENUM_LIMIT as f64 {
        return Err(SolveError::EnumSizeExceeded {
            assignments: size,
            limit: ENUM_LIMIT,
        });
    }

    let position: HashMap<&Atom, usize> = atoms.iter().enumerate().map(|(j, a)| (a, j)).collect();
    let mut checks = vec![Vec::new(); atoms.len()];
    let mut constant_rows_ok = true;
    for row in &problem.constraints {
        let terms: Vec<(usize, f64)> = row.terms().iter().map(|t| (position[&t.atom], t.coef)).collect();
        let (lb, ub) = (row.lb().value(), row.ub().value());
        match terms.iter().map(|&(j, _)| j).max() {
            Some(last) => checks[last].push((lb, ub, terms)),
            None => constant_rows_ok &= lb <= TOL && ub >= -TOL,
        }
    }
    let mut rest_min = vec![0.0; atoms.len() + 1];
    for j in (0..atoms.len()).rev() {
        let least = values[j].iter().map(|v| objective[j] * v).fold(f64::INFINITY, f64::min);
        rest_min[j] = rest_min[j + 1] + if least.is_finite() { least } else { 0.0 };
    }

    let mut search = Search {
        current: vec![0.0; atoms.len()],
        values,
        objective,
        checks,
        rest_min,
        best: None,
        leaves: 0,
    };
    if constant_rows_ok {
        search.dfs(0, 0.0);
    }
    let stats = SolveStats {
        assignments_enumerated: search.leaves,
        atoms_created: atoms.len() as u64,
        constraints_created: problem.constraints.len() as u64,
        ..Default::default()
    };
    let (status, objective, assignment) = match search.best {
        Some((obj, x)) => {
            let assignment: BTreeMap<Atom, f64> = atoms
                .iter()
                .zip(x)
                .filter(|(_, v)| *v != 0.0)
                .map(|(a, v)| (a.clone(), v))
                .collect();
            (SolveStatus::Optimal, obj, assignment)
        }
        None => (SolveStatus::Infeasible, f64::INFINITY, BTreeMap::new()),
    };
    Ok(SolveReport {
        mode: SolveMode::Enum,
        status,
        objective,
        assignment,
        bound: objective,
        gap: 0.0,
        stats,
        bound_history: Vec::new(),
        trace: Vec::new(),
    })
}
