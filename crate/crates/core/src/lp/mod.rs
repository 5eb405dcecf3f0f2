//! LP relaxations over atoms and [`LinCons`] rows.
//!
//! Sign convention: minimization, and duals `y` such that the reduced cost
//! of a column is `c_j - Σ_i y_i a_ij`. A row at its lower bound has
//! `y_i >= 0`, a row at its upper bound `y_i <= 0`.

mod simplex;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::atom::Atom;
use crate::lincons::LinCons;

pub const FEASIBILITY_TOL: f64 = 1e-6;
pub const PIVOT_TOL: f64 = 1e-9;
pub const DUAL_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("numerical failure in the simplex: {0}")]
    NumericalFailure(String),
    #[error("simplex iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize },
    #[error("ill-formed LP: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpColumn {
    pub atom: Atom,
    pub objective: f64,
    pub lb: f64,
    pub ub: f64,
}

/// `min Σ objective·x` over `columns`, subject to `constraints`.
///
/// With an elastic penalty `M`, every row gets nonnegative elastic columns
/// of cost `M` that can absorb a violation of each finite bound, so the LP
/// is feasible whenever the column bounds are.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub columns: Vec<LpColumn>,
    pub constraints: Vec<LinCons>,
    pub elastic_penalty: Option<f64>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_column(&mut self, atom: Atom, objective: f64, lb: f64, ub: f64) -> usize {
        self.columns.push(LpColumn {
            atom,
            objective,
            lb,
            ub,
        });
        self.columns.len() - 1
    }

    pub fn add_constraint(&mut self, c: LinCons) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn index(&self) -> HashMap<Atom, usize> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, c)| (c.atom.clone(), j))
            .collect()
    }

    pub fn validate(&self) -> Result<HashMap<Atom, usize>, LpError> {
        let index = self.index();
        if index.len() != self.columns.len() {
            return Err(LpError::InvalidProblem("duplicate column".into()));
        }
        for c in &self.columns {
            if c.lb.is_nan() || c.ub.is_nan() || c.lb > c.ub || !c.objective.is_finite() {
                return Err(LpError::InvalidProblem(format!(
                    "column {} has bounds [{}, {}] and objective {}",
                    c.atom, c.lb, c.ub, c.objective
                )));
            }
            if c.lb == f64::INFINITY || c.ub == f64::NEG_INFINITY {
                return Err(LpError::InvalidProblem(format!(
                    "column {} has no finite value",
                    c.atom
                )));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if let Some(t) = row.terms().iter().find(|t| !index.contains_key(&t.atom)) {
                return Err(LpError::InvalidProblem(format!(
                    "row {i} uses {}, which is not a column",
                    t.atom
                )));
            }
        }
        if let Some(m) = self.elastic_penalty {
            if !(m.is_finite() && m > 0.0) {
                return Err(LpError::InvalidProblem(format!("elastic penalty {m}")));
            }
        }
        Ok(index)
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        solve_lp(self)
    }

    /// Objective of the dual LP at `(duals, reduced costs)`; equals the
    /// primal objective at an optimal basis.
    pub fn dual_objective(&self, sol: &LpSolution) -> f64 {
        let mut total = 0.0;
        for (row, &y) in self.constraints.iter().zip(&sol.duals) {
            let bound = if y > 0.0 { row.lb() } else { row.ub() };
            if y != 0.0 {
                total += y * bound.value();
            }
        }
        for (col, &d) in self.columns.iter().zip(&sol.reduced_costs) {
            let bound = if d > 0.0 { col.lb } else { col.ub };
            if d != 0.0 {
                total += d * bound;
            }
        }
        total
    }
}

/// Result of [`solve_lp`]. Vectors are indexed like the problem's columns
/// and constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Includes elastic penalties. `-inf` when unbounded, `+inf` when
    /// infeasible.
    pub objective_value: f64,
    pub atoms: Vec<Atom>,
    pub primal: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub duals: Vec<f64>,
    pub activities: Vec<f64>,
    /// Elastic slack absorbed by each row (zero without an elastic penalty).
    pub elastic: Vec<f64>,
    pub column_status: Vec<BasisStatus>,
    pub row_status: Vec<BasisStatus>,
    pub iterations: usize,
    index: HashMap<Atom, usize>,
}

impl LpSolution {
    pub fn column(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    /// Primal value; atoms that are not columns read as 0.
    pub fn value(&self, atom: &Atom) -> f64 {
        self.column(atom).map_or(0.0, |j| self.primal[j])
    }

    pub fn reduced_cost_of(&self, atom: &Atom) -> Option<f64> {
        self.column(atom).map(|j| self.reduced_costs[j])
    }

    pub fn elastic_total(&self) -> f64 {
        self.elastic.iter().sum()
    }

    pub fn primal_map(&self) -> BTreeMap<Atom, f64> {
        self.atoms.iter().cloned().zip(self.primal.iter().copied()).collect()
    }
}

/// `objective - Σ duals[i]·coef` for a column given as `(row, coef)` pairs.
/// The column need not be part of the solved problem.
pub fn reduced_cost(objective: f64, column: &[(usize, f64)], sol: &LpSolution) -> f64 {
    objective - column.iter().map(|&(i, a)| sol.duals[i] * a).sum::<f64>()
}

/// Read access to a point, by atom. Missing atoms read as 0.
pub trait PrimalView {
    fn value(&self, atom: &Atom) -> f64;

    /// Visits every atom with a stored value.
    fn for_each_value(&self, f: &mut dyn FnMut(&Atom, f64));
}

impl PrimalView for LpSolution {
    fn value(&self, atom: &Atom) -> f64 {
        LpSolution::value(self, atom)
    }

    fn for_each_value(&self, f: &mut dyn FnMut(&Atom, f64)) {
        for (a, &v) in self.atoms.iter().zip(&self.primal) {
            f(a, v);
        }
    }
}

impl PrimalView for HashMap<Atom, f64> {
    fn value(&self, atom: &Atom) -> f64 {
        self.get(atom).copied().unwrap_or(0.0)
    }

    fn for_each_value(&self, f: &mut dyn FnMut(&Atom, f64)) {
        for (a, &v) in self {
            f(a, v);
        }
    }
}

impl PrimalView for BTreeMap<Atom, f64> {
    fn value(&self, atom: &Atom) -> f64 {
        self.get(atom).copied().unwrap_or(0.0)
    }

    fn for_each_value(&self, f: &mut dyn FnMut(&Atom, f64)) {
        for (a, &v) in self {
            f(a, v);
        }
    }
}

impl<T: PrimalView + ?Sized> PrimalView for &T {
    fn value(&self, atom: &Atom) -> f64 {
        (**self).value(atom)
    }

    fn for_each_value(&self, f: &mut dyn FnMut(&Atom, f64)) {
        (**self).for_each_value(f)
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    let index = p.validate()?;
    let n_atoms = p.columns.len();
    let m = p.constraints.len();

    // Elastic columns follow the atom columns: for each row, one per finite
    // bound, with coefficient +1 (absorbs lb) or -1 (absorbs ub).
    let mut elastic_cols: Vec<(usize, f64)> = Vec::new();
    if p.elastic_penalty.is_some() {
        for (i, row) in p.constraints.iter().enumerate() {
            if row.lb().is_finite() {
                elastic_cols.push((i, 1.0));
            }
            if row.ub().is_finite() {
                elastic_cols.push((i, -1.0));
            }
        }
    }
    let penalty = p.elastic_penalty.unwrap_or(0.0);
    let n = n_atoms + elastic_cols.len();

    let mut a = vec![0.0; m * n];
    for (i, row) in p.constraints.iter().enumerate() {
        for t in row.terms() {
            a[i * n + index[&t.atom]] = t.coef;
        }
    }
    for (k, &(i, coef)) in elastic_cols.iter().enumerate() {
        a[i * n + n_atoms + k] = coef;
    }
    let mut cost: Vec<f64> = p.columns.iter().map(|c| c.objective).collect();
    let mut col_lo: Vec<f64> = p.columns.iter().map(|c| c.lb).collect();
    let mut col_hi: Vec<f64> = p.columns.iter().map(|c| c.ub).collect();
    cost.resize(n, penalty);
    col_lo.resize(n, 0.0);
    col_hi.resize(n, f64::INFINITY);
    let dense = simplex::DenseLp {
        n,
        m,
        a,
        cost,
        col_lo,
        col_hi,
        row_lo: p.constraints.iter().map(|c| c.lb().value()).collect(),
        row_hi: p.constraints.iter().map(|c| c.ub().value()).collect(),
    };
    let raw = simplex::solve(&dense)?;

    let mut elastic = vec![0.0; m];
    for (k, &(i, _)) in elastic_cols.iter().enumerate() {
        elastic[i] += raw.x[n_atoms + k];
    }
    let objective_value = match raw.status {
        LpStatus::Optimal => raw.x.iter().zip(&dense.cost).map(|(x, c)| x * c).sum(),
        LpStatus::Infeasible => f64::INFINITY,
        LpStatus::Unbounded => f64::NEG_INFINITY,
    };
    // Activities exclude elastic slack.
    let activities = p
        .constraints
        .iter()
        .map(|row| row.terms().iter().map(|t| t.coef * raw.x[index[&t.atom]]).sum())
        .collect();
    Ok(LpSolution {
        status: raw.status,
        objective_value,
        atoms: p.columns.iter().map(|c| c.atom.clone()).collect(),
        primal: raw.x[..n_atoms].to_vec(),
        reduced_costs: raw.d[..n_atoms].to_vec(),
        duals: raw.y,
        activities,
        elastic,
        column_status: raw.col_status[..n_atoms].to_vec(),
        row_status: raw.row_status,
        iterations: raw.iterations,
        index,
    })
}
