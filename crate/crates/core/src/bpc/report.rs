use std::collections::BTreeMap;
use std::fmt;

use crate::atom::Atom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// A node, round or size limit stopped the search early.
    LimitReached,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::LimitReached => "limit_reached",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMode {
    Ground,
    Bpc,
    Enum,
}

impl SolveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMode::Ground => "ground",
            SolveMode::Bpc => "bpc",
            SolveMode::Enum => "enum",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes: u64,
    pub branches: u64,
    pub max_depth: u64,
    pub lp_solves: u64,
    pub simplex_iterations: u64,
    pub cut_rounds: u64,
    pub price_rounds: u64,
    pub cuts_added: u64,
    pub atoms_priced: u64,
    /// Columns created by the end of the run.
    pub atoms_created: u64,
    /// Rows in the LP by the end of the run.
    pub constraints_created: u64,
    pub separation_enumerated: u64,
    pub separation_pruned: u64,
    pub pricing_enumerated: u64,
    pub pricing_columns_built: u64,
    /// Complete assignments examined by the enumeration oracle.
    pub assignments_enumerated: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundKind {
    /// First LP of a node.
    Initial,
    /// LP after adding violated rows.
    Cut,
    /// LP after adding priced columns.
    Price,
    /// LP after rows found while re-validating an integral point.
    Validate,
}

impl RoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundKind::Initial => "initial",
            RoundKind::Cut => "cut",
            RoundKind::Price => "price",
            RoundKind::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub kind: RoundKind,
    /// Rows or columns added before this LP.
    pub added: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Open,
    Fathomed,
    Branched,
    Integral,
    Infeasible,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Open => "open",
            NodeStatus::Fathomed => "fathomed",
            NodeStatus::Branched => "branched",
            NodeStatus::Integral => "integral",
            NodeStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub status: NodeStatus,
    pub lp_bound: Option<f64>,
    pub branch_atom: Option<Atom>,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub mode: SolveMode,
    pub status: SolveStatus,
    /// Incumbent objective; `+inf` without one.
    pub objective: f64,
    /// Nonzero values of the incumbent, integer atoms snapped.
    pub assignment: BTreeMap<Atom, f64>,
    /// Proven lower bound.
    pub bound: f64,
    /// `(objective - bound) / max(1, |objective|)`; `+inf` without an
    /// incumbent, 0 when infeasible.
    pub gap: f64,
    pub stats: SolveStats,
    /// Global lower bound after each processed node.
    pub bound_history: Vec<f64>,
    /// Per-node record, filled when tracing is enabled.
    pub trace: Vec<NodeTrace>,
}

impl SolveReport {
    pub fn value(&self, atom: &Atom) -> f64 {
        self.assignment.get(atom).copied().unwrap_or(0.0)
    }
}

pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    if !objective.is_finite() {
        return f64::INFINITY;
    }
    if !bound.is_finite() {
        return if bound > 0.0 { 0.0 } else { f64::INFINITY };
    }
    ((objective - bound) / objective.abs().max(1.0)).max(0.0)
}
