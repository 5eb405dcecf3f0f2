//! Branch-price-and-cut, the fully grounded branch-and-bound, and a
//! brute-force enumeration oracle.
//!
//! A node's LP is the restricted master: the created columns and the active
//! rows, each row projected onto the created columns (an uncreated atom sits
//! at 0). In branch-price-and-cut mode every row also carries elastic
//! columns of cost `elastic_penalty`, so the master is always feasible.
//! A node repeats: solve; add violated rows until none are found; price
//! columns; until a full pass adds nothing.

mod enumerate;
mod report;

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::atom::Atom;
use crate::grounder::{GroundError, GroundLimits, Grounder};
use crate::lincons::LinCons;
use crate::lp::{LpError, LpProblem, LpSolution, LpStatus, FEASIBILITY_TOL};
use crate::model::{Model, VarInfo};
use crate::pricing::{Pricer, PricerKind, PricingResult, PRICING_THRESHOLD};
use crate::separation::{SeparationOptions, Separator, SeparatorKind, VIOLATION_THRESHOLD};

pub use enumerate::{solve_enum, ENUM_BOUND, ENUM_LIMIT};
pub use report::{
    relative_gap, NodeStatus, NodeTrace, Round, RoundKind, SolveMode, SolveReport, SolveStats, SolveStatus,
};

pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const FATHOM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{reason}; best bound {}, gap {}", report.bound, report.gap)]
    IterationLimit { reason: String, report: Box<SolveReport> },
    #[error("enumeration needs {assignments:.3e} assignments, more than the limit of {limit}")]
    EnumSizeExceeded { assignments: f64, limit: u64 },
    #[error("enumeration needs integer atoms with bounds within [-2, 2]: {atom} {reason}")]
    EnumNotApplicable { atom: Atom, reason: String },
    #[error("no fractional integer variable to branch on")]
    NoFractionalVariable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub separator: SeparatorKind,
    pub pricer: PricerKind,
    pub max_nodes: usize,
    /// Per node.
    pub max_cut_rounds: usize,
    /// Per node.
    pub max_price_rounds: usize,
    pub violation_threshold: f64,
    pub pricing_threshold: f64,
    pub max_cuts_per_round: Option<usize>,
    pub elastic_penalty: f64,
    pub limits: GroundLimits,
    /// Record a [`NodeTrace`] per node.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            separator: SeparatorKind::Guided,
            pricer: PricerKind::Guided,
            max_nodes: 10_000,
            max_cut_rounds: 1_000,
            max_price_rounds: 1_000,
            violation_threshold: VIOLATION_THRESHOLD,
            pricing_threshold: PRICING_THRESHOLD,
            max_cuts_per_round: None,
            elastic_penalty: 1e6,
            limits: GroundLimits::default(),
            trace: false,
        }
    }
}

/// A branch-and-bound node.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Branching bounds, tighter than the atoms' own.
    pub extra_bounds: BTreeMap<Atom, (f64, f64)>,
    /// The parent's LP bound until this node is solved.
    pub lp_bound: f64,
}

impl Node {
    pub fn root() -> Self {
        Node {
            id: 0,
            parent: None,
            depth: 0,
            extra_bounds: BTreeMap::new(),
            lp_bound: f64::NEG_INFINITY,
        }
    }
}

/// Most fractional integer atom of `x` (distance to the nearest integer
/// above [`INTEGRALITY_TOL`]); ties go to the canonically smallest atom.
pub fn most_fractional(x: &LpSolution, is_integer: &dyn Fn(&Atom) -> bool) -> Option<(Atom, f64)> {
    let mut order: Vec<usize> = (0..x.atoms.len()).collect();
    order.sort_by(|&a, &b| x.atoms[a].cmp(&x.atoms[b]));
    let mut best: Option<(usize, f64)> = None;
    for j in order {
        if !is_integer(&x.atoms[j]) {
            continue;
        }
        let v = x.primal[j];
        let frac = (v - v.floor()).min(v.ceil() - v);
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, f)| frac > f) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| (x.atoms[j].clone(), x.primal[j]))
}

/// Splits `node` on its most fractional integer atom: the first child gets
/// `ub = floor(x)`, the second `lb = ceil(x)`. `bounds` gives the atom's
/// bounds before branching; `ids` the children's ids.
pub fn branch(
    node: &Node,
    x: &LpSolution,
    is_integer: &dyn Fn(&Atom) -> bool,
    bounds: &dyn Fn(&Atom) -> (f64, f64),
    ids: (usize, usize),
) -> Result<(Node, Node), SolveError> {
    let (atom, v) = most_fractional(x, is_integer).ok_or(SolveError::NoFractionalVariable)?;
    let (lb, ub) = node.extra_bounds.get(&atom).copied().unwrap_or_else(|| bounds(&atom));
    let child = |id: usize, lb: f64, ub: f64| {
        let mut extra_bounds = node.extra_bounds.clone();
        extra_bounds.insert(atom.clone(), (lb, ub));
        Node {
            id,
            parent: Some(node.id),
            depth: node.depth + 1,
            extra_bounds,
            lp_bound: node.lp_bound,
        }
    };
    Ok((child(ids.0, lb, v.floor()), child(ids.1, v.ceil(), ub)))
}

/// How one node ended.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeOutcome {
    Infeasible,
    Unbounded,
    Fathomed,
    /// A new incumbent was found (or the integral point did not improve it).
    Integral,
    Branched(Box<(Node, Node)>),
}

#[derive(Debug, Clone)]
pub struct NodeResult {
    pub outcome: NodeOutcome,
    pub lp_bound: f64,
    /// The final restricted master and its solution.
    pub lp: LpProblem,
    pub solution: LpSolution,
    /// The last pricing pass, if pricing ran.
    pub last_pricing: Option<PricingResult>,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub objective: f64,
    pub values: BTreeMap<Atom, f64>,
}

/// Solver state shared by all nodes: created columns, active rows and the
/// incumbent.
pub struct Engine<'g, 'm> {
    grounder: &'g Grounder<'m>,
    separator: Separator<'g, 'm>,
    pricer: Pricer<'g, 'm>,
    opts: SolveOptions,
    mode: SolveMode,
    columns: Vec<Atom>,
    created: HashSet<Atom>,
    infos: HashMap<Atom, VarInfo>,
    known_variables: HashSet<Atom>,
    active: Vec<LinCons>,
    active_set: HashSet<LinCons>,
    incumbent: Option<Incumbent>,
    stats: SolveStats,
    trace: Vec<NodeTrace>,
}

impl<'g, 'm> Engine<'g, 'm> {
    /// Branch-price-and-cut: creates only the atoms that cannot rest at 0
    /// (functors some of whose atoms may get a nonzero lower bound), or
    /// every atom when pricing is off. No row is active yet.
    pub fn bpc(grounder: &'g Grounder<'m>, opts: &SolveOptions) -> Result<Self, SolveError> {
        let mut engine = Engine::empty(grounder, opts, SolveMode::Bpc);
        let model = grounder.model;
        let eager: HashSet<&str> = model
            .signatures
            .keys()
            .filter(|f| Model::possible_values(&model.lb_rules, f, model.defaults.lb).any(|lb| lb != 0.0))
            .map(String::as_str)
            .collect();
        let atoms = grounder.ground_variables(opts.limits.max_atoms)?;
        for atom in atoms {
            if opts.pricer == PricerKind::Off || eager.contains(atom.functor.as_str()) {
                engine.create(atom)?;
            }
        }
        Ok(engine)
    }

    /// Everything grounded up front: all atoms, all rows, no elastic.
    pub fn ground(grounder: &'g Grounder<'m>, opts: &SolveOptions) -> Result<Self, SolveError> {
        let mut engine = Engine::empty(grounder, opts, SolveMode::Ground);
        let atoms = grounder.ground_variables(opts.limits.max_atoms)?;
        let declared: HashSet<Atom> = atoms.iter().cloned().collect();
        let rows = grounder.ground_constraints(&declared, opts.limits.max_constraints)?;
        for atom in atoms {
            engine.create(atom)?;
        }
        for row in rows {
            engine.activate(row);
        }
        Ok(engine)
    }

    fn empty(grounder: &'g Grounder<'m>, opts: &SolveOptions, mode: SolveMode) -> Self {
        Engine {
            grounder,
            separator: Separator::new(grounder),
            pricer: Pricer::new(grounder),
            opts: opts.clone(),
            mode,
            columns: Vec::new(),
            created: HashSet::new(),
            infos: HashMap::new(),
            known_variables: HashSet::new(),
            active: Vec::new(),
            active_set: HashSet::new(),
            incumbent: None,
            stats: SolveStats::default(),
            trace: Vec::new(),
        }
    }

    pub fn created_atoms(&self) -> &[Atom] {
        &self.columns
    }

    pub fn active_rows(&self) -> &[LinCons] {
        &self.active
    }

    pub fn incumbent(&self) -> Option<&Incumbent> {
        self.incumbent.as_ref()
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn info(&self, atom: &Atom) -> Option<&VarInfo> {
        self.infos.get(atom)
    }

    fn create(&mut self, atom: Atom) -> Result<(), SolveError> {
        if self.created.contains(&atom) {
            return Ok(());
        }
        if self.columns.len() >= self.opts.limits.max_atoms {
            return Err(GroundError::SizeExceeded {
                what: "atoms",
                limit: self.opts.limits.max_atoms,
            }
            .into());
        }
        let info = self.grounder.model.atom_info(&atom).map_err(GroundError::from)?;
        self.infos.insert(atom.clone(), info);
        self.created.insert(atom.clone());
        self.known_variables.insert(atom.clone());
        self.columns.push(atom);
        Ok(())
    }

    fn activate(&mut self, row: LinCons) -> bool {
        if self.active_set.contains(&row) {
            return false;
        }
        debug_assert!(row.check_invariants().is_ok());
        self.active_set.insert(row.clone());
        self.active.push(row);
        true
    }

    /// Adds rows found by separation after checking that every atom they
    /// mention is a declared variable.
    fn add_rows(&mut self, rows: Vec<LinCons>) -> Result<usize, SolveError> {
        for row in &rows {
            for t in row.terms() {
                if !self.known_variables.contains(&t.atom) {
                    if !self.grounder.is_variable(&t.atom) {
                        return Err(GroundError::GroundAtomNotDeclared {
                            atom: t.atom.clone(),
                            span: None,
                        }
                        .into());
                    }
                    self.known_variables.insert(t.atom.clone());
                }
            }
        }
        let mut added = 0;
        for row in rows {
            if self.active.len() >= self.opts.limits.max_constraints {
                return Err(GroundError::SizeExceeded {
                    what: "constraints",
                    limit: self.opts.limits.max_constraints,
                }
                .into());
            }
            if self.activate(row) {
                added += 1;
            }
        }
        Ok(added)
    }

    fn bounds_of(&self, atom: &Atom, node: &Node) -> (f64, f64) {
        node.extra_bounds.get(atom).copied().unwrap_or_else(|| {
            let i = &self.infos[atom];
            (i.lb, i.ub)
        })
    }

    /// The restricted master for `node`.
    pub fn master(&self, node: &Node) -> LpProblem {
        let mut lp = LpProblem::new();
        for atom in &self.columns {
            let (lb, ub) = self.bounds_of(atom, node);
            lp.add_column(atom.clone(), self.infos[atom].objective, lb, ub);
        }
        for row in &self.active {
            lp.add_constraint(row.restricted_to(|a| self.created.contains(a)));
        }
        if self.mode == SolveMode::Bpc {
            lp.elastic_penalty = Some(self.opts.elastic_penalty);
        }
        lp
    }

    fn solve_master(&mut self, node: &Node) -> Result<(LpProblem, LpSolution), SolveError> {
        let lp = self.master(node);
        let sol = lp.solve()?;
        self.stats.lp_solves += 1;
        self.stats.simplex_iterations += sol.iterations as u64;
        Ok((lp, sol))
    }

    fn limit(&self, reason: String, bound: f64) -> SolveError {
        let mut report = self.report(SolveStatus::LimitReached, bound, Vec::new());
        report.gap = relative_gap(report.objective, bound);
        SolveError::IterationLimit {
            reason,
            report: Box::new(report),
        }
    }

    /// Runs the cut/price loop at `node` and classifies the result. A new
    /// incumbent found here is stored. `global_bound` is only used for
    /// limit reports.
    pub fn process_node(&mut self, node: &Node, global_bound: f64) -> Result<NodeResult, SolveError> {
        let lazy = self.mode == SolveMode::Bpc;
        let sep_opts = SeparationOptions {
            threshold: self.opts.violation_threshold,
            max_cuts: self.opts.max_cuts_per_round,
        };
        let mut rounds = Vec::new();
        let mut next_kind = (RoundKind::Initial, 0);
        let (mut cut_rounds, mut price_rounds) = (0usize, 0usize);
        let mut last_pricing = None;
        loop {
            let (lp, sol) = self.solve_master(node)?;
            rounds.push(Round {
                kind: next_kind.0,
                added: next_kind.1,
                objective: sol.objective_value,
            });
            let done = |outcome, lp_bound, last_pricing| NodeResult {
                outcome,
                lp_bound,
                lp: lp.clone(),
                solution: sol.clone(),
                last_pricing,
                rounds: rounds.clone(),
            };
            match sol.status {
                LpStatus::Infeasible => return Ok(done(NodeOutcome::Infeasible, f64::INFINITY, last_pricing)),
                LpStatus::Unbounded => return Ok(done(NodeOutcome::Unbounded, f64::NEG_INFINITY, last_pricing)),
                LpStatus::Optimal => {}
            }

            if lazy {
                let active = &self.active_set;
                let found = self
                    .separator
                    .separate_excluding(self.opts.separator, &sol, &sep_opts, &|row| active.contains(row))?;
                self.stats.separation_enumerated += found.candidates_enumerated;
                self.stats.separation_pruned += found.candidates_pruned;
                if !found.cuts.is_empty() {
                    cut_rounds += 1;
                    self.stats.cut_rounds += 1;
                    if cut_rounds > self.opts.max_cut_rounds {
                        return Err(self.limit(
                            format!(
                                "cut round limit of {} reached at node {}",
                                self.opts.max_cut_rounds, node.id
                            ),
                            global_bound,
                        ));
                    }
                    let added = self.add_rows(found.cuts.into_iter().map(|(c, _)| c).collect())?;
                    self.stats.cuts_added += added as u64;
                    next_kind = (RoundKind::Cut, added);
                    continue;
                }
                if self.opts.pricer != PricerKind::Off {
                    let priced = self.pricer.price(
                        self.opts.pricer,
                        &self.created,
                        &sol.duals,
                        &self.active,
                        self.opts.pricing_threshold,
                    )?;
                    self.stats.pricing_enumerated += priced.candidates_enumerated;
                    self.stats.pricing_columns_built += priced.columns_built;
                    let new: Vec<Atom> = priced.priced.iter().map(|(a, _)| a.clone()).collect();
                    last_pricing = Some(priced);
                    if !new.is_empty() {
                        price_rounds += 1;
                        self.stats.price_rounds += 1;
                        if price_rounds > self.opts.max_price_rounds {
                            return Err(self.limit(
                                format!(
                                    "pricing round limit of {} reached at node {}",
                                    self.opts.max_price_rounds, node.id
                                ),
                                global_bound,
                            ));
                        }
                        self.stats.atoms_priced += new.len() as u64;
                        let added = new.len();
                        for atom in new {
                            self.create(atom)?;
                        }
                        next_kind = (RoundKind::Price, added);
                        continue;
                    }
                }
                if sol.elastic_total() > FEASIBILITY_TOL {
                    return Ok(done(NodeOutcome::Infeasible, f64::INFINITY, last_pricing));
                }
            }

            let bound = sol.objective_value;
            if let Some(inc) = &self.incumbent {
                if bound >= inc.objective - FATHOM_TOL {
                    return Ok(done(NodeOutcome::Fathomed, bound, last_pricing));
                }
            }
            let infos = &self.infos;
            let is_integer = |a: &Atom| infos[a].is_integer();
            if most_fractional(&sol, &is_integer).is_none() {
                if lazy {
                    // Active rows are a subset of the model: check them all.
                    let active = &self.active_set;
                    let missed = self.separator.separate_excluding(
                        SeparatorKind::Naive,
                        &sol,
                        &SeparationOptions {
                            threshold: self.opts.violation_threshold,
                            max_cuts: None,
                        },
                        &|row| active.contains(row),
                    )?;
                    if !missed.cuts.is_empty() {
                        cut_rounds += 1;
                        if cut_rounds > self.opts.max_cut_rounds {
                            return Err(self.limit(
                                format!(
                                    "cut round limit of {} reached at node {}",
                                    self.opts.max_cut_rounds, node.id
                                ),
                                global_bound,
                            ));
                        }
                        let added = self.add_rows(missed.cuts.into_iter().map(|(c, _)| c).collect())?;
                        self.stats.cuts_added += added as u64;
                        next_kind = (RoundKind::Validate, added);
                        continue;
                    }
                }
                self.accept(&sol);
                return Ok(done(NodeOutcome::Integral, bound, last_pricing));
            }
            let ids = (
                self.stats.branches as usize * 2 + 1,
                self.stats.branches as usize * 2 + 2,
            );
            let mut scored = node.clone();
            scored.lp_bound = bound;
            let children = branch(&scored, &sol, &is_integer, &|a| self.bounds_of(a, node), ids)?;
            self.stats.branches += 1;
            return Ok(done(NodeOutcome::Branched(Box::new(children)), bound, last_pricing));
        }
    }

    fn accept(&mut self, sol: &LpSolution) {
        let mut values = BTreeMap::new();
        let mut objective = 0.0;
        for (atom, &v) in sol.atoms.iter().zip(&sol.primal) {
            let info = &self.infos[atom];
            let v = if info.is_integer() { v.round() } else { v };
            let v = if v == 0.0 { 0.0 } else { v };
            objective += info.objective * v;
            if v != 0.0 {
                values.insert(atom.clone(), v);
            }
        }
        if self.incumbent.as_ref().is_none_or(|inc| objective < inc.objective) {
            self.incumbent = Some(Incumbent { objective, values });
        }
    }

    fn report(&self, status: SolveStatus, bound: f64, history: Vec<f64>) -> SolveReport {
        let mut stats = self.stats.clone();
        stats.atoms_created = self.columns.len() as u64;
        stats.constraints_created = self.active.len() as u64;
        let (objective, assignment) = match &self.incumbent {
            Some(inc) => (inc.objective, inc.values.clone()),
            None => (f64::INFINITY, BTreeMap::new()),
        };
        let gap = match status {
            SolveStatus::Optimal | SolveStatus::Infeasible => 0.0,
            _ => relative_gap(objective, bound),
        };
        SolveReport {
            mode: self.mode,
            status,
            objective,
            assignment,
            bound,
            gap,
            stats,
            bound_history: history,
            trace: self.trace.clone(),
        }
    }

    /// Best-bound branch-and-bound from the root.
    pub fn run(mut self) -> Result<SolveReport, SolveError> {
        let mut open: Vec<Node> = vec![Node::root()];
        let mut global_bound = f64::NEG_INFINITY;
        let mut history = Vec::new();
        while let Some(pick) = open
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.lp_bound.total_cmp(&b.lp_bound).then(a.id.cmp(&b.id)))
            .map(|(i, _)| i)
        {
            let node = open.swap_remove(pick);
            if let Some(inc) = &self.incumbent {
                if node.lp_bound >= inc.objective - FATHOM_TOL {
                    self.record(&node, NodeStatus::Fathomed, Some(node.lp_bound), None, Vec::new());
                    continue;
                }
            }
            if self.stats.nodes as usize >= self.opts.max_nodes {
                let bound = open
                    .iter()
                    .map(|n| n.lp_bound)
                    .fold(node.lp_bound, f64::min)
                    .min(self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective))
                    .max(global_bound);
                return Err(self.limit(format!("node limit of {} reached", self.opts.max_nodes), bound));
            }
            self.stats.nodes += 1;
            self.stats.max_depth = self.stats.max_depth.max(node.depth as u64);
            let result = self.process_node(&node, global_bound)?;
            let (status, branch_atom) = match result.outcome {
                NodeOutcome::Unbounded => {
                    self.record(&node, NodeStatus::Open, None, None, result.rounds);
                    return Ok(self.report(SolveStatus::Unbounded, f64::NEG_INFINITY, history));
                }
                NodeOutcome::Infeasible => (NodeStatus::Infeasible, None),
                NodeOutcome::Fathomed => (NodeStatus::Fathomed, None),
                NodeOutcome::Integral => (NodeStatus::Integral, None),
                NodeOutcome::Branched(children) => {
                    let (down, up) = *children;
                    let atom = down
                        .extra_bounds
                        .keys()
                        .find(|a| down.extra_bounds.get(*a) != node.extra_bounds.get(*a))
                        .cloned();
                    open.push(down);
                    open.push(up);
                    (NodeStatus::Branched, atom)
                }
            };
            self.record(&node, status, Some(result.lp_bound), branch_atom, result.rounds);
            let incumbent = self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
            let lowest_open = open.iter().map(|n| n.lp_bound).fold(f64::INFINITY, f64::min);
            global_bound = global_bound.max(lowest_open.min(incumbent));
            history.push(global_bound);
        }
        let status = if self.incumbent.is_some() {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        };
        let bound = self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
        Ok(self.report(status, bound, history))
    }

    fn record(
        &mut self,
        node: &Node,
        status: NodeStatus,
        lp_bound: Option<f64>,
        branch_atom: Option<Atom>,
        rounds: Vec<Round>,
    ) {
        if self.opts.trace {
            self.trace.push(NodeTrace {
                id: node.id,
                parent: node.parent,
                depth: node.depth,
                status,
                lp_bound,
                branch_atom,
                rounds,
            });
        }
    }
}

/// Branch-price-and-cut from an empty restricted master.
pub fn solve_bpc(model: &Model, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let grounder = Grounder::new(model);
    Engine::bpc(&grounder, opts)?.run()
}

/// Branch-and-bound over the fully grounded problem.
pub fn solve_ground(model: &Model, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let grounder = Grounder::new(model);
    Engine::ground(&grounder, opts)?.run()
}
