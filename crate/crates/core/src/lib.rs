//! First-order mixed-integer programming.
//!
//! A `.fomip` program names MIP variables by ground atoms and generates
//! linear constraints from rules over finite domains. It can be solved by
//! grounding everything up front, or lazily by branch-price-and-cut, where
//! violated rows are found by searching the constraint rules against the
//! current LP point and new columns by searching the variable rules for
//! negative reduced cost.
//!
//! ```
//! use fomip::{parse_model, solve_bpc, SolveOptions, SolveStatus, SourceModel};
//!
//! let src = SourceModel::new("toy.fomip", "
//!     domain item = {a, b, c};
//!     var pick(item);
//!     objective pick(I) = -1.0;
//!     constraint pick(I) + pick(J) <= 1 :- item(I), item(J), I < J;
//! ");
//! let model = parse_model(&src).unwrap();
//! let report = solve_bpc(&model, &SolveOptions::default()).unwrap();
//! assert_eq!(report.status, SolveStatus::Optimal);
//! assert_eq!(report.objective, -1.0);
//! ```

pub mod atom;
pub mod bpc;
pub mod diagnostic;
pub mod export;
pub mod grounder;
pub mod json;
pub mod lincons;
pub mod lp;
pub mod model;
pub mod parser;
pub mod pricing;
pub mod separation;

pub use atom::Atom;
pub use bpc::{
    solve_bpc, solve_enum, solve_ground, SolveError, SolveMode, SolveOptions, SolveReport, SolveStats, SolveStatus,
};
pub use diagnostic::{Diagnostic, Severity, Span};
pub use export::{write_lp, ExportError};
pub use grounder::{ground, ground_constraints, ground_variables, GroundError, GroundProblem};
pub use lincons::{Bound, LinCons, LinConsError, LinTerm};
pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus};
pub use model::{Model, ModelError, VarInfo, VarType};
pub use parser::{parse_model, validate_model, SourceModel};
pub use pricing::{price_guided, price_naive, PricerKind, PricingResult};
pub use separation::{separate_guided, separate_naive, SeparationResult, SeparatorKind};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/language.md")]
    struct Language;
    #[doc = include_str!("../../../book/src/grounding.md")]
    struct Grounding;
    #[doc = include_str!("../../../book/src/lp.md")]
    struct Lp;
    #[doc = include_str!("../../../book/src/separation.md")]
    struct Separation;
    #[doc = include_str!("../../../book/src/pricing.md")]
    struct Pricing;
    #[doc = include_str!("../../../book/src/bpc.md")]
    struct Bpc;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
