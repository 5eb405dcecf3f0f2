//! `fomip`: check, ground, export and solve `.fomip` programs.
//!
//! Exit codes: 0 success or optimal, 1 infeasible or unbounded, 2 input
//! error, 3 resource limit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fomip::grounder::{ground_with_limits, GroundLimits};
use fomip::lp::LpError;
use fomip::{
    json, solve_bpc, solve_enum, solve_ground, validate_model, write_lp, GroundError, Model, PricerKind, SeparatorKind,
    SolveError, SolveOptions, SolveReport, SolveStatus, SourceModel,
};

const EXIT_OK: u8 = 0;
const EXIT_INFEASIBLE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_LIMIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "fomip", version, about = "First-order MIP modeling and branch-price-and-cut")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a program; print its diagnostics.
    Check { file: PathBuf },
    /// Ground every variable and constraint; write the problem as JSON.
    Ground(GroundArgs),
    /// Ground the program and write it in LP format.
    Export(GroundArgs),
    /// Solve the program and write the run report as JSON.
    Solve(SolveArgs),
    /// Solve by exhaustive enumeration (small integer programs only).
    Enum(OutputArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    file: PathBuf,
    /// Output path; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Repeat for more detail (-vv adds the per-node trace).
    #[arg(short, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug)]
struct GroundArgs {
    #[command(flatten)]
    io: OutputArgs,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args, Debug)]
struct LimitArgs {
    #[arg(long, default_value_t = GroundLimits::default().max_atoms)]
    max_atoms: usize,
    #[arg(long, default_value_t = GroundLimits::default().max_constraints)]
    max_constraints: usize,
}

impl LimitArgs {
    fn limits(&self) -> GroundLimits {
        GroundLimits {
            max_atoms: self.max_atoms,
            max_constraints: self.max_constraints,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Ground,
    Bpc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Separator {
    Naive,
    Guided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Pricer {
    Naive,
    Guided,
    Off,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    io: OutputArgs,
    #[command(flatten)]
    limits: LimitArgs,
    #[arg(long, value_enum, default_value_t = Mode::Bpc)]
    mode: Mode,
    /// Separation back end (bpc mode only; default guided).
    #[arg(long, value_enum)]
    separator: Option<Separator>,
    /// Pricing back end (bpc mode only; default guided).
    #[arg(long, value_enum)]
    pricer: Option<Pricer>,
    #[arg(long, default_value_t = 10_000)]
    max_nodes: usize,
    #[arg(long, default_value_t = 1_000)]
    max_cut_rounds: usize,
    #[arg(long, default_value_t = 1_000)]
    max_price_rounds: usize,
    #[arg(long)]
    max_cuts_per_round: Option<usize>,
    #[arg(long, default_value_t = fomip::separation::VIOLATION_THRESHOLD)]
    violation_threshold: f64,
    #[arg(long, default_value_t = fomip::pricing::PRICING_THRESHOLD)]
    pricing_threshold: f64,
    /// Worker threads. Node processing is sequential, so values above 1
    /// currently behave like 1.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// An error that ends the run with a message and exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("{}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Ok(seed) = std::env::var("FOMIP_SEED") {
        seed.trim()
            .parse::<u64>()
            .map_err(|_| Failure::input(format!("FOMIP_SEED must be an unsigned integer, got `{seed}`")))?;
    }
    match cli.command {
        Command::Check { file } => check(&file),
        Command::Ground(args) => {
            let (src, model) = load(&args.io.file)?;
            let problem = ground_with_limits(&model, args.limits.limits()).map_err(|e| ground_failure(&src, &e))?;
            emit(&args.io, &json::to_string(&json::ground_problem(&problem)))?;
            Ok(EXIT_OK)
        }
        Command::Export(args) => {
            let (src, model) = load(&args.io.file)?;
            let problem = ground_with_limits(&model, args.limits.limits()).map_err(|e| ground_failure(&src, &e))?;
            let text = write_lp(&problem).map_err(|e| Failure::input(format!("{}: error: {e}", src.path)))?;
            emit(&args.io, &text)?;
            Ok(EXIT_OK)
        }
        Command::Solve(args) => solve(&args),
        Command::Enum(args) => {
            let (src, model) = load(&args.file)?;
            finish(&src, &args, solve_enum(&model))
        }
    }
}

fn read(file: &Path) -> Result<SourceModel, Failure> {
    let bytes = fs::read(file).map_err(|e| Failure::input(format!("{}: error: {e}", file.display())))?;
    let path = file.display().to_string();
    SourceModel::from_bytes(path.clone(), &bytes).map_err(|d| Failure::input(d.render(&path)))
}

fn load(file: &Path) -> Result<(SourceModel, Model), Failure> {
    let src = read(file)?;
    match fomip::parse_model(&src) {
        Ok(model) => {
            for d in validate_model(&model) {
                eprintln!("{}", d.render(&src.path));
            }
            Ok((src, model))
        }
        Err(diags) => Err(Failure::input(
            diags.iter().map(|d| d.render(&src.path)).collect::<Vec<_>>().join("\n"),
        )),
    }
}

fn check(file: &Path) -> Result<u8, Failure> {
    let src = read(file)?;
    let diags = match fomip::parse_model(&src) {
        Ok(model) => validate_model(&model),
        Err(diags) => diags,
    };
    for d in &diags {
        eprintln!("{}", d.render(&src.path));
    }
    Ok(if fomip::diagnostic::has_errors(&diags) {
        EXIT_INPUT
    } else {
        EXIT_OK
    })
}

fn ground_failure(src: &SourceModel, e: &GroundError) -> Failure {
    let code = match e {
        GroundError::SizeExceeded { .. } => EXIT_LIMIT,
        _ => EXIT_INPUT,
    };
    let message = match e.span() {
        Some(span) => format!("{}:{}:{}: error: {e}", src.path, span.line, span.column),
        None => format!("{}: error: {e}", src.path),
    };
    Failure { code, message }
}

fn emit(io: &OutputArgs, text: &str) -> Result<(), Failure> {
    match &io.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("{}: error: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(args: &SolveArgs) -> Result<u8, Failure> {
    if args.mode == Mode::Ground && (args.separator.is_some() || args.pricer.is_some()) {
        return Err(Failure::input("--separator and --pricer only apply to --mode=bpc"));
    }
    if args.mode == Mode::Ground && args.max_cuts_per_round.is_some() {
        return Err(Failure::input("--max-cuts-per-round only applies to --mode=bpc"));
    }
    for (name, v) in [
        ("--violation-threshold", args.violation_threshold),
        ("--pricing-threshold", args.pricing_threshold),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Failure::input(format!("{name} must be positive, got {v}")));
        }
    }
    if args.threads == 0 {
        return Err(Failure::input("--threads must be at least 1"));
    }
    if args.max_cuts_per_round == Some(0) {
        return Err(Failure::input("--max-cuts-per-round must be at least 1"));
    }
    let (src, model) = load(&args.io.file)?;
    let opts = SolveOptions {
        separator: match args.separator {
            Some(Separator::Naive) => SeparatorKind::Naive,
            _ => SeparatorKind::Guided,
        },
        pricer: match args.pricer {
            Some(Pricer::Naive) => PricerKind::Naive,
            Some(Pricer::Off) => PricerKind::Off,
            _ => PricerKind::Guided,
        },
        max_nodes: args.max_nodes,
        max_cut_rounds: args.max_cut_rounds,
        max_price_rounds: args.max_price_rounds,
        violation_threshold: args.violation_threshold,
        pricing_threshold: args.pricing_threshold,
        max_cuts_per_round: args.max_cuts_per_round,
        limits: args.limits.limits(),
        trace: args.io.verbose >= 2,
        ..SolveOptions::default()
    };
    let result = match args.mode {
        Mode::Ground => solve_ground(&model, &opts),
        Mode::Bpc => solve_bpc(&model, &opts),
    };
    finish(&src, &args.io, result)
}

fn summary(r: &SolveReport) -> String {
    let s = &r.stats;
    let mut out = format!(
        "{}: {} objective {} bound {} gap {}\n",
        r.mode.as_str(),
        r.status,
        r.objective,
        r.bound,
        r.gap
    );
    if r.mode == fomip::SolveMode::Enum {
        out.push_str(&format!(
            "  {} atoms, {} constraints, {} assignments examined\n",
            s.atoms_created, s.constraints_created, s.assignments_enumerated
        ));
    } else {
        out.push_str(&format!(
            "  {} nodes, {} branches, {} LP solves, {} atoms, {} constraints\n",
            s.nodes, s.branches, s.lp_solves, s.atoms_created, s.constraints_created
        ));
        out.push_str(&format!(
            "  {} cuts in {} rounds, {} atoms priced in {} rounds\n",
            s.cuts_added, s.cut_rounds, s.atoms_priced, s.price_rounds
        ));
    }
    out
}

fn finish(src: &SourceModel, io: &OutputArgs, result: Result<SolveReport, SolveError>) -> Result<u8, Failure> {
    let (report, code, note) = match result {
        Ok(r) => {
            let code = match r.status {
                SolveStatus::Optimal => EXIT_OK,
                SolveStatus::Infeasible | SolveStatus::Unbounded => EXIT_INFEASIBLE,
                SolveStatus::LimitReached => EXIT_LIMIT,
            };
            (r, code, None)
        }
        Err(SolveError::IterationLimit { reason, report }) => (*report, EXIT_LIMIT, Some(reason)),
        Err(SolveError::Ground(e)) => return Err(ground_failure(src, &e)),
        Err(e @ (SolveError::EnumSizeExceeded { .. } | SolveError::Lp(LpError::IterationLimit { .. }))) => {
            return Err(Failure {
                code: EXIT_LIMIT,
                message: format!("{}: error: {e}", src.path),
            })
        }
        Err(e @ SolveError::Lp(_)) => {
            return Err(Failure {
                code: EXIT_LIMIT,
                message: format!("{}: error: LP solver failed: {e}", src.path),
            })
        }
        Err(e) => return Err(Failure::input(format!("{}: error: {e}", src.path))),
    };
    emit(io, &json::to_string(&json::solve_report(&report, io.verbose)))?;
    if let Some(reason) = note {
        eprintln!("{}: stopped early: {reason}", src.path);
    }
    eprint!("{}", summary(&report));
    Ok(code)
}
