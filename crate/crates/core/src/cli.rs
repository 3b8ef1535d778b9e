//! Command-line front end and the JSON trace format.
//!
//! Exit codes: 0 success, 1 internal error, 2 residual or out of tolerance,
//! 64 usage error, 65 bad input expression.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::derivations::{derive, representative, Derivation, DerivationReport, Verdict};
use crate::dsl::{
    expr_latex, lower, parse, print_canonical, print_expr, print_surface, sections_document,
    surface_latex, LatexSection, LatexStep, Surface,
};
use crate::error::{Error, Result};
use crate::expr::{canonicalize, equal_canonical, expand_concrete, Expr};
use crate::oracle::{
    check_delta_flip, check_integration_by_parts, check_ordering_residual, enumerate_identity,
    seeded_bumps, Family, GridSpec, RegularizedDelta, IBP_GRID,
};
use crate::rewrite::{self, AxiomTable, ConstraintSet, Mode, Rule, StepValue};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_RESIDUAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance of `oracle flip` (gaussian; off-edge offsets for the rectangle).
pub const FLIP_TOLERANCE: f64 = 1e-6;
/// Tolerance of `oracle ibp` on both differences.
pub const IBP_TOLERANCE: f64 = 1e-4;

const DEFAULT_EXTENT: f64 = 8.0;
const DEFAULT_POINTS: usize = 4096;

#[derive(Parser, Debug)]
#[command(
    name = "fieldcomm",
    version,
    about = "Commutators of the free electromagnetic field's momentum and angular momentum"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a scripted derivation and print its trace.
    Derive {
        which: Which,
        /// Do not assume div E = 0 and div B = 0.
        #[arg(long)]
        charges: bool,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Write the trace document as JSON.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        /// Write the trace as a LaTeX document.
        #[arg(long, value_name = "PATH")]
        latex: Option<PathBuf>,
    },
    /// Print the canonical form of an expression (text or file).
    Canon {
        #[arg(allow_hyphen_values = true)]
        input: String,
        /// Expand summed indices over components first.
        #[arg(long)]
        concrete: bool,
    },
    /// Compare two expressions.
    Check {
        #[arg(allow_hyphen_values = true)]
        lhs: String,
        #[arg(allow_hyphen_values = true)]
        rhs: String,
        /// Evaluate pure tensor expressions at every index assignment.
        #[arg(long)]
        enumerate: bool,
    },
    /// Numeric checks with a nascent delta function.
    Oracle {
        check: OracleCheck,
        #[arg(long, default_value = "gaussian")]
        family: Family,
        #[arg(long, default_value_t = 0.05)]
        a: f64,
        /// Grid points.
        #[arg(long, value_name = "N")]
        grid: Option<usize>,
        /// Grid length.
        #[arg(long, value_name = "L")]
        extent: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Render a JSON trace document as LaTeX.
    Latex { trace: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    Pp,
    Jp,
    Jj,
    Ordering,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Symbolic,
    Concrete,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OracleCheck {
    Flip,
    Ibp,
    Ordering,
}

/// Serialized trace of one derivation. Unknown fields are ignored on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema_version: u32,
    pub derivation: String,
    pub constraint_flags: ConstraintSet,
    pub mode: Mode,
    /// `(i, j)` of the traced run; absent for symbolic indices.
    #[serde(default)]
    pub pair: Option<(u8, u8)>,
    pub input: String,
    /// Closed form the traced run is compared with.
    pub target: String,
    pub steps: Vec<TraceStep>,
    pub verdict: RecordedVerdict,
    pub assumptions: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub milestones: Vec<RecordedMilestone>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule: Rule,
    pub anchor: String,
    pub expr_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedVerdict {
    /// `proven`, `residual` or `deferred-to-oracle`, for the whole derivation.
    pub kind: String,
    /// Traced result minus target, when the verdict is a residual.
    #[serde(default)]
    pub residual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedMilestone {
    pub label: String,
    pub matched: bool,
}

/// Outcome of replaying a [`TraceDocument`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayCheck {
    /// First step whose recorded value the rule does not reproduce.
    pub diverges_at: Option<usize>,
    /// The replayed result agrees with the recorded verdict.
    pub verdict_agrees: bool,
}

impl ReplayCheck {
    pub fn ok(&self) -> bool {
        self.diverges_at.is_none() && self.verdict_agrees
    }
}

fn parse_value(rule: Rule, text: &str) -> Result<StepValue> {
    let s = parse(text)?;
    Ok(match rule {
        Rule::ExpandCommutators => StepValue::Surface(s),
        _ => StepValue::Expr(lower(&s)?),
    })
}

impl TraceDocument {
    pub fn from_report(r: &DerivationReport) -> Self {
        let rep = representative(&r.runs);
        let residual = match r.verdict {
            Verdict::Residual(_) => Some(print_canonical(&rep.result.sub(&rep.target))),
            _ => None,
        };
        TraceDocument {
            schema_version: SCHEMA_VERSION,
            derivation: r.name.name().to_string(),
            constraint_flags: r.constraints,
            mode: r.mode,
            pair: rep.pair,
            input: print_surface(&rep.trace.initial),
            target: print_expr(&rep.target),
            steps: rep
                .trace
                .steps
                .iter()
                .map(|s| TraceStep {
                    rule: s.rule,
                    anchor: s.anchor.clone(),
                    expr_text: s.after.text(),
                })
                .collect(),
            verdict: RecordedVerdict {
                kind: r.verdict.label().to_string(),
                residual,
            },
            assumptions: rep.trace.assumptions.clone(),
            notes: rep.trace.notes.clone(),
            milestones: r
                .milestones
                .iter()
                .map(|m| RecordedMilestone {
                    label: m.label.clone(),
                    matched: m.matched,
                })
                .collect(),
        }
    }

    /// Re-parses every step, re-applies its rule to the previous one and
    /// compares the final value with the target against the verdict.
    pub fn replay(&self) -> Result<ReplayCheck> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Contract(format!(
                "trace schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let initial = parse(&self.input)?;
        let steps = self
            .steps
            .iter()
            .map(|s| Ok((s.rule, parse_value(s.rule, &s.expr_text)?)))
            .collect::<Result<Vec<_>>>()?;
        let diverges_at = rewrite::replay(
            &initial,
            &steps,
            &AxiomTable::default(),
            self.constraint_flags,
        )?;
        let last = match steps.last() {
            Some((_, StepValue::Expr(e))) => e.clone(),
            _ => {
                return Err(Error::Contract(
                    "trace does not end in an expression".into(),
                ))
            }
        };
        let target = lower(&parse(&self.target)?)?;
        let diff = canonicalize(&last.sub(&target));
        let verdict_agrees = match (self.verdict.kind.as_str(), &self.verdict.residual) {
            ("proven" | "deferred-to-oracle", None) => diff.is_zero(),
            ("residual", Some(text)) => equal_canonical(&diff, &lower(&parse(text)?)?),
            _ => false,
        };
        Ok(ReplayCheck {
            diverges_at,
            verdict_agrees,
        })
    }

    pub fn latex_section(&self) -> Result<LatexSection> {
        let mut steps = vec![LatexStep {
            rule: "input".into(),
            anchor: String::new(),
            body: surface_latex(&parse(&self.input)?),
        }];
        for s in &self.steps {
            let body = match parse_value(s.rule, &s.expr_text)? {
                StepValue::Surface(t) => surface_latex(&t),
                StepValue::Expr(e) => expr_latex(&e),
            };
            steps.push(LatexStep {
                rule: s.rule.name().into(),
                anchor: s.anchor.clone(),
                body,
            });
        }
        let mode = match self.mode {
            Mode::Symbolic => "symbolic",
            Mode::Concrete => "concrete",
        };
        let title = match self.pair {
            Some((i, j)) => format!("{} ({mode} mode, i = {i}, j = {j})", self.derivation),
            None => format!("{} ({mode} mode)", self.derivation),
        };
        Ok(LatexSection {
            title,
            assumptions: self.assumptions.clone(),
            steps,
        })
    }
}

/// Reads a file holding one trace document or a list of them.
pub fn read_documents(path: &Path) -> Result<Vec<TraceDocument>> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    Ok(if v.is_array() {
        serde_json::from_value(v)?
    } else {
        vec![serde_json::from_value(v)?]
    })
}

fn write_documents(path: &Path, docs: &[TraceDocument]) -> Result<()> {
    let text = if docs.len() == 1 {
        serde_json::to_string_pretty(&docs[0])?
    } else {
        serde_json::to_string_pretty(docs)?
    };
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Same as [`run`] with explicit output streams.
pub fn run_with<I: IntoIterator<Item = String>>(
    args: I,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.cmd {
        Cmd::Derive {
            which,
            charges,
            mode,
            json,
            latex,
        } => cmd_derive(which, charges, mode, json.as_deref(), latex.as_deref(), out),
        Cmd::Canon { input, concrete } => cmd_canon(&input, concrete, out),
        Cmd::Check {
            lhs,
            rhs,
            enumerate,
        } => cmd_check(&lhs, &rhs, enumerate, out),
        Cmd::Oracle {
            check,
            family,
            a,
            grid,
            extent,
            seed,
        } => cmd_oracle(check, family, a, grid, extent, seed, out),
        Cmd::Latex { trace } => cmd_latex(&trace, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::ParseInput { .. }
        | Error::Validation(_)
        | Error::Ambiguous(_)
        | Error::Unbound(_)
        | Error::NonPrimitiveCommutator(_)
        | Error::UnexpandedOperator(_) => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

/// Parses user input; parse errors keep the input for the caret display.
fn parse_input(text: &str) -> Result<Surface> {
    parse(text).map_err(|error| Error::ParseInput {
        error,
        input: text.to_string(),
    })
}

fn mode_of(m: ModeArg) -> Mode {
    match m {
        ModeArg::Symbolic => Mode::Symbolic,
        ModeArg::Concrete => Mode::Concrete,
    }
}

fn cmd_derive(
    which: Which,
    charges: bool,
    mode: Option<ModeArg>,
    json: Option<&Path>,
    latex: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let list: Vec<Derivation> = match which {
        Which::Pp => vec![Derivation::Pp],
        Which::Jp => vec![Derivation::Jp],
        Which::Jj => vec![Derivation::Jj],
        Which::Ordering => vec![Derivation::Ordering],
        Which::All => Derivation::ALL.to_vec(),
    };
    let c = if charges {
        ConstraintSet::none()
    } else {
        ConstraintSet::charge_free()
    };
    let mut docs = Vec::new();
    let mut code = EXIT_OK;
    for (n, d) in list.into_iter().enumerate() {
        if n > 0 {
            writeln!(out)?;
        }
        let r = derive(d, c, mode.map(mode_of))?;
        print_report(&r, out)?;
        if !r.succeeded() {
            code = EXIT_RESIDUAL;
        }
        docs.push(TraceDocument::from_report(&r));
    }
    if let Some(p) = json {
        write_documents(p, &docs)?;
    }
    if let Some(p) = latex {
        let sections = docs
            .iter()
            .map(TraceDocument::latex_section)
            .collect::<Result<Vec<_>>>()?;
        std::fs::write(p, sections_document(&sections))?;
    }
    Ok(code)
}

fn constraint_text(c: ConstraintSet) -> String {
    let mut parts = Vec::new();
    if c.div_e_zero {
        parts.push("div E = 0");
    }
    if c.div_b_zero {
        parts.push("div B = 0");
    }
    if parts.is_empty() {
        "no constraints".into()
    } else {
        parts.join(", ")
    }
}

fn print_report(r: &DerivationReport, out: &mut dyn Write) -> Result<()> {
    let rep = representative(&r.runs);
    let mode = match r.mode {
        Mode::Symbolic => "symbolic",
        Mode::Concrete => "concrete",
    };
    write!(
        out,
        "{} ({mode}; {})",
        r.name.name(),
        constraint_text(r.constraints)
    )?;
    if let Some((i, j)) = rep.pair {
        write!(out, " traced at i = {i}, j = {j}")?;
    }
    writeln!(out)?;
    writeln!(out, "input: {}", print_surface(&rep.trace.initial))?;
    for (n, s) in rep.trace.steps.iter().enumerate() {
        writeln!(out, "{:>3}. {} ({})", n + 1, s.rule.name(), s.anchor)?;
        writeln!(out, "     {}", s.after.text())?;
    }
    if !rep.divergence.is_zero() {
        writeln!(out, "divergence part: {}", print_expr(&rep.divergence))?;
    }
    for a in &rep.trace.assumptions {
        writeln!(out, "assumption: {a}")?;
    }
    for n in &rep.trace.notes {
        writeln!(out, "note: {n}")?;
    }
    for m in &r.milestones {
        writeln!(out, "[{}] {}", if m.matched { "x" } else { " " }, m.label)?;
    }
    let pairs: Vec<_> = r.runs.iter().filter(|p| p.pair.is_some()).collect();
    if !pairs.is_empty() {
        let matched = pairs.iter().filter(|p| p.matches).count();
        writeln!(
            out,
            "pairs matching the closed form: {matched} of {}",
            pairs.len()
        )?;
        for p in pairs.iter().filter(|p| !p.matches) {
            let (i, j) = p.pair.unwrap_or_default();
            writeln!(out, "  mismatch at i = {i}, j = {j}")?;
        }
    }
    for (family, a, o) in &r.oracle {
        writeln!(
            out,
            "oracle {family:?} a = {a}: axis {:.3e}, transverse {:.12} (expected {:.12}) {}",
            o.axis,
            o.transverse,
            o.expected_transverse,
            if o.passes(*family) { "ok" } else { "FAIL" }
        )?;
    }
    writeln!(out, "verdict: {}", r.verdict.label())?;
    match &r.verdict {
        Verdict::Residual(e) => writeln!(out, "residual: {}", print_canonical(e))?,
        _ => writeln!(out, "result: {}", print_canonical(&rep.result))?,
    }
    Ok(())
}

/// The argument names a file when one exists at that path.
fn text_or_file(arg: &str) -> Result<String> {
    let p = Path::new(arg);
    if p.is_file() {
        Ok(std::fs::read_to_string(p)?.trim().to_string())
    } else {
        Ok(arg.to_string())
    }
}

fn lower_input(text: &str) -> Result<Expr> {
    lower(&parse_input(text)?)
}

fn cmd_canon(input: &str, concrete: bool, out: &mut dyn Write) -> Result<i32> {
    let mut e = lower_input(&text_or_file(input)?)?;
    if concrete {
        e = expand_concrete(&e);
    }
    writeln!(out, "{}", print_canonical(&e))?;
    Ok(EXIT_OK)
}

fn cmd_check(lhs: &str, rhs: &str, enumerate: bool, out: &mut dyn Write) -> Result<i32> {
    let (l, r) = (lower_input(lhs)?, lower_input(rhs)?);
    if enumerate {
        let rep = enumerate_identity(&l, &r)?;
        if rep.holds {
            writeln!(out, "holds at all {} index assignments", rep.assignments)?;
            return Ok(EXIT_OK);
        }
        if let Some(c) = rep.counterexample {
            let at: Vec<String> = c
                .assignment
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            writeln!(
                out,
                "counterexample at {}: lhs = {}, rhs = {}",
                at.join(" "),
                c.lhs,
                c.rhs
            )?;
        }
        return Ok(EXIT_RESIDUAL);
    }
    if equal_canonical(&l, &r) {
        writeln!(out, "equal")?;
        Ok(EXIT_OK)
    } else {
        writeln!(
            out,
            "not equal; lhs - rhs = {}",
            print_canonical(&l.sub(&r))
        )?;
        Ok(EXIT_RESIDUAL)
    }
}

fn verdict_code(ok: bool, out: &mut dyn Write) -> Result<i32> {
    writeln!(
        out,
        "{}",
        if ok {
            "within tolerance"
        } else {
            "out of tolerance"
        }
    )?;
    Ok(if ok { EXIT_OK } else { EXIT_RESIDUAL })
}

fn cmd_oracle(
    check: OracleCheck,
    family: Family,
    a: f64,
    points: Option<usize>,
    extent: Option<f64>,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32> {
    if !(a > 0.0) {
        return Err(Error::Precondition(format!(
            "width must be positive, got {a}"
        )));
    }
    let d = RegularizedDelta::new(family, a);
    match check {
        OracleCheck::Flip => {
            let g = GridSpec::new(
                extent.unwrap_or(DEFAULT_EXTENT),
                points.unwrap_or(DEFAULT_POINTS),
            );
            let r = check_delta_flip(&d, &g)?;
            writeln!(
                out,
                "max error {:.3e} at offset {:.6}",
                r.max_error, r.worst_offset
            )?;
            let ok = match family {
                Family::Gaussian => {
                    writeln!(out, "central difference truncation {:.3e}", r.truncation)?;
                    r.max_error <= FLIP_TOLERANCE
                }
                Family::Rectangle => {
                    writeln!(
                        out,
                        "max error away from the edges {:.3e}",
                        r.max_error_off_edges
                    )?;
                    r.max_error_off_edges <= FLIP_TOLERANCE
                }
            };
            verdict_code(ok, out)
        }
        OracleCheck::Ibp => {
            let g = GridSpec::new(
                extent.unwrap_or(IBP_GRID.extent),
                points.unwrap_or(IBP_GRID.points),
            );
            let (f, h) = seeded_bumps(seed);
            let r = check_integration_by_parts(&f, &h, &d, &g)?;
            writeln!(out, "left {:.12}", r.left)?;
            writeln!(out, "middle {:.12}", r.middle)?;
            writeln!(out, "right {:.12}", r.right)?;
            writeln!(out, "err1 {:.3e}", r.err1)?;
            writeln!(out, "err2 {:.3e}", r.err2)?;
            verdict_code(r.err1 <= IBP_TOLERANCE && r.err2 <= IBP_TOLERANCE, out)
        }
        OracleCheck::Ordering => {
            let r = check_ordering_residual(&d);
            writeln!(out, "axis integral {:.3e}", r.axis)?;
            writeln!(
                out,
                "transverse {:.12} (closed form {:.12})",
                r.transverse, r.expected_transverse
            )?;
            verdict_code(r.passes(family), out)
        }
    }
}

fn cmd_latex(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let docs = read_documents(path)?;
    if let Some(d) = docs.iter().find(|d| d.schema_version != SCHEMA_VERSION) {
        return Err(Error::Contract(format!(
            "unsupported trace schema version {}",
            d.schema_version
        )));
    }
    let sections = docs
        .iter()
        .map(TraceDocument::latex_section)
        .collect::<Result<Vec<_>>>()?;
    write!(out, "{}", sections_document(&sections))?;
    Ok(EXIT_OK)
}
