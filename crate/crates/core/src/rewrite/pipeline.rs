use serde::{Deserialize, Serialize};

use super::divergence::divergence_extract;
use super::rules::*;
use super::{AxiomTable, ConstraintSet, Rule};
use crate::dsl::{print_expr, print_surface, Surface};
use crate::error::{Error, Result};
use crate::expr::{
    canonicalize_with_stats, equal_canonical, expand_concrete, Atom, CanonStats, Expr, Index,
};

/// Index mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Summed indices stay symbolic; only syntactic divergences are recognized.
    Symbolic,
    /// Summed indices are expanded over components and divergences extracted.
    Concrete,
}

/// Order of the two contraction rules inside a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    EpsilonFirst,
    DeltaFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub mode: Mode,
    pub schedule: Schedule,
    pub max_passes: usize,
}

impl Options {
    pub fn symbolic() -> Self {
        Options {
            mode: Mode::Symbolic,
            schedule: Schedule::EpsilonFirst,
            max_passes: 16,
        }
    }

    pub fn concrete() -> Self {
        Options {
            mode: Mode::Concrete,
            ..Options::symbolic()
        }
    }
}

impl Default for Options {
    fn default() -> Self {
        Options::symbolic()
    }
}

/// Value after a step: a tree while commutators remain, an expression after.
#[derive(Debug, Clone, PartialEq)]
pub enum StepValue {
    Surface(Surface),
    Expr(Expr),
}

impl StepValue {
    pub fn text(&self) -> String {
        match self {
            StepValue::Surface(s) => print_surface(s),
            StepValue::Expr(e) => print_expr(e),
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            StepValue::Expr(e) => Some(e),
            StepValue::Surface(_) => None,
        }
    }

    pub fn as_surface(&self) -> Option<&Surface> {
        match self {
            StepValue::Surface(s) => Some(s),
            StepValue::Expr(_) => None,
        }
    }

    fn summary(&self) -> String {
        match self {
            StepValue::Surface(s) => format!("tree with {} commutator(s)", s.count_comms()),
            StepValue::Expr(e) => format!("{} term(s)", e.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub rule: Rule,
    pub anchor: String,
    pub before: String,
    pub after: StepValue,
    /// Canonicalization bookkeeping, for canonicalize steps.
    pub stats: Option<CanonStats>,
    /// The extracted part, for divergence_extract steps.
    pub divergence_part: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteTrace {
    pub initial: Surface,
    pub steps: Vec<Step>,
    pub assumptions: Vec<String>,
    pub notes: Vec<String>,
}

impl RewriteTrace {
    pub fn final_value(&self) -> StepValue {
        self.steps
            .last()
            .map(|s| s.after.clone())
            .unwrap_or_else(|| StepValue::Surface(self.initial.clone()))
    }

    pub fn steps_of(&self, rule: Rule) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(move |s| s.rule == rule)
    }

    pub fn canon_totals(&self) -> CanonStats {
        let mut t = CanonStats::default();
        for s in self.steps_of(Rule::Canonicalize) {
            if let Some(st) = s.stats {
                t.absorb(st);
            }
        }
        t
    }

    fn assume(&mut self, a: &str) {
        if !self.assumptions.iter().any(|x| x == a) {
            self.assumptions.push(a.to_string());
        }
    }

    fn note(&mut self, n: String) {
        if !self.notes.contains(&n) {
            self.notes.push(n);
        }
    }
}

pub const SURFACE_TERMS: &str =
    "surface terms from integration by parts are discarded (fields decay at infinity)";
pub const NO_ELECTRIC_CHARGE: &str = "div E = 0 (no electric charge density)";
pub const NO_MAGNETIC_CHARGE: &str = "div B = 0 (no magnetic charge density)";

/// Side results of one rule application.
#[derive(Debug, Default)]
pub struct Extras {
    pub stats: Option<CanonStats>,
    pub divergence_part: Option<Expr>,
    pub skipped_multi_delta: usize,
}

/// Applies one named rule. This is the single entry point used both by the
/// driver and by replay.
pub fn apply_rule(
    rule: Rule,
    input: &StepValue,
    axioms: &AxiomTable,
    constraints: ConstraintSet,
) -> Result<(StepValue, Extras)> {
    let mut extras = Extras::default();
    let need_expr = || {
        input
            .as_expr()
            .ok_or_else(|| Error::Contract(format!("{} expects an expression", rule.name())))
    };
    let out = match rule {
        Rule::ExpandCommutators => {
            let s = input
                .as_surface()
                .ok_or_else(|| Error::Contract("expand_commutators expects a tree".into()))?;
            StepValue::Surface(expand_commutators(s)?)
        }
        Rule::ApplyAxioms => {
            let s = input
                .as_surface()
                .ok_or_else(|| Error::Contract("apply_axioms expects a tree".into()))?;
            StepValue::Expr(apply_axioms(s, axioms)?)
        }
        Rule::Canonicalize => {
            let (e, st) = canonicalize_with_stats(need_expr()?);
            extras.stats = Some(st);
            StepValue::Expr(e)
        }
        Rule::ContractEpsilonPairs => StepValue::Expr(contract_epsilon_pairs(need_expr()?)),
        Rule::ContractDeltas => StepValue::Expr(contract_deltas(need_expr()?)),
        Rule::IntegrateOutDelta => {
            let (e, skipped) = integrate_out_single_deltas(need_expr()?)?;
            extras.skipped_multi_delta = skipped;
            StepValue::Expr(e)
        }
        Rule::ExpandConcrete => StepValue::Expr(expand_keeping_divergences(need_expr()?)),
        Rule::DivergenceExtract => {
            let (rest, div) = divergence_extract(need_expr()?);
            let whole = rest.add(&div);
            extras.divergence_part = Some(div);
            StepValue::Expr(whole)
        }
        Rule::ApplyFieldConstraints => {
            StepValue::Expr(apply_field_constraints(need_expr()?, constraints))
        }
    };
    Ok((out, extras))
}

/// Component expansion that leaves already-extracted divergences summed.
fn expand_keeping_divergences(e: &Expr) -> Expr {
    let (div, rest): (Vec<_>, Vec<_>) = e
        .terms
        .iter()
        .cloned()
        .partition(|t| t.ops.iter().any(|op| op.is_divergence(&e.free_indices)));
    let mut out = expand_concrete(&e.with_terms(rest));
    out.terms.extend(div);
    out
}

/// Counts that each contraction rule must strictly lower when it fires.
fn epsilon_pairs(e: &Expr) -> usize {
    e.terms
        .iter()
        .map(|t| {
            let n = t
                .cnumbers
                .iter()
                .filter(|a| matches!(a, Atom::Epsilon(_)))
                .count();
            n * n.saturating_sub(1) / 2
        })
        .sum()
}

fn kroneckers(e: &Expr) -> usize {
    e.terms
        .iter()
        .map(|t| {
            let counts = t.index_counts();
            t.cnumbers
                .iter()
                .filter(|a| match a {
                    Atom::Kronecker(ix) => {
                        ix.iter().any(|i| match i {
                            Index::Fixed(_) => true,
                            Index::Named(n) => {
                                !e.free_indices.contains(n) && counts.get(n) == Some(&2)
                            }
                        }) || ix.iter().all(|i| matches!(i, Index::Fixed(_)))
                    }
                    _ => false,
                })
                .count()
        })
        .sum()
}

fn single_deltas(e: &Expr) -> usize {
    e.terms
        .iter()
        .filter(|t| t.deltas().count() == 1)
        .filter(|t| {
            t.deltas()
                .any(|d| d.points().iter().any(|p| t.integrated.contains(*p)))
        })
        .count()
}

/// Runs the full rule sequence to a fixpoint, recording every step that
/// changes the value.
pub fn simplify_fixpoint(
    input: &Surface,
    axioms: &AxiomTable,
    constraints: ConstraintSet,
    opts: &Options,
) -> Result<(Expr, RewriteTrace)> {
    let mut trace = RewriteTrace {
        initial: input.clone(),
        steps: Vec::new(),
        assumptions: Vec::new(),
        notes: Vec::new(),
    };
    let mut cur = StepValue::Surface(input.clone());
    for rule in [Rule::ExpandCommutators, Rule::ApplyAxioms] {
        cur = fire(rule, &cur, axioms, constraints, &mut trace, true)?;
    }
    let contractions = match opts.schedule {
        Schedule::EpsilonFirst => [Rule::ContractEpsilonPairs, Rule::ContractDeltas],
        Schedule::DeltaFirst => [Rule::ContractDeltas, Rule::ContractEpsilonPairs],
    };
    let mut sequence = vec![Rule::Canonicalize, contractions[0], contractions[1]];
    sequence.extend([
        Rule::Canonicalize,
        Rule::IntegrateOutDelta,
        Rule::Canonicalize,
    ]);
    if opts.mode == Mode::Concrete {
        sequence.extend([
            Rule::ExpandConcrete,
            Rule::Canonicalize,
            Rule::DivergenceExtract,
        ]);
    }
    sequence.extend([Rule::ApplyFieldConstraints, Rule::Canonicalize]);

    for _pass in 0..opts.max_passes {
        let start = cur.clone();
        for &rule in &sequence {
            let before = cur.as_expr().expect("lowered").clone();
            cur = fire(rule, &cur, axioms, constraints, &mut trace, false)?;
            let after = cur.as_expr().expect("lowered");
            let (m0, m1) = match rule {
                Rule::ContractEpsilonPairs => (epsilon_pairs(&before), epsilon_pairs(after)),
                Rule::ContractDeltas => (kroneckers(&before), kroneckers(after)),
                Rule::IntegrateOutDelta => (single_deltas(&before), single_deltas(after)),
                _ => continue,
            };
            if after != &before && m1 >= m0 {
                return Err(Error::NonTermination(trace.steps.len()));
            }
        }
        if cur == start {
            let e = cur.as_expr().expect("lowered").clone();
            return Ok((e, trace));
        }
    }
    Err(Error::NonTermination(opts.max_passes))
}

fn fire(
    rule: Rule,
    cur: &StepValue,
    axioms: &AxiomTable,
    constraints: ConstraintSet,
    trace: &mut RewriteTrace,
    always: bool,
) -> Result<StepValue> {
    let (next, extras) = apply_rule(rule, cur, axioms, constraints)?;
    if extras.skipped_multi_delta > 0 {
        trace.note(format!(
            "{} term(s) hold a product of two delta functions; the square of a delta \
             function is not defined symbolically, so they are left for the numeric oracle",
            extras.skipped_multi_delta
        ));
    }
    if !always && next == *cur {
        return Ok(next);
    }
    match rule {
        Rule::IntegrateOutDelta => {
            let had_derivs = cur.as_expr().is_some_and(|e| {
                e.terms.iter().any(|t| {
                    t.deltas().count() == 1
                        && t.deltas()
                            .any(|d| matches!(d, Atom::Delta { derivs, .. } if !derivs.is_empty()))
                })
            });
            if had_derivs {
                trace.assume(SURFACE_TERMS);
            }
        }
        Rule::ApplyFieldConstraints => {
            if let (Some(a), Some(b)) = (cur.as_expr(), next.as_expr()) {
                let used = |kind| {
                    a.terms
                        .iter()
                        .filter(|t| {
                            t.ops
                                .iter()
                                .any(|op| op.kind == kind && op.is_divergence(&a.free_indices))
                        })
                        .count()
                        > b.terms
                            .iter()
                            .filter(|t| {
                                t.ops
                                    .iter()
                                    .any(|op| op.kind == kind && op.is_divergence(&b.free_indices))
                            })
                            .count()
                };
                if used(crate::expr::FieldKind::E) {
                    trace.assume(NO_ELECTRIC_CHARGE);
                }
                if used(crate::expr::FieldKind::B) {
                    trace.assume(NO_MAGNETIC_CHARGE);
                }
            }
        }
        _ => {}
    }
    trace.steps.push(Step {
        rule,
        anchor: rule.anchor().to_string(),
        before: cur.summary(),
        after: next.clone(),
        stats: extras.stats,
        divergence_part: extras.divergence_part,
    });
    Ok(next)
}

/// Re-applies each recorded rule to the previous recorded value and checks
/// that it reproduces the recorded result. Returns the index of the first
/// step that fails to reproduce, if any.
pub fn replay(
    initial: &Surface,
    steps: &[(Rule, StepValue)],
    axioms: &AxiomTable,
    constraints: ConstraintSet,
) -> Result<Option<usize>> {
    let mut cur = StepValue::Surface(initial.clone());
    for (n, (rule, recorded)) in steps.iter().enumerate() {
        let (got, _) = apply_rule(*rule, &cur, axioms, constraints)?;
        let same = match (&got, recorded) {
            (StepValue::Expr(a), StepValue::Expr(b)) => equal_canonical(a, b),
            (StepValue::Surface(a), StepValue::Surface(b)) => {
                let a = apply_axioms(a, axioms)?;
                let b = apply_axioms(b, axioms)?;
                equal_canonical(&a, &b)
            }
            _ => false,
        };
        if !same {
            return Ok(Some(n));
        }
        cur = recorded.clone();
    }
    Ok(None)
}
