//! Rule engine: commutator expansion, axiom substitution, index contraction,
//! delta elimination, divergence handling and the fixpoint driver.

mod divergence;
mod pipeline;
mod rules;

pub use divergence::divergence_extract;
pub use pipeline::{
    apply_rule, replay, simplify_fixpoint, Mode, Options, RewriteTrace, Schedule, Step, StepValue,
};
pub use rules::{
    apply_axioms, apply_field_constraints, contract_deltas, contract_epsilon_pairs,
    expand_commutators, integrate_out_delta, integrate_out_single_deltas,
};

use serde::{Deserialize, Serialize};

use crate::coeff::Coefficient;
use crate::dsl::Fresh;
use crate::expr::{Atom, FieldKind, FieldOp, Index, Term};

/// Equal-time field commutators. Only the electric-magnetic pair is stored;
/// the reversed pair follows by antisymmetry and like pairs vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxiomTable {
    /// Prefactor of `eps(i,j,k) d/dp^k delta(p - q)` in `[E^i(p), B^j(q)]`.
    pub eb_prefactor: Coefficient,
}

impl Default for AxiomTable {
    fn default() -> Self {
        AxiomTable {
            eb_prefactor: Coefficient::field_commutator_prefactor(),
        }
    }
}

impl AxiomTable {
    /// C-number value of `[a, b]`, or `None` when it vanishes. Derivatives on
    /// the operators move onto the delta function.
    pub fn primitive(&self, a: &FieldOp, b: &FieldOp, fresh: &mut Fresh) -> Option<Term> {
        let (e, m, sign) = match (a.kind, b.kind) {
            (FieldKind::E, FieldKind::B) => (a, b, 1),
            (FieldKind::B, FieldKind::E) => (b, a, -1),
            _ => return None,
        };
        let k = Index::Named(fresh.index());
        let mut derivs = vec![k.clone()];
        derivs.extend(e.derivs.iter().cloned());
        derivs.extend(m.derivs.iter().cloned());
        derivs.sort();
        // d/dq delta(p - q) = -d/dp delta(p - q)
        let flips = if m.derivs.len() % 2 == 1 { -1 } else { 1 };
        Some(
            Term::new(self.eb_prefactor * Coefficient::from_int(sign * flips))
                .with_atom(Atom::Epsilon([e.component.clone(), m.component.clone(), k]))
                .with_atom(Atom::Delta {
                    from: e.point.clone(),
                    to: m.point.clone(),
                    derivs,
                }),
        )
    }
}

/// Which divergence-free conditions may be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub div_e_zero: bool,
    pub div_b_zero: bool,
}

impl ConstraintSet {
    /// Charge-free field: both divergences vanish.
    pub fn charge_free() -> Self {
        ConstraintSet {
            div_e_zero: true,
            div_b_zero: true,
        }
    }

    /// No constraint may be used.
    pub fn none() -> Self {
        ConstraintSet {
            div_e_zero: false,
            div_b_zero: false,
        }
    }

    pub fn kills(&self, kind: FieldKind) -> bool {
        match kind {
            FieldKind::E => self.div_e_zero,
            FieldKind::B => self.div_b_zero,
        }
    }
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet::charge_free()
    }
}

/// Named rewrite rules; the names are stable and appear in serialized traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    ExpandCommutators,
    ApplyAxioms,
    Canonicalize,
    ContractEpsilonPairs,
    ContractDeltas,
    IntegrateOutDelta,
    ExpandConcrete,
    DivergenceExtract,
    ApplyFieldConstraints,
}

impl Rule {
    pub const ALL: [Rule; 9] = [
        Rule::ExpandCommutators,
        Rule::ApplyAxioms,
        Rule::Canonicalize,
        Rule::ContractEpsilonPairs,
        Rule::ContractDeltas,
        Rule::IntegrateOutDelta,
        Rule::ExpandConcrete,
        Rule::DivergenceExtract,
        Rule::ApplyFieldConstraints,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::ExpandCommutators => "expand_commutators",
            Rule::ApplyAxioms => "apply_axioms",
            Rule::Canonicalize => "canonicalize",
            Rule::ContractEpsilonPairs => "contract_epsilon_pairs",
            Rule::ContractDeltas => "contract_deltas",
            Rule::IntegrateOutDelta => "integrate_out_delta",
            Rule::ExpandConcrete => "expand_concrete",
            Rule::DivergenceExtract => "divergence_extract",
            Rule::ApplyFieldConstraints => "apply_field_constraints",
        }
    }

    /// Where the step sits in the hand derivation.
    pub fn anchor(self) -> &'static str {
        match self {
            Rule::ExpandCommutators => "expansion of the commutator in the integrand",
            Rule::ApplyAxioms => "field commutator axiom; all other commutators are zero",
            Rule::Canonicalize => "relabelling of summed indices and integration points",
            Rule::ContractEpsilonPairs => {
                "summing over the repeated indices of two Levi-Civita symbols"
            }
            Rule::ContractDeltas => "Kronecker delta substitution",
            Rule::IntegrateOutDelta => "integration by parts against the delta function",
            Rule::ExpandConcrete => "expansion into Cartesian components",
            Rule::DivergenceExtract => "terms sharing a cofactor combine into a divergence",
            Rule::ApplyFieldConstraints => "no electric or magnetic charge densities",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{canonicalize, expand_concrete, Expr, Point};

    #[test]
    fn eb_axiom_at_one_two() {
        let a = FieldOp::new(FieldKind::E, Index::Fixed(1), Point::new("x"));
        let b = FieldOp::new(FieldKind::B, Index::Fixed(2), Point::new("y"));
        let t = AxiomTable::default()
            .primitive(&a, &b, &mut Fresh::default())
            .unwrap();
        let e = canonicalize(&expand_concrete(&Expr::from_terms(vec![t])));
        let want = crate::dsl::parse_expr("-I*hbar*eps0^-1*ddelta(x,y)d[x,3]").unwrap();
        assert!(crate::expr::equal_canonical(&e, &want), "{e}");
    }

    #[test]
    fn be_axiom_by_antisymmetry() {
        // [B^l(x), E^m(y)] = +(I hbar/eps0) eps(m,l,k) d/dy^k delta(y - x)
        let a = FieldOp::new(FieldKind::B, Index::named("l"), Point::new("x"));
        let b = FieldOp::new(FieldKind::E, Index::named("m"), Point::new("y"));
        let t = AxiomTable::default()
            .primitive(&a, &b, &mut Fresh::default())
            .unwrap();
        let got = Expr::with_free(vec![t], &["l", "m"], &["x", "y"]);
        let mut want =
            crate::dsl::parse_expr("I*hbar*eps0^-1*eps[m,l,k]*ddelta(y,x)d[y,k]").unwrap();
        want.free_indices = got.free_indices.clone();
        assert!(crate::expr::equal_canonical(&got, &want), "{got}");
    }

    #[test]
    fn like_fields_commute() {
        let a = FieldOp::new(FieldKind::E, Index::named("i"), Point::new("x"));
        let b = FieldOp::new(FieldKind::E, Index::named("j"), Point::new("y"));
        assert!(AxiomTable::default()
            .primitive(&a, &b, &mut Fresh::default())
            .is_none());
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(Rule::from_name(r.name()), Some(r));
        }
    }
}
