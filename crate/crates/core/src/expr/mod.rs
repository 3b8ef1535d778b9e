//! Expression IR: sums of terms, each an exact coefficient times commuting
//! c-number atoms times an ordered string of field operators, integrated
//! over a set of spatial points.

mod canon;
mod concrete;
mod validate;

pub use canon::{canonicalize, canonicalize_with_stats, equal_canonical, CanonStats};
pub use concrete::{eval_epsilon, expand_concrete};
pub use validate::{validate, Violation};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coeff::Coefficient;

/// A tensor index: either a concrete component `1..=3` or a symbolic name.
///
/// Whether a symbolic index is free or summed is decided by its owning
/// [`Expr`]: declared free indices appear once per term, every other name is
/// a dummy and appears exactly twice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Index {
    Fixed(u8),
    Named(String),
}

impl Index {
    pub fn named(name: &str) -> Self {
        Index::Named(name.to_string())
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Index::Named(n) => Some(n),
            Index::Fixed(_) => None,
        }
    }

    pub fn fixed(&self) -> Option<u8> {
        match self {
            Index::Fixed(n) => Some(*n),
            Index::Named(_) => None,
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Fixed(n) => write!(f, "{n}"),
            Index::Named(s) => write!(f, "{s}"),
        }
    }
}

/// A spatial point label such as `x` or `y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point(pub String);

impl Point {
    pub fn new(name: &str) -> Self {
        Point(name.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldKind {
    E,
    B,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::E => "E",
            FieldKind::B => "B",
        })
    }
}

/// A field operator component at a point, with spatial derivatives taken at
/// that point. Field operators do not commute with each other.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldOp {
    pub kind: FieldKind,
    pub component: Index,
    pub point: Point,
    /// Derivative indices, kept sorted: partial derivatives commute.
    pub derivs: Vec<Index>,
}

impl FieldOp {
    pub fn new(kind: FieldKind, component: Index, point: Point) -> Self {
        FieldOp {
            kind,
            component,
            point,
            derivs: Vec::new(),
        }
    }

    pub fn with_derivs(mut self, mut derivs: Vec<Index>) -> Self {
        derivs.sort();
        self.derivs = derivs;
        self
    }

    /// True for the summed pattern `d_k F^k`.
    pub fn is_divergence(&self, free: &BTreeSet<String>) -> bool {
        match &self.component {
            Index::Named(n) if !free.contains(n) => {
                self.derivs.iter().any(|d| d == &self.component)
            }
            _ => false,
        }
    }
}

/// A commuting (c-number) factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// Levi-Civita symbol.
    Epsilon([Index; 3]),
    /// Kronecker delta.
    Kronecker([Index; 2]),
    /// Coordinate component `x^idx` of a point.
    Coord { point: Point, index: Index },
    /// `d/d from^a ... delta(from - to)`, derivatives taken with respect to `from`.
    Delta {
        from: Point,
        to: Point,
        derivs: Vec<Index>,
    },
}

impl Atom {
    pub fn indices(&self) -> Vec<&Index> {
        match self {
            Atom::Epsilon(ix) => ix.iter().collect(),
            Atom::Kronecker(ix) => ix.iter().collect(),
            Atom::Coord { index, .. } => vec![index],
            Atom::Delta { derivs, .. } => derivs.iter().collect(),
        }
    }

    pub fn points(&self) -> Vec<&Point> {
        match self {
            Atom::Coord { point, .. } => vec![point],
            Atom::Delta { from, to, .. } => vec![from, to],
            _ => Vec::new(),
        }
    }

    fn map_indices(&self, f: &mut impl FnMut(&Index) -> Index) -> Atom {
        match self {
            Atom::Epsilon([a, b, c]) => Atom::Epsilon([f(a), f(b), f(c)]),
            Atom::Kronecker([a, b]) => Atom::Kronecker([f(a), f(b)]),
            Atom::Coord { point, index } => Atom::Coord {
                point: point.clone(),
                index: f(index),
            },
            Atom::Delta { from, to, derivs } => {
                let mut d: Vec<Index> = derivs.iter().map(&mut *f).collect();
                d.sort();
                Atom::Delta {
                    from: from.clone(),
                    to: to.clone(),
                    derivs: d,
                }
            }
        }
    }

    fn map_points(&self, f: &mut impl FnMut(&Point) -> Point) -> Atom {
        match self {
            Atom::Coord { point, index } => Atom::Coord {
                point: f(point),
                index: index.clone(),
            },
            Atom::Delta { from, to, derivs } => Atom::Delta {
                from: f(from),
                to: f(to),
                derivs: derivs.clone(),
            },
            other => other.clone(),
        }
    }
}

/// One summand of an [`Expr`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Coefficient,
    pub cnumbers: Vec<Atom>,
    pub ops: Vec<FieldOp>,
    pub integrated: BTreeSet<Point>,
}

impl Term {
    pub fn new(coeff: Coefficient) -> Self {
        Term {
            coeff,
            cnumbers: Vec::new(),
            ops: Vec::new(),
            integrated: BTreeSet::new(),
        }
    }

    pub fn with_atom(mut self, a: Atom) -> Self {
        self.cnumbers.push(a);
        self
    }

    pub fn with_op(mut self, op: FieldOp) -> Self {
        self.ops.push(op);
        self
    }

    pub fn integrate(mut self, p: &str) -> Self {
        self.integrated.insert(Point::new(p));
        self
    }

    /// Occurrence count of every symbolic index name.
    pub fn index_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        self.for_each_index(|ix| {
            if let Index::Named(n) = ix {
                *counts.entry(n.clone()).or_insert(0) += 1;
            }
        });
        counts
    }

    pub fn for_each_index(&self, mut f: impl FnMut(&Index)) {
        for a in &self.cnumbers {
            for ix in a.indices() {
                f(ix);
            }
        }
        for op in &self.ops {
            f(&op.component);
            for d in &op.derivs {
                f(d);
            }
        }
    }

    /// Every point label mentioned by an atom or operator.
    pub fn referenced_points(&self) -> BTreeSet<Point> {
        let mut out = BTreeSet::new();
        for a in &self.cnumbers {
            out.extend(a.points().into_iter().cloned());
        }
        for op in &self.ops {
            out.insert(op.point.clone());
        }
        out
    }

    pub fn map_indices(&self, mut f: impl FnMut(&Index) -> Index) -> Term {
        Term {
            coeff: self.coeff,
            cnumbers: self
                .cnumbers
                .iter()
                .map(|a| a.map_indices(&mut f))
                .collect(),
            ops: self
                .ops
                .iter()
                .map(|op| {
                    let mut derivs: Vec<Index> = op.derivs.iter().map(&mut f).collect();
                    derivs.sort();
                    FieldOp {
                        kind: op.kind,
                        component: f(&op.component),
                        point: op.point.clone(),
                        derivs,
                    }
                })
                .collect(),
            integrated: self.integrated.clone(),
        }
    }

    pub fn rename_index(&self, from: &str, to: &Index) -> Term {
        self.map_indices(|ix| match ix {
            Index::Named(n) if n == from => to.clone(),
            other => other.clone(),
        })
    }

    /// Renames points everywhere, including the integration set.
    pub fn map_points(&self, mut f: impl FnMut(&Point) -> Point) -> Term {
        Term {
            coeff: self.coeff,
            cnumbers: self.cnumbers.iter().map(|a| a.map_points(&mut f)).collect(),
            ops: self
                .ops
                .iter()
                .map(|op| FieldOp {
                    point: f(&op.point),
                    ..op.clone()
                })
                .collect(),
            integrated: self.integrated.iter().map(&mut f).collect(),
        }
    }

    pub fn deltas(&self) -> impl Iterator<Item = &Atom> {
        self.cnumbers
            .iter()
            .filter(|a| matches!(a, Atom::Delta { .. }))
    }
}

/// A sum of terms together with its declared free indices and free points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Expr {
    pub terms: Vec<Term>,
    pub free_indices: BTreeSet<String>,
    pub free_points: BTreeSet<Point>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    /// Builds an expression, inferring free indices (names used once in a
    /// term) and free points (referenced but not integrated).
    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut free_indices = BTreeSet::new();
        let mut free_points = BTreeSet::new();
        for t in &terms {
            free_indices.extend(
                t.index_counts()
                    .into_iter()
                    .filter(|(_, c)| *c == 1)
                    .map(|(n, _)| n),
            );
            free_points.extend(
                t.referenced_points()
                    .into_iter()
                    .filter(|p| !t.integrated.contains(p)),
            );
        }
        Expr {
            terms,
            free_indices,
            free_points,
        }
    }

    pub fn with_free(terms: Vec<Term>, free_indices: &[&str], free_points: &[&str]) -> Self {
        Expr {
            terms,
            free_indices: free_indices.iter().map(|s| s.to_string()).collect(),
            free_points: free_points.iter().map(|s| Point::new(s)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn neg(&self) -> Expr {
        self.scale(Coefficient::from_int(-1))
    }

    pub fn scale(&self, c: Coefficient) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    ..t.clone()
                })
                .filter(|t| !t.coeff.is_zero())
                .collect(),
            ..self.clone()
        }
    }

    /// Concatenates terms; the result is not canonical.
    pub fn add(&self, other: &Expr) -> Expr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Expr {
            terms,
            free_indices: self
                .free_indices
                .union(&other.free_indices)
                .cloned()
                .collect(),
            free_points: self
                .free_points
                .union(&other.free_points)
                .cloned()
                .collect(),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    /// Same declarations, new terms.
    pub fn with_terms(&self, terms: Vec<Term>) -> Expr {
        Expr {
            terms,
            free_indices: self.free_indices.clone(),
            free_points: self.free_points.clone(),
        }
    }

    pub fn count_atoms(&self, pred: impl Fn(&Atom) -> bool) -> usize {
        self.terms
            .iter()
            .map(|t| t.cnumbers.iter().filter(|a| pred(a)).count())
            .sum()
    }

    pub fn has_field_derivatives(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.ops.iter().any(|op| !op.derivs.is_empty()))
    }

    /// Number of summed-divergence field atoms `d_k F^k`.
    pub fn divergence_atoms(&self) -> usize {
        self.terms
            .iter()
            .map(|t| {
                t.ops
                    .iter()
                    .filter(|op| op.is_divergence(&self.free_indices))
                    .count()
            })
            .sum()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::print_expr(self))
    }
}
