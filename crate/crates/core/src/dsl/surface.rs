//! Surface syntax tree and its lowering into [`Expr`].

use std::collections::{BTreeMap, BTreeSet};

use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr, FieldKind, FieldOp, Index, Point, Term};

/// Tree form of the text grammar. Products keep their factor order;
/// commutators may nest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Surface {
    Sum(Vec<Surface>),
    /// Ordered product; the empty product is `1`.
    Product(Vec<Surface>),
    Scaled(Coefficient, Box<Surface>),
    Comm(Box<Surface>, Box<Surface>),
    Integral(Point, Box<Surface>),
    /// Explicit summation binder; summation itself follows the repeated-index rule.
    SumOver(Index, Box<Surface>),
    Atom(Atom),
    Field(FieldOp),
    /// Field momentum component `P^i`.
    Momentum(Index),
    /// Field angular momentum component `J^i`.
    AngularMomentum(Index),
}

impl Surface {
    pub fn scalar(c: Coefficient) -> Surface {
        Surface::Scaled(c, Box::new(Surface::Product(Vec::new())))
    }

    pub fn comm(a: Surface, b: Surface) -> Surface {
        Surface::Comm(Box::new(a), Box::new(b))
    }

    pub fn scaled(c: Coefficient, s: Surface) -> Surface {
        Surface::Scaled(c, Box::new(s))
    }

    pub fn integral(p: &str, body: Surface) -> Surface {
        Surface::Integral(Point::new(p), Box::new(body))
    }

    pub fn neg(s: Surface) -> Surface {
        Surface::scaled(Coefficient::from_int(-1), s)
    }

    pub fn field(kind: FieldKind, component: Index, point: &str) -> Surface {
        Surface::Field(FieldOp::new(kind, component, Point::new(point)))
    }

    /// Number of `Comm` nodes anywhere in the tree.
    pub fn count_comms(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |s| {
            if matches!(s, Surface::Comm(..)) {
                n += 1;
            }
        });
        n
    }

    /// True when every commutator is between two bare field operators.
    pub fn only_primitive_comms(&self) -> bool {
        let mut ok = true;
        self.walk(&mut |s| {
            if let Surface::Comm(a, b) = s {
                ok &= a.as_field().is_some() && b.as_field().is_some();
            }
        });
        ok
    }

    pub(crate) fn as_field(&self) -> Option<&FieldOp> {
        match self {
            Surface::Field(f) => Some(f),
            Surface::Product(v) if v.len() == 1 => v[0].as_field(),
            _ => None,
        }
    }

    fn walk(&self, f: &mut impl FnMut(&Surface)) {
        f(self);
        match self {
            Surface::Sum(v) | Surface::Product(v) => v.iter().for_each(|c| c.walk(f)),
            Surface::Scaled(_, c) | Surface::Integral(_, c) | Surface::SumOver(_, c) => c.walk(f),
            Surface::Comm(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }

    /// Every index and point name used in the tree.
    pub fn names(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut idx = BTreeSet::new();
        let mut pts = BTreeSet::new();
        let add_ix = |ix: &Index, idx: &mut BTreeSet<String>| {
            if let Index::Named(n) = ix {
                idx.insert(n.clone());
            }
        };
        self.walk(&mut |s| match s {
            Surface::Atom(a) => {
                a.indices().into_iter().for_each(|i| add_ix(i, &mut idx));
                pts.extend(a.points().into_iter().map(|p| p.0.clone()));
            }
            Surface::Field(op) => {
                add_ix(&op.component, &mut idx);
                op.derivs.iter().for_each(|i| add_ix(i, &mut idx));
                pts.insert(op.point.0.clone());
            }
            Surface::Momentum(i) | Surface::AngularMomentum(i) | Surface::SumOver(i, _) => {
                add_ix(i, &mut idx)
            }
            Surface::Integral(p, _) => {
                pts.insert(p.0.clone());
            }
            _ => {}
        });
        (idx, pts)
    }

    pub fn mentions_point(&self, p: &str) -> bool {
        self.names().1.contains(p)
    }

    pub fn mentions_index(&self, i: &str) -> bool {
        self.names().0.contains(i)
    }
}

/// Momentum `P^i = eps0 eps(i,a,b) int(p) E^a(p) B^b(p)`.
pub fn momentum_definition(i: Index, fresh: &mut Fresh) -> Surface {
    let (a, b) = (fresh.index(), fresh.index());
    let p = fresh.point();
    Surface::scaled(
        Coefficient::eps0(),
        Surface::Product(vec![
            Surface::Atom(Atom::Epsilon([
                i,
                Index::Named(a.clone()),
                Index::Named(b.clone()),
            ])),
            Surface::integral(
                &p,
                Surface::Product(vec![
                    Surface::field(FieldKind::E, Index::Named(a), &p),
                    Surface::field(FieldKind::B, Index::Named(b), &p),
                ]),
            ),
        ]),
    )
}

/// Angular momentum in component form
/// `J^i = eps0 int(p) p^m [E^i(p) B^m(p) - E^m(p) B^i(p)]`.
pub fn angular_momentum_definition(i: Index, fresh: &mut Fresh) -> Surface {
    let m = Index::Named(fresh.index());
    let p = fresh.point();
    let coord = Surface::Atom(Atom::Coord {
        point: Point::new(&p),
        index: m.clone(),
    });
    Surface::scaled(
        Coefficient::eps0(),
        Surface::integral(
            &p,
            Surface::Product(vec![
                coord,
                Surface::Sum(vec![
                    Surface::Product(vec![
                        Surface::field(FieldKind::E, i.clone(), &p),
                        Surface::field(FieldKind::B, m.clone(), &p),
                    ]),
                    Surface::neg(Surface::Product(vec![
                        Surface::field(FieldKind::E, m, &p),
                        Surface::field(FieldKind::B, i, &p),
                    ])),
                ]),
            ]),
        ),
    )
}

/// Source of names that do not clash with anything already in use.
#[derive(Debug, Clone, Default)]
pub struct Fresh {
    used_indices: BTreeSet<String>,
    used_points: BTreeSet<String>,
    next_index: usize,
    next_point: usize,
}

impl Fresh {
    pub fn for_surface(s: &Surface) -> Fresh {
        let (used_indices, used_points) = s.names();
        Fresh {
            used_indices,
            used_points,
            ..Fresh::default()
        }
    }

    pub fn for_expr(e: &Expr) -> Fresh {
        let mut f = Fresh::default();
        f.used_indices.extend(e.free_indices.iter().cloned());
        for t in &e.terms {
            f.used_indices.extend(t.index_counts().into_keys());
            f.used_points
                .extend(t.referenced_points().into_iter().map(|p| p.0));
            f.used_points
                .extend(t.integrated.iter().map(|p| p.0.clone()));
        }
        f
    }

    pub fn index(&mut self) -> String {
        loop {
            self.next_index += 1;
            let n = format!("k{}", self.next_index);
            if self.used_indices.insert(n.clone()) {
                return n;
            }
        }
    }

    pub fn point(&mut self) -> String {
        loop {
            self.next_point += 1;
            let n = format!("z{}", self.next_point);
            if self.used_points.insert(n.clone()) {
                return n;
            }
        }
    }
}

/// A factor of an operator string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Factor {
    Field(FieldOp),
    /// A primitive commutator `[E, B]`; a c-number.
    Prim(FieldOp, FieldOp),
}

/// Flattened product: coefficient, integrals, c-numbers, ordered factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Mono {
    pub coeff: Coefficient,
    pub integrated: Vec<Point>,
    pub cnumbers: Vec<Atom>,
    pub factors: Vec<Factor>,
}

impl Mono {
    fn unit() -> Mono {
        Mono {
            coeff: Coefficient::one(),
            integrated: Vec::new(),
            cnumbers: Vec::new(),
            factors: Vec::new(),
        }
    }

    fn for_each_index(&self, f: &mut impl FnMut(&Index)) {
        let field = |op: &FieldOp, f: &mut dyn FnMut(&Index)| {
            f(&op.component);
            op.derivs.iter().for_each(&mut *f);
        };
        for a in &self.cnumbers {
            a.indices().into_iter().for_each(&mut *f);
        }
        for fac in &self.factors {
            match fac {
                Factor::Field(op) => field(op, f),
                Factor::Prim(a, b) => {
                    field(a, f);
                    field(b, f);
                }
            }
        }
    }

    fn index_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        self.for_each_index(&mut |ix| {
            if let Index::Named(n) = ix {
                *m.entry(n.clone()).or_insert(0) += 1;
            }
        });
        m
    }

    fn referenced_points(&self) -> BTreeSet<Point> {
        let mut out = BTreeSet::new();
        for a in &self.cnumbers {
            out.extend(a.points().into_iter().cloned());
        }
        for fac in &self.factors {
            match fac {
                Factor::Field(op) => {
                    out.insert(op.point.clone());
                }
                Factor::Prim(a, b) => {
                    out.insert(a.point.clone());
                    out.insert(b.point.clone());
                }
            }
        }
        out
    }

    fn to_term(&self) -> Term {
        Term {
            coeff: self.coeff,
            cnumbers: self.cnumbers.clone(),
            ops: Vec::new(),
            integrated: self.integrated.iter().cloned().collect(),
        }
    }

    fn rename_index(&self, from: &str, to: &str) -> Mono {
        let to = Index::named(to);
        let f = |ix: &Index| match ix {
            Index::Named(n) if n == from => to.clone(),
            other => other.clone(),
        };
        let op = |o: &FieldOp| FieldOp {
            component: f(&o.component),
            derivs: o.derivs.iter().map(f).collect(),
            ..o.clone()
        };
        let mut t = self.to_term();
        t = t.map_indices(f);
        Mono {
            coeff: self.coeff,
            integrated: self.integrated.clone(),
            cnumbers: t.cnumbers,
            factors: self
                .factors
                .iter()
                .map(|fac| match fac {
                    Factor::Field(o) => Factor::Field(op(o)),
                    Factor::Prim(a, b) => Factor::Prim(op(a), op(b)),
                })
                .collect(),
        }
    }

    fn rename_point(&self, from: &Point, to: &Point) -> Mono {
        let f = |p: &Point| if p == from { to.clone() } else { p.clone() };
        let op = |o: &FieldOp| FieldOp {
            point: f(&o.point),
            ..o.clone()
        };
        let t = self.to_term().map_points(f);
        Mono {
            coeff: self.coeff,
            integrated: self.integrated.iter().map(f).collect(),
            cnumbers: t.cnumbers,
            factors: self
                .factors
                .iter()
                .map(|fac| match fac {
                    Factor::Field(o) => Factor::Field(op(o)),
                    Factor::Prim(a, b) => Factor::Prim(op(a), op(b)),
                })
                .collect(),
        }
    }
}

/// Renames bound names so that `a` and `b` can be multiplied without capture.
fn rename_apart(a: &Mono, b: &Mono, fresh: &mut Fresh) -> (Mono, Mono) {
    let (mut a, mut b) = (a.clone(), b.clone());
    let a_pts = a.referenced_points();
    for p in b.integrated.clone() {
        if a_pts.contains(&p) || a.integrated.contains(&p) {
            b = b.rename_point(&p, &Point(fresh.point()));
        }
    }
    let b_pts = b.referenced_points();
    for p in a.integrated.clone() {
        if b_pts.contains(&p) {
            a = a.rename_point(&p, &Point(fresh.point()));
        }
    }
    let a_counts = a.index_counts();
    for (n, c) in b.index_counts() {
        if c == 2 && a_counts.contains_key(&n) {
            b = b.rename_index(&n, &fresh.index());
        }
    }
    let b_counts = b.index_counts();
    for (n, c) in a.index_counts() {
        if c == 2 && b_counts.contains_key(&n) {
            a = a.rename_index(&n, &fresh.index());
        }
    }
    (a, b)
}

fn multiply(a: &Mono, b: &Mono, fresh: &mut Fresh) -> Mono {
    let (a, b) = rename_apart(a, b, fresh);
    let mut out = a;
    out.coeff = out.coeff * b.coeff;
    out.integrated.extend(b.integrated);
    out.cnumbers.extend(b.cnumbers);
    out.factors.extend(b.factors);
    out
}

/// Commutator of two operator strings by the fixed Leibniz forms
/// `[AB, C] = A[B, C] + [A, C]B` and `[A, CD] = C[A, D] + [A, C]D`.
pub(crate) fn leibniz(a: &[FieldOp], c: &[FieldOp]) -> Vec<(i64, Vec<Factor>)> {
    if a.is_empty() || c.is_empty() {
        return Vec::new();
    }
    let fields = |s: &[FieldOp]| s.iter().cloned().map(Factor::Field).collect::<Vec<_>>();
    let mut out = Vec::new();
    if a.len() > 1 {
        let (head, rest) = (&a[..1], &a[1..]);
        for (s, seq) in leibniz(rest, c) {
            let mut v = fields(head);
            v.extend(seq);
            out.push((s, v));
        }
        for (s, mut seq) in leibniz(head, c) {
            seq.extend(fields(rest));
            out.push((s, seq));
        }
    } else if c.len() > 1 {
        let (head, rest) = (&c[..1], &c[1..]);
        for (s, seq) in leibniz(a, rest) {
            let mut v = fields(head);
            v.extend(seq);
            out.push((s, v));
        }
        for (s, mut seq) in leibniz(a, head) {
            seq.extend(fields(rest));
            out.push((s, seq));
        }
    } else {
        let (x, y) = (&a[0], &c[0]);
        match (x.kind, y.kind) {
            (FieldKind::E, FieldKind::B) => out.push((1, vec![Factor::Prim(x.clone(), y.clone())])),
            (FieldKind::B, FieldKind::E) => {
                out.push((-1, vec![Factor::Prim(y.clone(), x.clone())]))
            }
            _ => {}
        }
    }
    out
}

fn commute(a: &Mono, b: &Mono, fresh: &mut Fresh) -> Vec<Mono> {
    let (a, b) = rename_apart(a, b, fresh);
    let split = |m: &Mono| {
        let mut ops = Vec::new();
        let mut prims = Vec::new();
        for f in &m.factors {
            match f {
                Factor::Field(op) => ops.push(op.clone()),
                p @ Factor::Prim(..) => prims.push(p.clone()),
            }
        }
        (ops, prims)
    };
    let (ops_a, prims_a) = split(&a);
    let (ops_b, prims_b) = split(&b);
    let mut integrated = a.integrated.clone();
    integrated.extend(b.integrated.iter().cloned());
    let mut cnumbers = a.cnumbers.clone();
    cnumbers.extend(b.cnumbers.iter().cloned());
    leibniz(&ops_a, &ops_b)
        .into_iter()
        .map(|(sign, seq)| {
            let mut factors = prims_a.clone();
            factors.extend(prims_b.iter().cloned());
            factors.extend(seq);
            Mono {
                coeff: a.coeff * b.coeff * Coefficient::from_int(sign),
                integrated: integrated.clone(),
                cnumbers: cnumbers.clone(),
                factors,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CommMode {
    /// Expand every commutator down to primitive field pairs.
    Expand,
    /// Accept only primitive commutators.
    Primitive,
}

pub(crate) fn to_monos(s: &Surface, fresh: &mut Fresh, mode: CommMode) -> Result<Vec<Mono>> {
    Ok(match s {
        Surface::Sum(v) => {
            let mut out = Vec::new();
            for c in v {
                out.extend(to_monos(c, fresh, mode)?);
            }
            out
        }
        Surface::Product(v) => {
            let mut acc = vec![Mono::unit()];
            for c in v {
                let cm = to_monos(c, fresh, mode)?;
                let mut next = Vec::with_capacity(acc.len() * cm.len());
                for a in &acc {
                    for b in &cm {
                        next.push(multiply(a, b, fresh));
                    }
                }
                acc = next;
            }
            acc
        }
        Surface::Scaled(c, inner) => to_monos(inner, fresh, mode)?
            .into_iter()
            .map(|mut m| {
                m.coeff = m.coeff * *c;
                m
            })
            .filter(|m| !m.coeff.is_zero())
            .collect(),
        Surface::Integral(p, inner) => {
            let mut out = Vec::new();
            for mut m in to_monos(inner, fresh, mode)? {
                if m.integrated.contains(p) {
                    return Err(Error::Ambiguous(p.0.clone()));
                }
                if !m.referenced_points().contains(p) {
                    return Err(Error::Unbound(p.0.clone()));
                }
                m.integrated.push(p.clone());
                out.push(m);
            }
            out
        }
        Surface::SumOver(ix, inner) => {
            let ms = to_monos(inner, fresh, mode)?;
            if let Index::Named(n) = ix {
                for m in &ms {
                    match m.index_counts().get(n).copied().unwrap_or(0) {
                        2 => {}
                        0 => return Err(Error::Unbound(n.clone())),
                        _ => return Err(Error::Ambiguous(n.clone())),
                    }
                }
            }
            ms
        }
        Surface::Atom(a) => vec![Mono {
            cnumbers: vec![a.clone()],
            ..Mono::unit()
        }],
        Surface::Field(op) => vec![Mono {
            factors: vec![Factor::Field(op.clone())],
            ..Mono::unit()
        }],
        Surface::Momentum(i) => {
            let def = momentum_definition(i.clone(), fresh);
            to_monos(&def, fresh, mode)?
        }
        Surface::AngularMomentum(i) => {
            let def = angular_momentum_definition(i.clone(), fresh);
            to_monos(&def, fresh, mode)?
        }
        Surface::Comm(a, b) => match mode {
            CommMode::Expand => {
                let ma = to_monos(a, fresh, mode)?;
                let mb = to_monos(b, fresh, mode)?;
                let mut out = Vec::new();
                for x in &ma {
                    for y in &mb {
                        out.extend(commute(x, y, fresh));
                    }
                }
                out
            }
            CommMode::Primitive => match (a.as_field(), b.as_field()) {
                (Some(x), Some(y)) => vec![Mono {
                    factors: vec![Factor::Prim(x.clone(), y.clone())],
                    ..Mono::unit()
                }],
                _ => return Err(Error::NonPrimitiveCommutator(crate::dsl::print_surface(s))),
            },
        },
    })
}

pub(crate) fn monos_to_surface(ms: &[Mono]) -> Surface {
    if ms.is_empty() {
        return Surface::Sum(Vec::new());
    }
    let parts = ms
        .iter()
        .map(|m| {
            let mut factors: Vec<Surface> = m.cnumbers.iter().cloned().map(Surface::Atom).collect();
            for f in &m.factors {
                factors.push(match f {
                    Factor::Field(op) => Surface::Field(op.clone()),
                    Factor::Prim(a, b) => {
                        Surface::comm(Surface::Field(a.clone()), Surface::Field(b.clone()))
                    }
                });
            }
            let mut body = Surface::Product(factors);
            for p in m.integrated.iter().rev() {
                body = Surface::Integral(p.clone(), Box::new(body));
            }
            if m.coeff == Coefficient::one() {
                body
            } else {
                Surface::scaled(m.coeff, body)
            }
        })
        .collect::<Vec<_>>();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        Surface::Sum(parts)
    }
}

/// Lowers a commutator-free tree into an expression.
pub fn lower(s: &Surface) -> Result<Expr> {
    lower_with(s, &mut |_, _, _| {
        Err(Error::NonPrimitiveCommutator("commutator".into()))
    })
}

/// Lowers a tree whose commutators are all primitive, replacing each one by
/// the c-number `value(e_op, b_op, fresh)`.
pub(crate) fn lower_with(
    s: &Surface,
    value: &mut dyn FnMut(&FieldOp, &FieldOp, &mut Fresh) -> Result<Option<Term>>,
) -> Result<Expr> {
    let mut fresh = Fresh::for_surface(s);
    let monos = to_monos(s, &mut fresh, CommMode::Primitive)?;
    let mut terms = Vec::with_capacity(monos.len());
    'mono: for m in monos {
        let mut t = m.to_term();
        for f in &m.factors {
            match f {
                Factor::Field(op) => t.ops.push(op.clone()),
                Factor::Prim(a, b) => match value(a, b, &mut fresh)? {
                    Some(v) => {
                        t.coeff = t.coeff * v.coeff;
                        t.cnumbers.extend(v.cnumbers);
                    }
                    None => continue 'mono,
                },
            }
        }
        if !t.coeff.is_zero() {
            terms.push(t);
        }
    }
    Ok(Expr::from_terms(terms))
}

/// Rebuilds a tree from an expression, one product per term.
pub fn from_expr(e: &Expr) -> Surface {
    let ms: Vec<Mono> = e
        .terms
        .iter()
        .map(|t| Mono {
            coeff: t.coeff,
            integrated: t.integrated.iter().cloned().collect(),
            cnumbers: t.cnumbers.clone(),
            factors: t.ops.iter().cloned().map(Factor::Field).collect(),
        })
        .collect();
    monos_to_surface(&ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(kind: FieldKind, i: &str, p: &str) -> FieldOp {
        FieldOp::new(kind, Index::named(i), Point::new(p))
    }

    #[test]
    fn four_operator_leibniz_order() {
        use FieldKind::{B, E};
        let a = [f(E, "k", "x"), f(B, "l", "x")];
        let c = [f(E, "m", "y"), f(B, "n", "y")];
        let got = leibniz(&a, &c);
        assert_eq!(got.len(), 2);
        // -E^k(x) [E^m(y), B^l(x)] B^n(y)
        assert_eq!(
            got[0],
            (
                -1,
                vec![
                    Factor::Field(f(E, "k", "x")),
                    Factor::Prim(f(E, "m", "y"), f(B, "l", "x")),
                    Factor::Field(f(B, "n", "y")),
                ]
            )
        );
        // E^m(y) [E^k(x), B^n(y)] B^l(x)
        assert_eq!(
            got[1],
            (
                1,
                vec![
                    Factor::Field(f(E, "m", "y")),
                    Factor::Prim(f(E, "k", "x"), f(B, "n", "y")),
                    Factor::Field(f(B, "l", "x")),
                ]
            )
        );
    }

    #[test]
    fn like_fields_commute() {
        use FieldKind::{B, E};
        assert!(leibniz(&[f(E, "i", "x")], &[f(E, "j", "y")]).is_empty());
        assert!(leibniz(&[f(B, "i", "x")], &[f(B, "j", "y")]).is_empty());
    }

    #[test]
    fn product_renames_captured_integrals() {
        let s = Surface::Product(vec![
            Surface::integral("x", Surface::field(FieldKind::E, Index::named("i"), "x")),
            Surface::integral("x", Surface::field(FieldKind::B, Index::named("j"), "x")),
        ]);
        let e = lower(&s).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.terms[0].integrated.len(), 2);
        assert!(e.free_points.is_empty());
    }

    #[test]
    fn unreferenced_integral_is_unbound() {
        let s = Surface::integral("y", Surface::field(FieldKind::E, Index::named("i"), "x"));
        assert!(matches!(lower(&s), Err(Error::Unbound(p)) if p == "y"));
    }
}
