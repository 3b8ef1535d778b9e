//! Canonical form.
//!
//! Every term is encoded under each admissible renaming of its dummy indices
//! and integrated points; the lexicographically smallest encoding is the
//! representative. Field operators keep their stored order throughout. A term
//! whose smallest encoding is reachable with both signs is odd under one of
//! its own symmetries and is dropped as zero.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::Rational64;
use num_traits::Zero;

use super::{Atom, Expr, FieldKind, FieldOp, Index, Point, Term};
use crate::coeff::{Coefficient, Units};

const FREE_BASE: u32 = 10;
const BOUND_BASE: u32 = 1000;
/// Above this many dummies in one term the exhaustive search is replaced by
/// first-use naming.
const MAX_EXHAUSTIVE_DUMMIES: usize = 8;

const DUMMY_NAMES: &[&str] = &[
    "i", "j", "k", "l", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "a", "b", "c", "d", "e",
    "f", "g", "h",
];

/// Bookkeeping from one canonicalization pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CanonStats {
    /// Groups of terms that summed to zero only after exchanging integrated points.
    pub relabel_cancellations: usize,
    /// Groups of like terms that summed to zero without a point exchange.
    pub plain_cancellations: usize,
    /// Terms dropped because a dummy or point exchange maps them to their negative.
    pub symmetric_zeroes: usize,
    /// Terms dropped for a repeated index on a Levi-Civita symbol.
    pub epsilon_zeroes: usize,
    /// Surviving terms whose canonical form needed integrated points exchanged.
    pub point_exchanges: usize,
}

impl CanonStats {
    pub fn absorb(&mut self, o: CanonStats) {
        self.relabel_cancellations += o.relabel_cancellations;
        self.plain_cancellations += o.plain_cancellations;
        self.symmetric_zeroes += o.symmetric_zeroes;
        self.epsilon_zeroes += o.epsilon_zeroes;
        self.point_exchanges += o.point_exchanges;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum CAtom {
    Epsilon([u32; 3]),
    Kronecker([u32; 2]),
    Coord(u32, u32),
    Delta(u32, u32, Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct COp {
    kind: u8,
    component: u32,
    point: u32,
    derivs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    bound_points: usize,
    cnumbers: Vec<CAtom>,
    ops: Vec<COp>,
}

/// Names shared by every term of one expression.
struct Frame {
    free_index_rank: BTreeMap<String, u32>,
    free_index_names: Vec<String>,
    free_point_rank: BTreeMap<Point, u32>,
    free_point_names: Vec<Point>,
    dummy_names: Vec<String>,
    bound_point_names: Vec<Point>,
}

impl Frame {
    fn new(e: &Expr) -> Frame {
        let free_index_names: Vec<String> = e.free_indices.iter().cloned().collect();
        let mut free_points: BTreeSet<Point> = e.free_points.clone();
        for t in &e.terms {
            free_points.extend(
                t.referenced_points()
                    .into_iter()
                    .filter(|p| !t.integrated.contains(p)),
            );
        }
        let free_point_names: Vec<Point> = free_points.into_iter().collect();
        let max_dummies = e
            .terms
            .iter()
            .map(|t| t.index_counts().len())
            .max()
            .unwrap_or(0);
        let max_bound = e
            .terms
            .iter()
            .map(|t| t.integrated.len())
            .max()
            .unwrap_or(0);
        Frame {
            free_index_rank: free_index_names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), i as u32))
                .collect(),
            dummy_names: dummy_name_sequence(&e.free_indices, max_dummies),
            free_point_rank: free_point_names
                .iter()
                .enumerate()
                .map(|(i, p)| (p.clone(), i as u32))
                .collect(),
            bound_point_names: bound_point_sequence(&free_point_names, max_bound),
            free_index_names,
            free_point_names,
        }
    }

    fn decode_index(&self, c: u32) -> Index {
        if c < FREE_BASE {
            Index::Fixed(c as u8)
        } else if c < BOUND_BASE {
            Index::Named(self.free_index_names[(c - FREE_BASE) as usize].clone())
        } else {
            Index::Named(self.dummy_names[(c - BOUND_BASE) as usize].clone())
        }
    }

    fn decode_point(&self, c: u32) -> Point {
        if c < BOUND_BASE {
            self.free_point_names[c as usize].clone()
        } else {
            self.bound_point_names[(c - BOUND_BASE) as usize].clone()
        }
    }
}

fn dummy_name_sequence(free: &BTreeSet<String>, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    let mut round = 0usize;
    while out.len() < n {
        for base in DUMMY_NAMES {
            let name = if round == 0 {
                base.to_string()
            } else {
                format!("{base}{round}")
            };
            if !free.contains(&name) {
                out.push(name);
                if out.len() == n {
                    break;
                }
            }
        }
        round += 1;
    }
    out
}

fn bound_point_sequence(free: &[Point], n: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(n);
    let mut k = 0usize;
    while out.len() < n {
        let name = match k {
            0 => "x".to_string(),
            1 => "y".to_string(),
            _ => format!("z{}", k - 1),
        };
        let p = Point(name);
        if !free.contains(&p) {
            out.push(p);
        }
        k += 1;
    }
    out
}

/// A concrete renaming of one term's bound names to ordinals.
struct Assignment<'a> {
    frame: &'a Frame,
    dummy_ord: HashMap<&'a str, u32>,
    point_ord: HashMap<&'a Point, u32>,
}

impl Assignment<'_> {
    fn index(&self, ix: &Index) -> u32 {
        match ix {
            Index::Fixed(n) => u32::from(*n),
            Index::Named(n) => match self.frame.free_index_rank.get(n) {
                Some(r) => FREE_BASE + r,
                None => BOUND_BASE + self.dummy_ord[n.as_str()],
            },
        }
    }

    fn point(&self, p: &Point) -> u32 {
        match self.point_ord.get(p) {
            Some(o) => BOUND_BASE + o,
            None => self.frame.free_point_rank[p],
        }
    }
}

fn sort3(mut v: [u32; 3]) -> Option<([u32; 3], i8)> {
    if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
        return None;
    }
    let mut sign = 1i8;
    for i in 0..3 {
        for j in 0..2 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    Some((v, sign))
}

/// Encodes a term under an assignment; `None` marks a vanishing Levi-Civita symbol.
fn encode(t: &Term, a: &Assignment<'_>) -> Option<(Key, i8)> {
    let mut sign = 1i8;
    let mut cnumbers = Vec::with_capacity(t.cnumbers.len());
    for atom in &t.cnumbers {
        let c = match atom {
            Atom::Epsilon(ix) => {
                let (sorted, s) = sort3([a.index(&ix[0]), a.index(&ix[1]), a.index(&ix[2])])?;
                sign *= s;
                CAtom::Epsilon(sorted)
            }
            Atom::Kronecker(ix) => {
                let (p, q) = (a.index(&ix[0]), a.index(&ix[1]));
                CAtom::Kronecker([p.min(q), p.max(q)])
            }
            Atom::Coord { point, index } => CAtom::Coord(a.point(point), a.index(index)),
            Atom::Delta { from, to, derivs } => {
                let (mut f, mut g) = (a.point(from), a.point(to));
                if f > g {
                    std::mem::swap(&mut f, &mut g);
                    if derivs.len() % 2 == 1 {
                        sign = -sign;
                    }
                }
                let mut d: Vec<u32> = derivs.iter().map(|ix| a.index(ix)).collect();
                d.sort_unstable();
                CAtom::Delta(f, g, d)
            }
        };
        cnumbers.push(c);
    }
    cnumbers.sort();
    let ops = t
        .ops
        .iter()
        .map(|op| {
            let mut derivs: Vec<u32> = op.derivs.iter().map(|ix| a.index(ix)).collect();
            derivs.sort_unstable();
            COp {
                kind: match op.kind {
                    FieldKind::E => 0,
                    FieldKind::B => 1,
                },
                component: a.index(&op.component),
                point: a.point(&op.point),
                derivs,
            }
        })
        .collect();
    Some((
        Key {
            bound_points: t.integrated.len(),
            cnumbers,
            ops,
        },
        sign,
    ))
}

fn permutations(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (0..n as u32).collect();
    heap_permute(n, &mut cur, &mut out);
    out
}

fn heap_permute(k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k <= 1 {
        out.push(cur.clone());
        return;
    }
    heap_permute(k - 1, cur, out);
    for i in 0..k - 1 {
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
        heap_permute(k - 1, cur, out);
    }
}

enum Outcome {
    Zero { symmetric: bool },
    Kept(Key, i8),
}

/// Dummy names of a term in order of first use (c-numbers, then operators).
fn dummies_of(t: &Term, frame: &Frame) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    t.for_each_index(|ix| {
        if let Index::Named(n) = ix {
            if !frame.free_index_rank.contains_key(n) && !seen.contains(n) {
                seen.push(n.clone());
            }
        }
    });
    seen
}

fn canonical_key(t: &Term, frame: &Frame, permute_points: bool) -> Outcome {
    let dummies = dummies_of(t, frame);
    let bound: Vec<&Point> = t.integrated.iter().collect();
    let point_perms = if permute_points {
        permutations(bound.len())
    } else {
        vec![(0..bound.len() as u32).collect()]
    };
    let dummy_perms = if dummies.len() <= MAX_EXHAUSTIVE_DUMMIES {
        permutations(dummies.len())
    } else {
        vec![(0..dummies.len() as u32).collect()]
    };

    let mut best: Option<(Key, i8)> = None;
    let mut conflict = false;
    for pp in &point_perms {
        for dp in &dummy_perms {
            let a = Assignment {
                frame,
                dummy_ord: dummies
                    .iter()
                    .map(String::as_str)
                    .zip(dp.iter().copied())
                    .collect(),
                point_ord: bound.iter().copied().zip(pp.iter().copied()).collect(),
            };
            let Some((key, sign)) = encode(t, &a) else {
                return Outcome::Zero { symmetric: false };
            };
            match &best {
                None => best = Some((key, sign)),
                Some((bk, bs)) => match key.cmp(bk) {
                    std::cmp::Ordering::Less => {
                        best = Some((key, sign));
                        conflict = false;
                    }
                    std::cmp::Ordering::Equal if sign != *bs => conflict = true,
                    _ => {}
                },
            }
        }
    }
    match best {
        Some(_) if conflict => Outcome::Zero { symmetric: true },
        Some((k, s)) => Outcome::Kept(k, s),
        None => Outcome::Zero { symmetric: false },
    }
}

fn decode(key: &Key, coeff: Coefficient, frame: &Frame) -> Term {
    let cnumbers = key
        .cnumbers
        .iter()
        .map(|c| match c {
            CAtom::Epsilon(ix) => Atom::Epsilon(ix.map(|i| frame.decode_index(i))),
            CAtom::Kronecker(ix) => Atom::Kronecker(ix.map(|i| frame.decode_index(i))),
            CAtom::Coord(p, i) => Atom::Coord {
                point: frame.decode_point(*p),
                index: frame.decode_index(*i),
            },
            CAtom::Delta(f, g, d) => Atom::Delta {
                from: frame.decode_point(*f),
                to: frame.decode_point(*g),
                derivs: d.iter().map(|i| frame.decode_index(*i)).collect(),
            },
        })
        .collect();
    let ops = key
        .ops
        .iter()
        .map(|op| FieldOp {
            kind: if op.kind == 0 {
                FieldKind::E
            } else {
                FieldKind::B
            },
            component: frame.decode_index(op.component),
            point: frame.decode_point(op.point),
            derivs: op.derivs.iter().map(|i| frame.decode_index(*i)).collect(),
        })
        .collect();
    Term {
        coeff,
        cnumbers,
        ops,
        integrated: frame.bound_point_names[..key.bound_points]
            .iter()
            .cloned()
            .collect(),
    }
}

/// Canonical form of `e`. Idempotent; never reorders field operators.
pub fn canonicalize(e: &Expr) -> Expr {
    canonicalize_with_stats(e).0
}

pub fn canonicalize_with_stats(e: &Expr) -> (Expr, CanonStats) {
    let frame = Frame::new(e);
    let mut stats = CanonStats::default();
    // (key, units) -> (sum, member indices)
    let mut groups: HashMap<(Key, Units), (Rational64, Vec<usize>)> = HashMap::new();
    for (ti, t) in e.terms.iter().enumerate() {
        if t.coeff.is_zero() {
            continue;
        }
        match canonical_key(t, &frame, true) {
            Outcome::Zero { symmetric } => {
                if symmetric {
                    stats.symmetric_zeroes += 1;
                } else {
                    stats.epsilon_zeroes += 1;
                }
            }
            Outcome::Kept(key, sign) => {
                if t.integrated.len() > 1 {
                    if let Outcome::Kept(fixed, _) = canonical_key(t, &frame, false) {
                        if fixed != key {
                            stats.point_exchanges += 1;
                        }
                    }
                }
                let r = if sign < 0 {
                    -t.coeff.rational()
                } else {
                    t.coeff.rational()
                };
                let entry = groups
                    .entry((key, t.coeff.units()))
                    .or_insert((Rational64::zero(), Vec::new()));
                entry.0 += r;
                entry.1.push(ti);
            }
        }
    }

    let mut kept: Vec<((Key, Units), Rational64)> = Vec::new();
    for ((key, units), (sum, members)) in groups {
        if sum.is_zero() {
            if members.len() > 1 {
                let fixed: BTreeSet<Option<Key>> = members
                    .iter()
                    .map(|&i| match canonical_key(&e.terms[i], &frame, false) {
                        Outcome::Kept(k, _) => Some(k),
                        Outcome::Zero { .. } => None,
                    })
                    .collect();
                if fixed.len() > 1 {
                    stats.relabel_cancellations += 1;
                } else {
                    stats.plain_cancellations += 1;
                }
            }
            continue;
        }
        kept.push(((key, units), sum));
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));

    let terms = kept
        .into_iter()
        .map(|((key, units), r)| {
            let coeff = Coefficient::new(r, units.hbar, units.eps0, i32::from(units.imag));
            decode(&key, coeff, &frame)
        })
        .collect();
    (e.with_terms(terms), stats)
}

/// Structural equality of canonical forms; sensitive to operator order.
pub fn equal_canonical(a: &Expr, b: &Expr) -> bool {
    canonicalize(a).terms == canonicalize(b).terms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::FieldKind::{B, E};

    fn ix(s: &str) -> Index {
        Index::named(s)
    }
    fn pt(s: &str) -> Point {
        Point::new(s)
    }
    fn field(k: FieldKind, i: &str, p: &str) -> FieldOp {
        FieldOp::new(k, ix(i), pt(p))
    }

    #[test]
    fn dummy_renaming_is_alpha_invariant() {
        let t1 = Term::new(Coefficient::one())
            .with_atom(Atom::Epsilon([ix("i"), ix("a"), ix("b")]))
            .with_op(field(E, "a", "x"))
            .with_op(field(B, "b", "x"));
        let t2 = t1.rename_index("a", &ix("c")).rename_index("b", &ix("d"));
        let a = Expr::with_free(vec![t1], &["i"], &["x"]);
        let b = Expr::with_free(vec![t2], &["i"], &["x"]);
        assert_eq!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn delta_reflection_flips_derivative_sign() {
        // d/dy^k delta(y - x) == -d/dx^k delta(x - y)
        let flipped = Term::new(Coefficient::one())
            .with_atom(Atom::Delta {
                from: pt("y"),
                to: pt("x"),
                derivs: vec![ix("k")],
            })
            .with_op(field(E, "k", "x"));
        let direct = Term::new(Coefficient::from_int(-1))
            .with_atom(Atom::Delta {
                from: pt("x"),
                to: pt("y"),
                derivs: vec![ix("k")],
            })
            .with_op(field(E, "k", "x"));
        let a = Expr::with_free(vec![flipped], &[], &["x", "y"]);
        let b = Expr::with_free(vec![direct], &[], &["x", "y"]);
        assert!(equal_canonical(&a, &b));
    }

    #[test]
    fn exchange_of_integrated_points_cancels_symmetric_bracket() {
        let d = Atom::Delta {
            from: pt("x"),
            to: pt("y"),
            derivs: vec![ix("i")],
        };
        let t1 = Term::new(Coefficient::one())
            .with_atom(d.clone())
            .with_op(field(E, "m", "y"))
            .with_op(field(B, "n", "x"))
            .integrate("x")
            .integrate("y");
        let t2 = Term::new(Coefficient::one())
            .with_atom(d)
            .with_op(field(E, "m", "x"))
            .with_op(field(B, "n", "y"))
            .integrate("x")
            .integrate("y");
        let e = Expr::with_free(vec![t1, t2], &["i", "m", "n"], &[]);
        let (c, stats) = canonicalize_with_stats(&e);
        assert!(c.is_zero());
        assert_eq!(stats.relabel_cancellations, 1);
    }

    #[test]
    fn operator_order_is_semantic() {
        let eb = Term::new(Coefficient::one())
            .with_op(field(E, "i", "x"))
            .with_op(field(B, "j", "x"));
        let be = Term::new(Coefficient::one())
            .with_op(field(B, "j", "x"))
            .with_op(field(E, "i", "x"));
        let a = Expr::with_free(vec![eb], &["i", "j"], &["x"]);
        let b = Expr::with_free(vec![be], &["i", "j"], &["x"]);
        assert!(!equal_canonical(&a, &b));
    }

    #[test]
    fn antisymmetric_contraction_with_symmetric_factor_vanishes() {
        // eps(m,n,s) x^m x^n == 0
        let t = Term::new(Coefficient::one())
            .with_atom(Atom::Epsilon([ix("m"), ix("n"), ix("s")]))
            .with_atom(Atom::Coord {
                point: pt("x"),
                index: ix("m"),
            })
            .with_atom(Atom::Coord {
                point: pt("x"),
                index: ix("n"),
            })
            .with_op(field(E, "s", "x"))
            .integrate("x");
        let (c, stats) = canonicalize_with_stats(&Expr::from_terms(vec![t]));
        assert!(c.is_zero());
        assert_eq!(stats.symmetric_zeroes, 1);
    }

    #[test]
    fn repeated_concrete_epsilon_index_is_zero() {
        let t = Term::new(Coefficient::one()).with_atom(Atom::Epsilon([
            Index::Fixed(1),
            Index::Fixed(1),
            Index::Fixed(2),
        ]));
        assert!(canonicalize(&Expr::from_terms(vec![t])).is_zero());
    }

    #[test]
    fn canonical_names_skip_free_ones() {
        let t = Term::new(Coefficient::one())
            .with_atom(Atom::Epsilon([ix("i"), ix("q7"), ix("zz")]))
            .with_op(field(E, "q7", "w"))
            .with_op(field(B, "zz", "w"))
            .integrate("w");
        let c = canonicalize(&Expr::with_free(vec![t], &["i"], &[]));
        assert_eq!(c.terms[0].integrated.iter().next().unwrap().as_str(), "x");
        assert_eq!(c.terms[0].ops[0].component, ix("j"));
    }
}
