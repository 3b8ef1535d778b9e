//! Divergence extraction for component-expanded integrands.
//!
//! Single-integral terms whose factors all sit at the integration point and
//! carry at most one derivative are reduced exactly: derivative terms are
//! written as a combination of total derivatives (dropped with the surface
//! terms) and divergences `d_k F^k` times a cofactor, leaving a
//! derivative-free remainder. When no such combination exists the class falls
//! back to the trace split of the coefficient matrix.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_rational::Rational64;
use num_traits::{One, Zero};

use super::rules::trace_split;
use crate::coeff::{Coefficient, Units};
use crate::dsl::Fresh;
use crate::expr::{Atom, Expr, FieldKind, FieldOp, Index, Point, Term};

/// Concrete monomial: sorted coordinate components and an ordered operator
/// string, all at one point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Mono {
    coords: Vec<u8>,
    ops: Vec<(FieldKind, u8, Option<u8>)>,
}

impl Mono {
    fn deriv_slot(&self) -> Option<usize> {
        self.ops.iter().position(|o| o.2.is_some())
    }

    fn base(&self) -> Mono {
        Mono {
            coords: self.coords.clone(),
            ops: self.ops.iter().map(|&(k, c, _)| (k, c, None)).collect(),
        }
    }

    fn term(&self, coeff: Coefficient, p: &Point) -> Term {
        let mut t = Term::new(coeff);
        for &c in &self.coords {
            t = t.with_atom(Atom::Coord {
                point: p.clone(),
                index: Index::Fixed(c),
            });
        }
        for &(k, c, d) in &self.ops {
            let op = FieldOp::new(k, Index::Fixed(c), p.clone());
            t = t.with_op(op.with_derivs(d.map(Index::Fixed).into_iter().collect()));
        }
        t.integrated.insert(p.clone());
        t
    }
}

/// A vanishing combination: a total derivative `d_d (base)` or a divergence
/// of the field in `slot` with the rest of `base` as cofactor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Gen {
    Divergence { base: Mono, slot: usize },
    Total { base: Mono, d: u8 },
}

impl Gen {
    fn expand(&self) -> Vec<(Mono, Rational64)> {
        let mut out = Vec::new();
        match self {
            Gen::Divergence { base, slot } => {
                for k in 1..=3 {
                    let mut m = base.clone();
                    m.ops[*slot].1 = k;
                    m.ops[*slot].2 = Some(k);
                    out.push((m, Rational64::one()));
                }
            }
            Gen::Total { base, d } => {
                for r in 0..base.coords.len() {
                    if base.coords[r] == *d {
                        let mut m = base.clone();
                        m.coords.remove(r);
                        out.push((m, Rational64::one()));
                    }
                }
                for s in 0..base.ops.len() {
                    let mut m = base.clone();
                    m.ops[s].2 = Some(*d);
                    out.push((m, Rational64::one()));
                }
            }
        }
        out
    }
}

fn mono_of(t: &Term) -> Option<(Point, Mono)> {
    if t.integrated.len() != 1 {
        return None;
    }
    let p = t.integrated.iter().next()?.clone();
    let mut coords = Vec::new();
    for a in &t.cnumbers {
        match a {
            Atom::Coord {
                point,
                index: Index::Fixed(c),
            } if *point == p => coords.push(*c),
            _ => return None,
        }
    }
    coords.sort_unstable();
    let mut ops = Vec::new();
    let mut derivs = 0;
    for op in &t.ops {
        if op.point != p || op.derivs.len() > 1 {
            return None;
        }
        let c = op.component.fixed()?;
        let d = match op.derivs.first() {
            Some(d) => Some(d.fixed()?),
            None => None,
        };
        derivs += usize::from(d.is_some());
        ops.push((op.kind, c, d));
    }
    (derivs <= 1).then_some((p, Mono { coords, ops }))
}

const MAX_GENERATORS: usize = 4096;

/// Finds `alpha`, `beta` with `sum(derivative terms) = sum alpha T + sum beta G`.
fn solve(target: &BTreeMap<Mono, Rational64>) -> Option<Vec<(Gen, Rational64)>> {
    let mut gens: Vec<Gen> = Vec::new();
    let mut seen_gen: HashMap<Gen, usize> = HashMap::new();
    let mut seen_mono: HashMap<Mono, ()> = HashMap::new();
    let mut queue: VecDeque<Mono> = target.keys().cloned().collect();
    while let Some(m) = queue.pop_front() {
        if seen_mono.insert(m.clone(), ()).is_some() {
            continue;
        }
        let Some(slot) = m.deriv_slot() else { continue };
        let d = m.ops[slot].2.expect("derivative present");
        let mut open = m.base();
        open.ops[slot].1 = 0;
        for g in [
            Gen::Divergence { base: open, slot },
            Gen::Total { base: m.base(), d },
        ] {
            if seen_gen.contains_key(&g) {
                continue;
            }
            for (x, _) in g.expand() {
                if x.deriv_slot().is_some() {
                    queue.push_back(x);
                }
            }
            seen_gen.insert(g.clone(), gens.len());
            gens.push(g);
            if gens.len() > MAX_GENERATORS {
                return None;
            }
        }
    }
    // Divergences before total derivatives, so pivots prefer them.
    gens.sort();
    let mut rows: BTreeMap<Mono, usize> = BTreeMap::new();
    for m in seen_mono.keys().filter(|m| m.deriv_slot().is_some()) {
        let n = rows.len();
        rows.entry(m.clone()).or_insert(n);
    }
    let ncol = gens.len();
    let mut a = vec![vec![Rational64::zero(); ncol + 1]; rows.len()];
    for (j, g) in gens.iter().enumerate() {
        for (m, c) in g.expand() {
            if let Some(&i) = rows.get(&m) {
                a[i][j] += c;
            }
        }
    }
    for (m, c) in target {
        a[rows[m]][ncol] += *c;
    }
    let pivots = rref(&mut a, ncol);
    if a.iter()
        .any(|row| row[..ncol].iter().all(Zero::is_zero) && !row[ncol].is_zero())
    {
        return None;
    }
    Some(
        pivots
            .into_iter()
            .map(|(r, c)| (gens[c].clone(), a[r][ncol]))
            .filter(|(_, v)| !v.is_zero())
            .collect(),
    )
}

/// Reduced row echelon form in place; returns (row, column) of each pivot.
fn rref(a: &mut [Vec<Rational64>], ncol: usize) -> Vec<(usize, usize)> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncol {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = Rational64::one() / a[r][c];
        for x in a[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c];
                let (src, dst) = if i < r {
                    let (lo, hi) = a.split_at_mut(r);
                    (&hi[0], &mut lo[i])
                } else {
                    let (lo, hi) = a.split_at_mut(i);
                    (&lo[r], &mut hi[0])
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= f * *s;
                }
            }
        }
        pivots.push((r, c));
        r += 1;
        if r == a.len() {
            break;
        }
    }
    pivots
}

fn coeff(r: Rational64, u: Units) -> Coefficient {
    Coefficient::new(r, u.hbar, u.eps0, i32::from(u.imag))
}

/// Splits `e` into a remainder and a divergence part.
///
/// Each divergence term carries a summed pair `d_s F^s`. Total derivatives
/// used along the way are dropped; this relies on the surface-term assumption
/// already made by delta integration.
pub fn divergence_extract(e: &Expr) -> (Expr, Expr) {
    let mut classes: BTreeMap<(Point, Units), BTreeMap<Mono, Rational64>> = BTreeMap::new();
    let mut other = Vec::new();
    for t in &e.terms {
        match mono_of(t) {
            Some((p, m)) => {
                *classes
                    .entry((p, t.coeff.units()))
                    .or_default()
                    .entry(m)
                    .or_insert_with(Rational64::zero) += t.coeff.rational();
            }
            None => other.push(t.clone()),
        }
    }
    let mut fresh = Fresh::for_expr(e);
    let s = Index::Named(fresh.index());
    let mut remaining = Vec::new();
    let mut divergence = Vec::new();
    for ((p, units), monos) in classes {
        let (d1, d0): (BTreeMap<_, _>, BTreeMap<_, _>) = monos
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .partition(|(m, _)| m.deriv_slot().is_some());
        let solution = if d1.is_empty() {
            Some(Vec::new())
        } else {
            solve(&d1)
        };
        let Some(solution) = solution else {
            other.extend(
                d1.iter()
                    .chain(d0.iter())
                    .map(|(m, c)| m.term(coeff(*c, units), &p)),
            );
            continue;
        };
        let mut rest = d0;
        for (g, beta) in solution {
            match g {
                Gen::Total { .. } => {
                    for (m, c) in g.expand() {
                        if m.deriv_slot().is_none() {
                            *rest.entry(m).or_insert_with(Rational64::zero) -= beta * c;
                        }
                    }
                }
                Gen::Divergence { base, slot } => {
                    let mut t = base.term(coeff(beta, units), &p);
                    t.ops[slot].component = s.clone();
                    t.ops[slot].derivs = vec![s.clone()];
                    divergence.push(t);
                }
            }
        }
        remaining.extend(
            rest.into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(m, c)| m.term(coeff(c, units), &p)),
        );
    }
    let (rest, div) = trace_split(&e.with_terms(other));
    remaining.extend(rest.terms);
    divergence.extend(div.terms);
    (e.with_terms(remaining), e.with_terms(divergence))
}
