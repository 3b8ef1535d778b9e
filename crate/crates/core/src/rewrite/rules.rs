use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::Zero;

use super::{AxiomTable, ConstraintSet};
use crate::coeff::{Coefficient, Units};
use crate::dsl::{lower_with, monos_to_surface, print_surface, to_monos, CommMode, Fresh, Surface};
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr, FieldOp, Index, Point, Term};

/// Expands every commutator by bilinearity and the fixed Leibniz forms until
/// only commutators of two field operators remain. Named operators are
/// inlined from their definitions first.
pub fn expand_commutators(s: &Surface) -> Result<Surface> {
    let mut fresh = Fresh::for_surface(s);
    let monos = to_monos(s, &mut fresh, CommMode::Expand)?;
    Ok(monos_to_surface(&monos))
}

/// Replaces each primitive commutator by its axiom value and lowers the tree.
pub fn apply_axioms(s: &Surface, table: &AxiomTable) -> Result<Expr> {
    if !s.only_primitive_comms() {
        return Err(Error::Contract(format!(
            "apply_axioms needs primitive commutators only: {}",
            print_surface(s)
        )));
    }
    lower_with(s, &mut |a, b, fresh| Ok(table.primitive(a, b, fresh)))
}

fn summed(t: &Term, free: &std::collections::BTreeSet<String>, n: &str) -> bool {
    !free.contains(n) && t.index_counts().get(n) == Some(&2)
}

/// Cyclic rotation of `eps` putting `first` in front. Cyclic shifts keep the sign.
fn rotate(eps: &[Index; 3], first: &Index) -> [Index; 3] {
    let p = eps.iter().position(|x| x == first).expect("index present");
    [
        eps[p].clone(),
        eps[(p + 1) % 3].clone(),
        eps[(p + 2) % 3].clone(),
    ]
}

/// Replaces every pair of Levi-Civita symbols sharing a summed index by
/// `eps(s,a,b) eps(s,c,d) = delta_ac delta_bd - delta_ad delta_bc`. Pairs
/// sharing two or three summed indices are reduced to `2 delta` and `6`.
pub fn contract_epsilon_pairs(e: &Expr) -> Expr {
    let mut out = Vec::new();
    let mut work: Vec<Term> = e.terms.iter().rev().cloned().collect();
    while let Some(t) = work.pop() {
        match find_epsilon_pair(&t, e) {
            None => out.push(t),
            Some((a, b, shared)) => {
                let (Atom::Epsilon(ea), Atom::Epsilon(eb)) = (&t.cnumbers[a], &t.cnumbers[b])
                else {
                    unreachable!()
                };
                let s = Index::Named(shared[0].clone());
                let [_, p, q] = rotate(ea, &s);
                let [_, r, u] = rotate(eb, &s);
                let mut rest = t.clone();
                rest.cnumbers = t
                    .cnumbers
                    .iter()
                    .enumerate()
                    .filter(|(n, _)| *n != a && *n != b)
                    .map(|(_, x)| x.clone())
                    .collect();
                let mut plus = rest
                    .clone()
                    .with_atom(Atom::Kronecker([p.clone(), r.clone()]));
                plus = plus.with_atom(Atom::Kronecker([q.clone(), u.clone()]));
                let mut minus = rest.clone().with_atom(Atom::Kronecker([p, u]));
                minus = minus.with_atom(Atom::Kronecker([q, r]));
                minus.coeff = -minus.coeff;
                let mut produced = vec![plus, minus];
                if shared.len() > 1 {
                    let tmp = contract_deltas(&e.with_terms(produced));
                    produced = tmp.terms;
                }
                for x in produced.into_iter().rev() {
                    work.push(x);
                }
            }
        }
    }
    e.with_terms(out)
}

fn find_epsilon_pair(t: &Term, e: &Expr) -> Option<(usize, usize, Vec<String>)> {
    let eps: Vec<(usize, &[Index; 3])> = t
        .cnumbers
        .iter()
        .enumerate()
        .filter_map(|(n, a)| match a {
            Atom::Epsilon(ix) => Some((n, ix)),
            _ => None,
        })
        .collect();
    for (x, &(a, ea)) in eps.iter().enumerate() {
        for &(b, eb) in &eps[x + 1..] {
            let mut shared: Vec<String> = ea
                .iter()
                .filter_map(|i| i.name())
                .filter(|n| eb.iter().any(|j| j.name() == Some(n)))
                .filter(|n| summed(t, &e.free_indices, n))
                .map(str::to_string)
                .collect();
            shared.sort();
            shared.dedup();
            if !shared.is_empty() {
                return Some((a, b, shared));
            }
        }
    }
    None
}

/// Eliminates Kronecker symbols: concrete ones evaluate, a summed index is
/// substituted by its partner, `delta_ss` summed gives 3.
pub fn contract_deltas(e: &Expr) -> Expr {
    let mut out = Vec::new();
    'term: for t in &e.terms {
        let mut t = t.clone();
        loop {
            let mut fired = false;
            for n in 0..t.cnumbers.len() {
                let Atom::Kronecker([a, b]) = &t.cnumbers[n] else {
                    continue;
                };
                let (a, b) = (a.clone(), b.clone());
                let is_summed = |ix: &Index, t: &Term| {
                    ix.name().is_some_and(|nm| summed(t, &e.free_indices, nm))
                };
                match (&a, &b) {
                    (Index::Fixed(x), Index::Fixed(y)) => {
                        if x != y {
                            continue 'term;
                        }
                        t.cnumbers.remove(n);
                    }
                    (Index::Named(x), Index::Named(y)) if x == y && !e.free_indices.contains(x) => {
                        t.cnumbers.remove(n);
                        t.coeff = t.coeff * Coefficient::from_int(3);
                    }
                    _ if is_summed(&a, &t) => {
                        let name = a.name().unwrap().to_string();
                        t.cnumbers.remove(n);
                        t = t.rename_index(&name, &b);
                    }
                    _ if is_summed(&b, &t) => {
                        let name = b.name().unwrap().to_string();
                        t.cnumbers.remove(n);
                        t = t.rename_index(&name, &a);
                    }
                    _ => continue,
                }
                fired = true;
                break;
            }
            if !fired {
                break;
            }
        }
        out.push(t);
    }
    e.with_terms(out)
}

/// Moves the derivatives of the single delta in each term onto the other
/// factors at one of its points (integration by parts, surface terms
/// dropped), then sifts the delta away. See `ibp_side` for which point.
///
/// Errors on a term with two or more deltas, and on a derivative taken at a
/// free point against an integrated one.
pub fn integrate_out_delta(e: &Expr) -> Result<Expr> {
    let mut out = Vec::new();
    for t in &e.terms {
        let n = t.deltas().count();
        if n > 1 {
            return Err(Error::UnsupportedShape(n));
        }
        match integrate_term(t)? {
            Some(v) => out.extend(v),
            None => out.push(t.clone()),
        }
    }
    Ok(e.with_terms(out))
}

/// Like [`integrate_out_delta`], but terms with several deltas pass through
/// untouched. Returns the number of such terms.
pub fn integrate_out_single_deltas(e: &Expr) -> Result<(Expr, usize)> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for t in &e.terms {
        if t.deltas().count() > 1 {
            skipped += 1;
            out.push(t.clone());
            continue;
        }
        match integrate_term(t)? {
            Some(v) => out.extend(v),
            None => out.push(t.clone()),
        }
    }
    Ok((e.with_terms(out), skipped))
}

fn integrate_term(t: &Term) -> Result<Option<Vec<Term>>> {
    let Some(pos) = t
        .cnumbers
        .iter()
        .position(|a| matches!(a, Atom::Delta { .. }))
    else {
        return Ok(None);
    };
    let Atom::Delta {
        from: p,
        to: q,
        derivs,
    } = &t.cnumbers[pos]
    else {
        unreachable!()
    };
    let (p_int, q_int) = (t.integrated.contains(p), t.integrated.contains(q));
    if p == q || (!p_int && !q_int) {
        return Ok(None);
    }
    if !derivs.is_empty() && !p_int {
        return Err(Error::DerivativeOnFreePoint(p.0.clone()));
    }
    let mut base = t.clone();
    base.cnumbers.remove(pos);
    let mut current = vec![base];
    for d in derivs {
        // d/dp delta(p-q) = -d/dq delta(p-q); either side may take the derivative.
        let side = if q_int && ibp_side(t, p, q, d) == q {
            q
        } else {
            p
        };
        let sign = if side == p { -1 } else { 1 };
        current = current
            .iter()
            .flat_map(|x| differentiate(x, side, d))
            .map(|mut x| {
                x.coeff = x.coeff * Coefficient::from_int(sign);
                x
            })
            .collect();
    }
    let (gone, keep) = if q_int { (q, p) } else { (p, q) };
    Ok(Some(
        current
            .into_iter()
            .map(|mut x| {
                x.integrated.remove(gone);
                x.map_points(|pt| if pt == gone { keep.clone() } else { pt.clone() })
            })
            .collect(),
    ))
}

/// Point whose factors receive the derivative `d`: a field whose summed
/// component is `d` wins (the result is a divergence), otherwise the point
/// holding the last operator of the string.
fn ibp_side<'a>(t: &Term, p: &'a Point, q: &'a Point, d: &Index) -> &'a Point {
    if d.name().is_some() {
        for side in [p, q] {
            if t.ops
                .iter()
                .any(|op| &op.point == side && &op.component == d)
            {
                return side;
            }
        }
    }
    match t
        .ops
        .iter()
        .rev()
        .find(|op| &op.point == p || &op.point == q)
    {
        Some(op) if &op.point == q => q,
        _ => p,
    }
}

/// Product rule for `d/dp^d` over the factors of `t` that live at `p`.
fn differentiate(t: &Term, p: &Point, d: &Index) -> Vec<Term> {
    let mut out = Vec::new();
    for (n, a) in t.cnumbers.iter().enumerate() {
        if let Atom::Coord { point, index } = a {
            if point == p {
                let mut x = t.clone();
                x.cnumbers[n] = Atom::Kronecker([d.clone(), index.clone()]);
                out.push(x);
            }
        }
    }
    for (n, op) in t.ops.iter().enumerate() {
        if &op.point == p {
            let mut x = t.clone();
            let mut derivs = op.derivs.clone();
            derivs.push(d.clone());
            x.ops[n] = FieldOp {
                derivs: Vec::new(),
                ..op.clone()
            }
            .with_derivs(derivs);
            out.push(x);
        }
    }
    out
}

/// Deletes terms holding a summed divergence `d_k F^k` of a field whose
/// divergence is constrained to vanish.
pub fn apply_field_constraints(e: &Expr, c: ConstraintSet) -> Expr {
    let terms = e
        .terms
        .iter()
        .filter(|t| {
            !t.ops
                .iter()
                .any(|op| op.is_divergence(&e.free_indices) && c.kills(op.kind))
        })
        .cloned()
        .collect();
    e.with_terms(terms)
}

type GroupKey = (Vec<Atom>, Vec<FieldOp>, Vec<Point>, Units, usize);

/// Trace split of derivative terms, used when exact elimination fails.
///
/// Terms identical except for the component and derivative index of their
/// one differentiated field form a group with a 3x3 coefficient matrix
/// `M[component, derivative]`. The trace part `(tr M / 3) d_s F^s` goes to
/// the divergence part; the traceless rest stays. Terms with symbolic
/// indices are not grouped.
pub(crate) fn trace_split(e: &Expr) -> (Expr, Expr) {
    let mut remaining = Vec::new();
    let mut order: Vec<GroupKey> = Vec::new();
    let mut groups: HashMap<GroupKey, ([[Rational64; 3]; 3], Vec<Term>)> = HashMap::new();
    for t in &e.terms {
        match group_slot(t) {
            Some((key, c, d)) => {
                let entry = groups.entry(key.clone()).or_insert_with(|| {
                    order.push(key);
                    ([[Rational64::zero(); 3]; 3], Vec::new())
                });
                entry.0[c][d] += t.coeff.rational();
                entry.1.push(t.clone());
            }
            None => remaining.push(t.clone()),
        }
    }
    let mut fresh = Fresh::for_expr(e);
    let s = Index::Named(fresh.index());
    let mut divergence = Vec::new();
    for key in order {
        let (m, members) = groups.remove(&key).expect("group present");
        let trace = (m[0][0] + m[1][1] + m[2][2]) / Rational64::from(3);
        if trace.is_zero() {
            remaining.extend(members);
            continue;
        }
        let (cnumbers, ops, integrated, units, slot) = key;
        let build = |r: Rational64, comp: Index, der: Index| {
            let mut ops = ops.clone();
            ops[slot] = FieldOp {
                component: comp,
                derivs: vec![der],
                ..ops[slot].clone()
            };
            Term {
                coeff: Coefficient::new(r, units.hbar, units.eps0, i32::from(units.imag)),
                cnumbers: cnumbers.clone(),
                ops,
                integrated: integrated.iter().cloned().collect(),
            }
        };
        divergence.push(build(trace, s.clone(), s.clone()));
        for c in 0..3 {
            for d in 0..3 {
                let r = if c == d { m[c][d] - trace } else { m[c][d] };
                if !r.is_zero() {
                    remaining.push(build(
                        r,
                        Index::Fixed(c as u8 + 1),
                        Index::Fixed(d as u8 + 1),
                    ));
                }
            }
        }
    }
    (e.with_terms(remaining), e.with_terms(divergence))
}

fn group_slot(t: &Term) -> Option<(GroupKey, usize, usize)> {
    let mut named = false;
    t.for_each_index(|ix| named |= ix.name().is_some());
    if named {
        return None;
    }
    let mut with_derivs = t
        .ops
        .iter()
        .enumerate()
        .filter(|(_, op)| !op.derivs.is_empty());
    let (slot, op) = with_derivs.next()?;
    if with_derivs.next().is_some() || op.derivs.len() != 1 {
        return None;
    }
    let c = op.component.fixed()? as usize - 1;
    let d = op.derivs[0].fixed()? as usize - 1;
    let mut ops = t.ops.clone();
    ops[slot] = FieldOp {
        component: Index::Fixed(0),
        derivs: vec![Index::Fixed(0)],
        ..op.clone()
    };
    let key = (
        t.cnumbers.clone(),
        ops,
        t.integrated.iter().cloned().collect(),
        t.coeff.units(),
        slot,
    );
    Some((key, c, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, parse_expr};
    use crate::expr::{canonicalize, equal_canonical, expand_concrete};
    use crate::rewrite::divergence_extract;

    fn free(mut e: Expr, idx: &[&str]) -> Expr {
        e.free_indices = idx.iter().map(|s| s.to_string()).collect();
        e
    }

    #[test]
    fn four_operator_commutator_two_terms() {
        let s = parse("comm(E[k](x)*B[l](x), E[m](y)*B[n](y))").unwrap();
        let got = expand_commutators(&s).unwrap();
        assert_eq!(
            print_surface(&got),
            "-E[k](x)*comm(E[m](y), B[l](x))*B[n](y) + E[m](y)*comm(E[k](x), B[n](y))*B[l](x)"
        );
        assert_eq!(got.count_comms(), 2);
    }

    #[test]
    fn like_commutator_vanishes() {
        let s = parse("comm(E[i](x), E[j](y))").unwrap();
        assert_eq!(print_surface(&expand_commutators(&s).unwrap()), "0");
    }

    #[test]
    fn bilinear_in_second_slot() {
        let s = parse("comm(E[i](x), B[j](y) + B[k](z))").unwrap();
        assert_eq!(
            print_surface(&expand_commutators(&s).unwrap()),
            "comm(E[i](x), B[j](y)) + comm(E[i](x), B[k](z))"
        );
    }

    #[test]
    fn axioms_need_primitive_commutators() {
        let s = parse("comm(E[k](x)*B[l](x), E[m](y))").unwrap();
        assert!(matches!(
            apply_axioms(&s, &AxiomTable::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn epsilon_pair_one_shared() {
        let e = free(
            parse_expr("eps[i,k,l]*eps[k,n,s]").unwrap(),
            &["i", "l", "n", "s"],
        );
        let got = contract_epsilon_pairs(&e);
        let want = free(
            parse_expr("delta[l,n]*delta[i,s] - delta[l,s]*delta[i,n]").unwrap(),
            &["i", "l", "n", "s"],
        );
        assert!(equal_canonical(&got, &want), "{got}");
        let e = free(
            parse_expr("eps[i,j,k]*eps[k,m,n]").unwrap(),
            &["i", "j", "m", "n"],
        );
        let want = free(
            parse_expr("delta[i,m]*delta[j,n] - delta[i,n]*delta[j,m]").unwrap(),
            &["i", "j", "m", "n"],
        );
        assert!(equal_canonical(&contract_epsilon_pairs(&e), &want));
    }

    #[test]
    fn epsilon_pair_two_and_three_shared() {
        let e = parse_expr("eps[i,k,l]*eps[k,l,s]").unwrap();
        let got = contract_epsilon_pairs(&e);
        assert!(
            equal_canonical(&got, &parse_expr("2*delta[i,s]").unwrap()),
            "{got}"
        );
        let e = parse_expr("eps[i,j,k]*eps[i,j,k]").unwrap();
        assert!(equal_canonical(
            &contract_epsilon_pairs(&e),
            &parse_expr("6").unwrap()
        ));
        let e = parse_expr("eps[i,j,k]*eps[j,i,k]").unwrap();
        assert!(equal_canonical(
            &contract_epsilon_pairs(&e),
            &parse_expr("-6").unwrap()
        ));
    }

    #[test]
    fn kronecker_substitution() {
        let e = parse_expr("delta[l,n]*E[m](x)*B[l](x)").unwrap();
        let got = contract_deltas(&e);
        assert_eq!(got.terms[0].cnumbers, vec![]);
        assert!(equal_canonical(
            &got,
            &parse_expr("E[m](x)*B[n](x)").unwrap()
        ));
        let e = parse_expr("delta[1,2]*E[1](x) + delta[3,3]*E[2](x)").unwrap();
        assert!(equal_canonical(
            &contract_deltas(&e),
            &parse_expr("E[2](x)").unwrap()
        ));
        let e = parse_expr("delta[s,s]").unwrap();
        assert!(equal_canonical(
            &contract_deltas(&e),
            &parse_expr("3").unwrap()
        ));
    }

    #[test]
    fn integration_by_parts_moves_derivative() {
        let e = free(
            parse_expr("int(x)(int(y)(B[1](y)*E[2](x)*ddelta(x,y)d[x,i]))").unwrap(),
            &["i"],
        );
        let got = integrate_out_delta(&e).unwrap();
        let want = free(
            parse_expr("-int(x)(B[1](x)*E[2](x)d[x,i])").unwrap(),
            &["i"],
        );
        assert!(equal_canonical(&got, &want), "{got}");
    }

    #[test]
    fn derivative_on_coordinate_gives_kronecker() {
        // E^n(y) x^n B^i(x) d/dx^j delta(x-y) -> -E^n(x)[delta_jn + x^n d_j] B^i(x)
        let e = free(
            parse_expr("int(x)(int(y)(x[n](x)*E[n](y)*B[i](x)*ddelta(x,y)d[x,j]))").unwrap(),
            &["i", "j"],
        );
        let got = contract_deltas(&integrate_out_delta(&e).unwrap());
        let want = free(
            parse_expr("-int(x)(E[j](x)*B[i](x)) - int(x)(x[n](x)*E[n](x)*B[i](x)d[x,j])").unwrap(),
            &["i", "j"],
        );
        assert!(equal_canonical(&got, &want), "{got}");
    }

    #[test]
    fn sifting_without_derivative() {
        let e = parse_expr("int(x)(int(y)(E[1](x)*B[2](y)*ddelta(x,y)))").unwrap();
        let got = integrate_out_delta(&e).unwrap();
        assert!(equal_canonical(
            &got,
            &parse_expr("int(x)(E[1](x)*B[2](x))").unwrap()
        ));
        let e = parse_expr("int(y)(E[1](y)*ddelta(x,y))").unwrap();
        let got = integrate_out_delta(&e).unwrap();
        assert!(
            equal_canonical(&got, &parse_expr("E[1](x)").unwrap()),
            "{got}"
        );
    }

    #[test]
    fn refusals() {
        let e = parse_expr("int(y)(E[1](y)*ddelta(x,y)d[x,1])").unwrap();
        assert!(
            matches!(integrate_out_delta(&e), Err(Error::DerivativeOnFreePoint(p)) if p == "x")
        );
        let e = parse_expr("int(y)(ddelta(x,y)*ddelta(x,y)d[x,1])").unwrap();
        assert!(matches!(
            integrate_out_delta(&e),
            Err(Error::UnsupportedShape(2))
        ));
        let (same, skipped) = integrate_out_single_deltas(&e).unwrap();
        assert_eq!(skipped, 1);
        assert_eq!(same, e);
    }

    #[test]
    fn constraints_kill_divergences_only() {
        let e = free(
            parse_expr("eps[i,j,m]*E[m](x)*B[k](x)d[x,k]").unwrap(),
            &["i", "j"],
        );
        assert!(apply_field_constraints(&e, ConstraintSet::charge_free()).is_zero());
        let off = ConstraintSet {
            div_e_zero: true,
            div_b_zero: false,
        };
        assert_eq!(apply_field_constraints(&e, off), e);
        let e = parse_expr("E[2](x)d[x,1]").unwrap();
        assert_eq!(apply_field_constraints(&e, ConstraintSet::charge_free()), e);
    }

    #[test]
    fn identity_matrix_is_pure_divergence() {
        let e = canonicalize(
            &parse_expr(
                "int(x)(x[3](x)*E[1](x)d[x,1]*B[2](x) + x[3](x)*E[2](x)d[x,2]*B[2](x) + x[3](x)*E[3](x)d[x,3]*B[2](x))",
            )
            .unwrap(),
        );
        let (rest, div) = divergence_extract(&e);
        assert!(rest.is_zero(), "{rest}");
        let want = parse_expr("int(x)(x[3](x)*E[s](x)d[x,s]*B[2](x))").unwrap();
        assert!(equal_canonical(&div, &want), "{div}");
        assert!(apply_field_constraints(&div, ConstraintSet::charge_free()).is_zero());
        assert!(equal_canonical(&expand_concrete(&div), &e));
    }

    #[test]
    fn traceless_matrix_has_no_divergence() {
        let e = canonicalize(
            &parse_expr(
                "int(x)(E[1](x)d[x,1]*B[2](x) - E[2](x)d[x,2]*B[2](x) + E[1](x)d[x,3]*B[2](x))",
            )
            .unwrap(),
        );
        let (rest, div) = divergence_extract(&e);
        assert!(div.is_zero());
        assert!(equal_canonical(&rest, &e));
    }
}
